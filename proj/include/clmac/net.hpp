#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "clmac/rng.hpp"

namespace clmac {

// Layer widths of the dueling action-value network. Two input trunks (one
// over the flattened decision history, one over the per-channel normalized
// throughputs) are concatenated and feed two heads: a scalar state value V
// and per-action advantages A, combined as Q = V + A - mean(A).
struct NetDims {
  int hist = 0;     // flattened history width
  int ratio = 0;    // one per channel
  int actions = 0;  // (max_packet_len + 1) * channels
  int trunk = 64;
  int s1 = 64;
  int s2 = 32;

  void validate() const;
  bool operator==(const NetDims&) const = default;
};

// All learnable arrays. Kept as a standalone struct so gradients and
// optimizer moments reuse the same shapes.
struct NetParams {
  Eigen::MatrixXd W_hist, W_ratio;        // trunks
  Eigen::VectorXd b_hist, b_ratio;
  Eigen::MatrixXd Wv1, Wv2, Wa1, Wa2;     // stream hidden layers
  Eigen::VectorXd bv1, bv2, ba1, ba2;
  Eigen::VectorXd wv3;                    // value head (dot product)
  double bv3 = 0.0;
  Eigen::MatrixXd Wa3;                    // advantage head
  Eigen::VectorXd ba3;

  static NetParams zeros(const NetDims&);

  // Flat views over every parameter array, in a fixed order. bv3 is exposed
  // through a one-element block.
  std::vector<std::pair<double*, long>> blocks();
  std::vector<std::pair<const double*, long>> blocks() const;
  long count() const;
};

struct ValueNet {
  NetDims dims;
  NetParams p;
};

// Fan-in scaled uniform init, biases zero.
ValueNet make_net(const NetDims& dims, Rng& rng);

// Forward pass intermediates, retained for the backward pass.
struct Forward {
  Eigen::VectorXd h1, h2, z, v1, v2, a1, a2, A, Q;
  double V = 0.0;
};

Forward forward(const ValueNet& net, const Eigen::VectorXd& x_hist,
                const Eigen::VectorXd& x_ratio);

Eigen::VectorXd q_values(const ValueNet& net, const Eigen::VectorXd& x_hist,
                         const Eigen::VectorXd& x_ratio);

// Gradient of the squared TD error 0.5 * (Q(s,a) - y)^2 with respect to every
// parameter, computed analytically from the stored forward pass.
NetParams backward(const ValueNet& net, const Forward& fwd, const Eigen::VectorXd& x_hist,
                   const Eigen::VectorXd& x_ratio, int action, double target);

// Lowest index wins ties.
int argmax(const Eigen::VectorXd& q);

// Plain gradient descent by default; Adam moments are kept when enabled.
struct Optimizer {
  enum class Kind { SGD, Adam };
  Kind kind = Kind::SGD;
  double lr = 0.001;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  NetParams m, v;

  static Optimizer make(Kind kind, double lr, const NetDims& dims);
  void step(NetParams& params, const NetParams& grad);
};

// One replay transition, stored pre-encoded (canonical space).
struct Transition {
  Eigen::VectorXd s_hist, s_ratio;
  int action = 0;   // canonical action index
  double reward = 0.0;
  int r_len = 0;    // 0 for sensing
  Eigen::VectorXd n_hist, n_ratio;
};

// Fixed-capacity FIFO ring. Once full, the oldest transition is overwritten.
class ReplayMemory {
 public:
  explicit ReplayMemory(size_t capacity) : cap_(capacity) {}

  void push(Transition t);
  size_t size() const { return data_.size(); }
  size_t capacity() const { return cap_; }
  const Transition& at(size_t i) const { return data_[i]; }

  // Uniform sample of k distinct stored transitions.
  std::vector<const Transition*> sample(Rng& rng, size_t k) const;

 private:
  friend ReplayMemory load_replay(std::istream&);
  friend void save_replay(const ReplayMemory&, std::ostream&);

  size_t cap_;
  size_t next_ = 0;
  std::vector<Transition> data_;
};

// Bit-exact binary round-trip for parameter snapshots. Loading validates the
// magic, version and dims and throws std::runtime_error on any mismatch.
void save_net(const ValueNet& net, std::ostream& os);
ValueNet load_net(std::istream& is);
void save_replay(const ReplayMemory& mem, std::ostream& os);
ReplayMemory load_replay(std::istream& is);

// Raw parameter block io for already-shaped arrays (optimizer moments).
void save_params_raw(const NetParams& p, std::ostream& os);
void load_params_raw(NetParams& p, std::istream& is);

}  // namespace clmac
