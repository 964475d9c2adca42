#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clmac/continual.hpp"
#include "clmac/fairness.hpp"
#include "clmac/net.hpp"
#include "clmac/sim.hpp"

namespace clmac {

struct Hyperparams {
  int R = 5;               // max packet length
  int channels = 3;
  int H = 4;               // history depth
  int memory = 1000;       // replay capacity (FIFO)
  int batch = 32;
  double gamma = 0.9;
  double lr = 0.001;
  double eps0 = 1.0;
  double eps_floor = 0.005;
  double eps_decay = 0.999;  // multiplicative, per decision step
  int train_every = 10;      // decision steps between batch updates
  int sync_every = 50;       // decision steps between target syncs
  double M = 5.0;            // fairness penalty weight
  double mu = 0.1;           // busy/idle reward
  int trunk = 64, s1 = 64, s2 = 32;
  bool adam = true;          // adaptive optimizer; plain gradient descent if false

  int num_actions() const { return (R + 1) * channels; }
  int hist_width() const { return H * (4 + (R + 1) + channels); }
  int state_width() const { return hist_width() + channels; }
  NetDims net_dims() const {
    return {hist_width(), channels, num_actions(), trunk, s1, s2};
  }
  void validate() const;
};

// Fixed-width encoding of a decision-time state: per history entry a one-hot
// over the four observation kinds, a one-hot over packet lengths 0..R and a
// one-hot over channels (null entries encode as all-zero), followed by the
// per-channel normalized throughputs clipped to [0, 2].
Eigen::VectorXd encode_state(const AgentState& s, int H, int R, int channels);

// Reward for a resolved action: transmissions earn the packet length less a
// fairness penalty M * max(x_c - chi_c, 0) on the acted-on channel, negated
// on collision; sensing earns the fixed mu either way.
double compute_reward(Observation obs, int r, double x_c, double chi_c, double M, double mu);

// TD target with the transmission length folded into the discount:
//   Y = (1 - gamma^r) / ((1 - gamma) r) * reward + gamma^r * Qhat(s', a*)
// where a* is the online network's argmax over s' and Qhat comes from the
// target network. Sensing (r_len 0) uses r = 1, collapsing to the standard
// one-step target reward + gamma * Qhat.
double td_target(const Transition& t, const ValueNet& online, const ValueNet& target,
                 double gamma);

double decay_epsilon(double eps, double decay, double floor);

enum class AgentKind { CLD3QL, D3QL, Random };

// One row of the training trace CSV.
struct TraceRow {
  long decision_step;
  long slot;
  double eps;
  int action_r;
  int action_c;
  double reward = 0.0;
  bool has_loss = false;
  double td_loss = 0.0;
};

// The learning agent. Drives epsilon-greedy action selection, replay,
// batched training with averaged gradients, periodic target syncs, and the
// per-context snapshot registry.
//
// In CLD3QL mode announcements are canonicalized: a context equal to a known
// one up to channel relabeling resumes that snapshot through its permutation.
// In D3QL mode the agent keeps training one snapshot continuously and every
// announcement only registers a fresh bookkeeping key ("always new to it").
// Random ignores announcements and picks uniform actions.
class D3QLAgent {
 public:
  D3QLAgent(AgentKind kind, const Hyperparams& hp, std::uint64_t seed);

  // Context-change announcement, delivered before the slot's decision.
  void announce(const Context& ctx, long slot);

  // Called at a decision slot with the current per-channel normalized
  // throughputs. Completes the previous transition (replay push, training
  // cadence, epsilon decay) and returns the next action in environment space.
  Action decide(const Eigen::VectorXd& env_ratios, long slot);

  // Called when the pending action resolves, with the reward computed by the
  // caller from the post-outcome ledger.
  void resolve(Observation obs, double reward);

  // Discards any unresolved action (end of run).
  void abort_pending() { pending_.reset(); }

  double epsilon() const { return eps_; }
  long decision_steps() const { return decisions_; }
  size_t registry_size() const;
  std::vector<ContextRegistry::Entry> registry_entries() const;
  long announcements() const { return announcements_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  const std::vector<int>& pi() const { return pi_; }
  AgentKind kind() const { return kind_; }
  const Hyperparams& hyper() const { return hp_; }

  // Test access to the active snapshot.
  Snapshot* active() { return active_; }

 private:
  Snapshot make_snapshot();
  Eigen::VectorXd encode_active(const Eigen::VectorXd& env_ratios) const;
  void complete_pending(const Eigen::VectorXd& s_enc);
  void train_if_due();

  struct Pending {
    Eigen::VectorXd s_enc;   // canonical encoding at selection time
    int action = 0;          // canonical index
    int r_len = 0;
    bool resolved = false;
    double reward = 0.0;
  };

  AgentKind kind_;
  Hyperparams hp_;
  Rng rng_;
  ContextRegistry registry_;                            // CLD3QL contexts
  std::unique_ptr<Snapshot> solo_;                      // D3QL single snapshot
  std::vector<ContextRegistry::Entry> baseline_rows_;   // D3QL bookkeeping
  Snapshot* active_ = nullptr;
  std::vector<int> pi_;                 // env -> canonical channel map
  std::vector<HistEntry> hist_;         // canonical space, newest last
  double eps_;
  long decisions_ = 0;
  long announcements_ = 0;
  std::optional<Pending> pending_;
  std::vector<TraceRow> trace_;
  long last_slot_ = 0;
};

}  // namespace clmac
