#include "clmac/net.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace clmac {

namespace {

Eigen::VectorXd tanhv(const Eigen::VectorXd& x) { return x.array().tanh(); }

// d tanh / d pre-activation, from the activation itself.
Eigen::VectorXd dtanh(const Eigen::VectorXd& a) { return 1.0 - a.array().square(); }

void write_raw(std::ostream& os, const void* ptr, size_t bytes) {
  os.write(static_cast<const char*>(ptr), static_cast<std::streamsize>(bytes));
}

void read_raw(std::istream& is, void* ptr, size_t bytes) {
  is.read(static_cast<char*>(ptr), static_cast<std::streamsize>(bytes));
  if (!is) throw std::runtime_error("snapshot: truncated stream");
}

constexpr std::uint32_t kNetMagic = 0x434c4e31;     // "CLN1"
constexpr std::uint32_t kReplayMagic = 0x434c5231;  // "CLR1"

}  // namespace

void NetDims::validate() const {
  if (hist < 1 || ratio < 1 || actions < 2 || trunk < 1 || s1 < 1 || s2 < 1)
    throw std::invalid_argument("net dims must all be positive (and actions >= 2)");
}

NetParams NetParams::zeros(const NetDims& d) {
  NetParams p;
  p.W_hist = Eigen::MatrixXd::Zero(d.trunk, d.hist);
  p.b_hist = Eigen::VectorXd::Zero(d.trunk);
  p.W_ratio = Eigen::MatrixXd::Zero(d.trunk, d.ratio);
  p.b_ratio = Eigen::VectorXd::Zero(d.trunk);
  const int zdim = 2 * d.trunk;
  p.Wv1 = Eigen::MatrixXd::Zero(d.s1, zdim);
  p.bv1 = Eigen::VectorXd::Zero(d.s1);
  p.Wv2 = Eigen::MatrixXd::Zero(d.s2, d.s1);
  p.bv2 = Eigen::VectorXd::Zero(d.s2);
  p.wv3 = Eigen::VectorXd::Zero(d.s2);
  p.bv3 = 0.0;
  p.Wa1 = Eigen::MatrixXd::Zero(d.s1, zdim);
  p.ba1 = Eigen::VectorXd::Zero(d.s1);
  p.Wa2 = Eigen::MatrixXd::Zero(d.s2, d.s1);
  p.ba2 = Eigen::VectorXd::Zero(d.s2);
  p.Wa3 = Eigen::MatrixXd::Zero(d.actions, d.s2);
  p.ba3 = Eigen::VectorXd::Zero(d.actions);
  return p;
}

std::vector<std::pair<double*, long>> NetParams::blocks() {
  return {
      {W_hist.data(), W_hist.size()},   {b_hist.data(), b_hist.size()},
      {W_ratio.data(), W_ratio.size()}, {b_ratio.data(), b_ratio.size()},
      {Wv1.data(), Wv1.size()},         {bv1.data(), bv1.size()},
      {Wv2.data(), Wv2.size()},         {bv2.data(), bv2.size()},
      {wv3.data(), wv3.size()},         {&bv3, 1},
      {Wa1.data(), Wa1.size()},         {ba1.data(), ba1.size()},
      {Wa2.data(), Wa2.size()},         {ba2.data(), ba2.size()},
      {Wa3.data(), Wa3.size()},         {ba3.data(), ba3.size()},
  };
}

std::vector<std::pair<const double*, long>> NetParams::blocks() const {
  auto mut = const_cast<NetParams*>(this)->blocks();
  std::vector<std::pair<const double*, long>> out;
  out.reserve(mut.size());
  for (auto& [ptr, n] : mut) out.emplace_back(ptr, n);
  return out;
}

long NetParams::count() const {
  long n = 0;
  for (auto& [ptr, sz] : blocks()) n += sz;
  return n;
}

ValueNet make_net(const NetDims& dims, Rng& rng) {
  dims.validate();
  ValueNet net{dims, NetParams::zeros(dims)};
  auto fill = [&rng](Eigen::MatrixXd& W) {
    const double a = 1.0 / std::sqrt(static_cast<double>(W.cols()));
    for (long i = 0; i < W.size(); ++i) W.data()[i] = (2.0 * rng.unit() - 1.0) * a;
  };
  fill(net.p.W_hist);
  fill(net.p.W_ratio);
  fill(net.p.Wv1);
  fill(net.p.Wv2);
  {
    const double a = 1.0 / std::sqrt(static_cast<double>(net.p.wv3.size()));
    for (long i = 0; i < net.p.wv3.size(); ++i) net.p.wv3[i] = (2.0 * rng.unit() - 1.0) * a;
  }
  fill(net.p.Wa1);
  fill(net.p.Wa2);
  fill(net.p.Wa3);
  return net;
}

Forward forward(const ValueNet& net, const Eigen::VectorXd& x_hist,
                const Eigen::VectorXd& x_ratio) {
  const NetParams& p = net.p;
  if (x_hist.size() != net.dims.hist || x_ratio.size() != net.dims.ratio)
    throw std::invalid_argument("forward: input width mismatch");
  Forward f;
  f.h1 = tanhv(p.W_hist * x_hist + p.b_hist);
  f.h2 = tanhv(p.W_ratio * x_ratio + p.b_ratio);
  f.z.resize(f.h1.size() + f.h2.size());
  f.z << f.h1, f.h2;
  f.v1 = tanhv(p.Wv1 * f.z + p.bv1);
  f.v2 = tanhv(p.Wv2 * f.v1 + p.bv2);
  f.V = p.wv3.dot(f.v2) + p.bv3;
  f.a1 = tanhv(p.Wa1 * f.z + p.ba1);
  f.a2 = tanhv(p.Wa2 * f.a1 + p.ba2);
  f.A = p.Wa3 * f.a2 + p.ba3;
  f.Q = (f.A.array() - f.A.mean() + f.V).matrix();
  return f;
}

Eigen::VectorXd q_values(const ValueNet& net, const Eigen::VectorXd& x_hist,
                         const Eigen::VectorXd& x_ratio) {
  return forward(net, x_hist, x_ratio).Q;
}

NetParams backward(const ValueNet& net, const Forward& f, const Eigen::VectorXd& x_hist,
                   const Eigen::VectorXd& x_ratio, int action, double target) {
  const NetParams& p = net.p;
  if (action < 0 || action >= net.dims.actions)
    throw std::invalid_argument("backward: action out of range");
  NetParams g = NetParams::zeros(net.dims);

  const double e = f.Q[action] - target;  // dL/dQ_a for L = 0.5 (Q_a - y)^2

  // Q_a = V + A_a - mean(A): dQ_a/dV = 1, dQ_a/dA_j = [j==a] - 1/n.
  const double n = static_cast<double>(net.dims.actions);
  Eigen::VectorXd gA = Eigen::VectorXd::Constant(net.dims.actions, -e / n);
  gA[action] += e;
  const double gV = e;

  // Value stream.
  g.wv3 = gV * f.v2;
  g.bv3 = gV;
  Eigen::VectorXd gpre = (gV * p.wv3).cwiseProduct(dtanh(f.v2));
  g.Wv2 = gpre * f.v1.transpose();
  g.bv2 = gpre;
  gpre = (p.Wv2.transpose() * gpre).cwiseProduct(dtanh(f.v1));
  g.Wv1 = gpre * f.z.transpose();
  g.bv1 = gpre;
  Eigen::VectorXd gz = p.Wv1.transpose() * gpre;

  // Advantage stream.
  g.Wa3 = gA * f.a2.transpose();
  g.ba3 = gA;
  gpre = (p.Wa3.transpose() * gA).cwiseProduct(dtanh(f.a2));
  g.Wa2 = gpre * f.a1.transpose();
  g.ba2 = gpre;
  gpre = (p.Wa2.transpose() * gpre).cwiseProduct(dtanh(f.a1));
  g.Wa1 = gpre * f.z.transpose();
  g.ba1 = gpre;
  gz += p.Wa1.transpose() * gpre;

  // Trunks.
  const long t = f.h1.size();
  Eigen::VectorXd gh1 = gz.head(t).cwiseProduct(dtanh(f.h1));
  g.W_hist = gh1 * x_hist.transpose();
  g.b_hist = gh1;
  Eigen::VectorXd gh2 = gz.tail(gz.size() - t).cwiseProduct(dtanh(f.h2));
  g.W_ratio = gh2 * x_ratio.transpose();
  g.b_ratio = gh2;
  return g;
}

int argmax(const Eigen::VectorXd& q) {
  int best = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

Optimizer Optimizer::make(Kind kind, double lr, const NetDims& dims) {
  Optimizer opt;
  opt.kind = kind;
  opt.lr = lr;
  if (kind == Kind::Adam) {
    opt.m = NetParams::zeros(dims);
    opt.v = NetParams::zeros(dims);
  }
  return opt;
}

void Optimizer::step(NetParams& params, const NetParams& grad) {
  auto pb = params.blocks();
  auto gb = grad.blocks();
  if (kind == Kind::SGD) {
    for (size_t k = 0; k < pb.size(); ++k)
      for (long i = 0; i < pb[k].second; ++i) pb[k].first[i] -= lr * gb[k].first[i];
    return;
  }
  ++t;
  auto mb = m.blocks();
  auto vb = v.blocks();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t k = 0; k < pb.size(); ++k) {
    for (long i = 0; i < pb[k].second; ++i) {
      const double gi = gb[k].first[i];
      double& mi = mb[k].first[i];
      double& vi = vb[k].first[i];
      mi = beta1 * mi + (1.0 - beta1) * gi;
      vi = beta2 * vi + (1.0 - beta2) * gi * gi;
      pb[k].first[i] -= lr * (mi / c1) / (std::sqrt(vi / c2) + eps);
    }
  }
}

void ReplayMemory::push(Transition t) {
  if (cap_ == 0) return;
  if (data_.size() < cap_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % cap_;
}

std::vector<const Transition*> ReplayMemory::sample(Rng& rng, size_t k) const {
  if (k > data_.size()) throw std::invalid_argument("replay: not enough transitions");
  // Partial Fisher-Yates over an index array: k distinct uniform picks.
  std::vector<size_t> idx(data_.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<const Transition*> out;
  out.reserve(k);
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(&data_[idx[i]]);
  }
  return out;
}

namespace {

void write_vec(std::ostream& os, const Eigen::VectorXd& v) {
  const std::int64_t n = v.size();
  write_raw(os, &n, sizeof n);
  write_raw(os, v.data(), sizeof(double) * static_cast<size_t>(n));
}

Eigen::VectorXd read_vec(std::istream& is) {
  std::int64_t n = 0;
  read_raw(is, &n, sizeof n);
  if (n < 0 || n > (1 << 24)) throw std::runtime_error("snapshot: bad vector length");
  Eigen::VectorXd v(n);
  read_raw(is, v.data(), sizeof(double) * static_cast<size_t>(n));
  return v;
}

}  // namespace

void save_net(const ValueNet& net, std::ostream& os) {
  write_raw(os, &kNetMagic, sizeof kNetMagic);
  const std::uint32_t version = 1;
  write_raw(os, &version, sizeof version);
  const std::int32_t d[6] = {net.dims.hist, net.dims.ratio, net.dims.actions,
                             net.dims.trunk, net.dims.s1, net.dims.s2};
  write_raw(os, d, sizeof d);
  for (auto& [ptr, n] : net.p.blocks()) write_raw(os, ptr, sizeof(double) * static_cast<size_t>(n));
}

ValueNet load_net(std::istream& is) {
  std::uint32_t magic = 0, version = 0;
  read_raw(is, &magic, sizeof magic);
  if (magic != kNetMagic) throw std::runtime_error("snapshot: bad net magic");
  read_raw(is, &version, sizeof version);
  if (version != 1) throw std::runtime_error("snapshot: unsupported net version");
  std::int32_t d[6];
  read_raw(is, d, sizeof d);
  NetDims dims{d[0], d[1], d[2], d[3], d[4], d[5]};
  dims.validate();
  ValueNet net{dims, NetParams::zeros(dims)};
  for (auto& [ptr, n] : net.p.blocks()) read_raw(is, ptr, sizeof(double) * static_cast<size_t>(n));
  return net;
}

void save_params_raw(const NetParams& p, std::ostream& os) {
  for (auto& [ptr, n] : p.blocks()) write_raw(os, ptr, sizeof(double) * static_cast<size_t>(n));
}

void load_params_raw(NetParams& p, std::istream& is) {
  for (auto& [ptr, n] : p.blocks()) read_raw(is, ptr, sizeof(double) * static_cast<size_t>(n));
}

void save_replay(const ReplayMemory& mem, std::ostream& os) {
  write_raw(os, &kReplayMagic, sizeof kReplayMagic);
  const std::uint32_t version = 1;
  write_raw(os, &version, sizeof version);
  const std::uint64_t cap = mem.capacity(), n = mem.size(), next = mem.next_;
  write_raw(os, &cap, sizeof cap);
  write_raw(os, &n, sizeof n);
  write_raw(os, &next, sizeof next);
  for (size_t i = 0; i < mem.size(); ++i) {
    const Transition& t = mem.at(i);
    write_vec(os, t.s_hist);
    write_vec(os, t.s_ratio);
    const std::int32_t a = t.action, r = t.r_len;
    write_raw(os, &a, sizeof a);
    write_raw(os, &t.reward, sizeof t.reward);
    write_raw(os, &r, sizeof r);
    write_vec(os, t.n_hist);
    write_vec(os, t.n_ratio);
  }
}

ReplayMemory load_replay(std::istream& is) {
  std::uint32_t magic = 0, version = 0;
  read_raw(is, &magic, sizeof magic);
  if (magic != kReplayMagic) throw std::runtime_error("snapshot: bad replay magic");
  read_raw(is, &version, sizeof version);
  if (version != 1) throw std::runtime_error("snapshot: unsupported replay version");
  std::uint64_t cap = 0, n = 0, next = 0;
  read_raw(is, &cap, sizeof cap);
  read_raw(is, &n, sizeof n);
  read_raw(is, &next, sizeof next);
  if (n > cap || cap > (1u << 30) || next >= std::max<std::uint64_t>(cap, 1))
    throw std::runtime_error("snapshot: bad replay size");
  ReplayMemory mem(cap);
  for (std::uint64_t i = 0; i < n; ++i) {
    Transition t;
    t.s_hist = read_vec(is);
    t.s_ratio = read_vec(is);
    std::int32_t a = 0, r = 0;
    read_raw(is, &a, sizeof a);
    read_raw(is, &t.reward, sizeof t.reward);
    read_raw(is, &r, sizeof r);
    t.action = a;
    t.r_len = r;
    t.n_hist = read_vec(is);
    t.n_ratio = read_vec(is);
    mem.data_.push_back(std::move(t));
  }
  mem.next_ = next;
  return mem;
}

}  // namespace clmac
