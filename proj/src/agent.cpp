#include "clmac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clmac {

void Hyperparams::validate() const {
  if (R < 1 || channels < 1 || H < 1) throw std::invalid_argument("hyper: R, channels, H >= 1");
  if (memory < batch || batch < 1) throw std::invalid_argument("hyper: memory >= batch >= 1");
  if (gamma <= 0 || gamma >= 1) throw std::invalid_argument("hyper: gamma in (0,1)");
  if (eps0 < eps_floor || eps_floor < 0 || eps_decay <= 0 || eps_decay > 1)
    throw std::invalid_argument("hyper: bad epsilon schedule");
  if (train_every < 1 || sync_every < 1) throw std::invalid_argument("hyper: bad cadence");
}

Eigen::VectorXd encode_state(const AgentState& s, int H, int R, int channels) {
  if (static_cast<int>(s.history.size()) != H)
    throw std::invalid_argument("encode_state: history must hold exactly H entries");
  if (s.ratios.size() != channels)
    throw std::invalid_argument("encode_state: ratio width mismatch");
  const int per = 4 + (R + 1) + channels;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(H * per + channels);
  for (int i = 0; i < H; ++i) {
    const HistEntry& h = s.history[i];
    if (h.null) continue;
    const int base = i * per;
    v[base + static_cast<int>(h.obs)] = 1.0;
    if (h.act.len < 0 || h.act.len > R || h.act.channel < 1 || h.act.channel > channels)
      throw std::invalid_argument("encode_state: action out of range");
    v[base + 4 + h.act.len] = 1.0;
    v[base + 4 + (R + 1) + (h.act.channel - 1)] = 1.0;
  }
  for (int c = 0; c < channels; ++c)
    v[H * per + c] = std::clamp(s.ratios[c], 0.0, 2.0);
  return v;
}

double compute_reward(Observation obs, int r, double x_c, double chi_c, double M, double mu) {
  switch (obs) {
    case Observation::Busy:
    case Observation::Idle:
      return mu;
    case Observation::Success:
      return r - M * std::max(x_c - chi_c, 0.0);
    case Observation::Collision:
      return -r - M * std::max(x_c - chi_c, 0.0);
  }
  throw std::logic_error("compute_reward: bad observation");
}

double td_target(const Transition& t, const ValueNet& online, const ValueNet& target,
                 double gamma) {
  const int r = std::max(t.r_len, 1);
  const double gr = std::pow(gamma, r);
  const double coef = (1.0 - gr) / ((1.0 - gamma) * r);
  const Eigen::VectorXd q_online = q_values(online, t.n_hist, t.n_ratio);
  const int a_star = argmax(q_online);
  const Eigen::VectorXd q_target = q_values(target, t.n_hist, t.n_ratio);
  return coef * t.reward + gr * q_target[a_star];
}

double decay_epsilon(double eps, double decay, double floor) {
  return std::max(eps * decay, floor);
}

D3QLAgent::D3QLAgent(AgentKind kind, const Hyperparams& hp, std::uint64_t seed)
    : kind_(kind), hp_(hp), rng_(seed ^ 0xa5c152f7e19d8b03ull), eps_(hp.eps0) {
  hp_.validate();
  pi_.resize(hp_.channels);
  std::iota(pi_.begin(), pi_.end(), 1);
  hist_.assign(hp_.H, HistEntry{});
  if (kind_ == AgentKind::D3QL) {
    // One snapshot for the whole run; announcements never replace it.
    solo_ = std::make_unique<Snapshot>(make_snapshot());
    active_ = solo_.get();
  }
  // CLD3QL leaves active_ null until the first announcement (or first
  // decision, which self-announces an all-idle context).
}

Snapshot D3QLAgent::make_snapshot() {
  const NetDims dims = hp_.net_dims();
  ValueNet online = make_net(dims, rng_);
  ValueNet target = online;  // start synchronized
  return Snapshot{std::move(online), std::move(target), ReplayMemory(hp_.memory),
                  Optimizer::make(hp_.adam ? Optimizer::Kind::Adam : Optimizer::Kind::SGD,
                                  hp_.lr, dims),
                  0, 0, 0, std::string()};
}

size_t D3QLAgent::registry_size() const {
  return kind_ == AgentKind::D3QL ? baseline_rows_.size() : registry_.size();
}

std::vector<ContextRegistry::Entry> D3QLAgent::registry_entries() const {
  return kind_ == AgentKind::D3QL ? baseline_rows_ : registry_.entries();
}

void D3QLAgent::announce(const Context& ctx, long slot) {
  ++announcements_;
  if (kind_ == AgentKind::Random) return;

  if (kind_ == AgentKind::D3QL) {
    // No context memory: every announcement is new to it. The single
    // snapshot keeps training across the change; only bookkeeping grows.
    baseline_rows_.push_back({"announce#" + std::to_string(announcements_), 1,
                              solo_->trained_steps, slot});
    return;
  }

  const Canonical canon = canonicalize(ctx);
  const bool same = active_ != nullptr && active_->key == canon.key;
  pi_ = canon.pi;
  bool created = false;
  active_ = &registry_.lookup_or_create(canon.key, slot, created,
                                        [this] { return make_snapshot(); });
  if (same) return;  // relabeled context: history stays valid, only pi moved
  // Past observations came from different dynamics: start the history fresh
  // and drop any transition still spanning the switch.
  hist_.assign(hp_.H, HistEntry{});
  pending_.reset();
}

Eigen::VectorXd D3QLAgent::encode_active(const Eigen::VectorXd& env_ratios) const {
  AgentState s;
  s.history = hist_;  // already canonical
  s.ratios = Eigen::VectorXd::Zero(hp_.channels);
  for (int c = 1; c <= hp_.channels; ++c)
    s.ratios[apply_pi(pi_, c) - 1] = env_ratios[c - 1];
  return encode_state(s, hp_.H, hp_.R, hp_.channels);
}

void D3QLAgent::complete_pending(const Eigen::VectorXd& s_enc) {
  if (!pending_ || !pending_->resolved) return;
  Transition t;
  const int hw = hp_.hist_width();
  t.s_hist = pending_->s_enc.head(hw);
  t.s_ratio = pending_->s_enc.tail(hp_.channels);
  t.action = pending_->action;
  t.reward = pending_->reward;
  t.r_len = pending_->r_len;
  t.n_hist = s_enc.head(hw);
  t.n_ratio = s_enc.tail(hp_.channels);
  active_->replay.push(std::move(t));
  pending_.reset();
}

void D3QLAgent::train_if_due() {
  if (decisions_ % hp_.train_every == 0 &&
      active_->replay.size() >= static_cast<size_t>(hp_.batch)) {
    auto batch = active_->replay.sample(rng_, static_cast<size_t>(hp_.batch));
    NetParams grad = NetParams::zeros(active_->online.dims);
    auto gsum = grad.blocks();
    double loss = 0.0;
    for (const Transition* t : batch) {
      const double y = td_target(*t, active_->online, active_->target, hp_.gamma);
      const Forward f = forward(active_->online, t->s_hist, t->s_ratio);
      const double err = f.Q[t->action] - y;
      loss += err * err;
      const NetParams g = backward(active_->online, f, t->s_hist, t->s_ratio, t->action, y);
      auto gb = g.blocks();
      for (size_t k = 0; k < gsum.size(); ++k)
        for (long i = 0; i < gsum[k].second; ++i) gsum[k].first[i] += gb[k].first[i];
    }
    const double inv = 1.0 / hp_.batch;
    for (auto& [ptr, n] : gsum)
      for (long i = 0; i < n; ++i) ptr[i] *= inv;
    active_->opt.step(active_->online.p, grad);
    active_->trained_steps += 1;
    if (!trace_.empty()) {
      trace_.back().has_loss = true;
      trace_.back().td_loss = loss / hp_.batch;
    }
  }
  if (decisions_ % hp_.sync_every == 0) active_->target.p = active_->online.p;
}

Action D3QLAgent::decide(const Eigen::VectorXd& env_ratios, long slot) {
  last_slot_ = slot;
  if (kind_ == AgentKind::Random) {
    const int idx = static_cast<int>(rng_.below(hp_.num_actions()));
    const Action act = Action::from_index(idx, hp_.channels);
    pending_ = Pending{Eigen::VectorXd(), idx, act.len, false, 0.0};
    ++decisions_;
    trace_.push_back({decisions_, slot, eps_, act.len, act.channel});
    return act;
  }

  if (active_ == nullptr) {
    // No announcement yet: the agent is living in an all-idle context.
    Context idle;
    idle.channels.assign(hp_.channels, {});
    const Canonical canon = canonicalize(idle);
    pi_ = canon.pi;
    bool created = false;
    active_ = &registry_.lookup_or_create(canon.key, slot, created,
                                          [this] { return make_snapshot(); });
  }

  const Eigen::VectorXd s_enc = encode_active(env_ratios);
  complete_pending(s_enc);

  Action canonical_act;
  if (rng_.unit() < eps_) {
    canonical_act = Action::from_index(static_cast<int>(rng_.below(hp_.num_actions())),
                                       hp_.channels);
  } else {
    const Eigen::VectorXd q =
        q_values(active_->online, s_enc.head(hp_.hist_width()), s_enc.tail(hp_.channels));
    canonical_act = Action::from_index(argmax(q), hp_.channels);
  }
  const Action env_act = detransform_action(canonical_act, pi_);

  pending_ = Pending{s_enc, canonical_act.index(hp_.channels), canonical_act.len, false, 0.0};
  ++decisions_;
  trace_.push_back({decisions_, slot, eps_, env_act.len, env_act.channel});
  train_if_due();
  eps_ = decay_epsilon(eps_, hp_.eps_decay, hp_.eps_floor);
  return env_act;
}

void D3QLAgent::resolve(Observation obs, double reward) {
  if (!pending_) return;  // transition was dropped by a context switch
  pending_->resolved = true;
  pending_->reward = reward;
  if (!trace_.empty()) trace_.back().reward = reward;
  if (kind_ == AgentKind::Random) return;
  // Record the resolved tuple in canonical space; it feeds the next state.
  hist_.erase(hist_.begin());
  hist_.push_back(HistEntry{false, obs,
                            Action::from_index(pending_->action, hp_.channels)});
}

}  // namespace clmac
