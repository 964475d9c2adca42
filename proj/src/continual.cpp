#include "clmac/continual.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace clmac {

Context Context::from_occupants(const std::vector<Occupant>& occ, int num_channels) {
  Context ctx;
  ctx.channels.assign(num_channels, {});
  for (const Occupant& o : occ) {
    const std::string id = o.profile.type_id();
    if (o.profile.kind == UEKind::CH) {
      // A hopper visits every channel, so it belongs to all of them.
      for (auto& ch : ctx.channels) ch.push_back(id);
    } else {
      ctx.channels.at(o.channel - 1).push_back(id);
    }
  }
  for (auto& ch : ctx.channels) std::sort(ch.begin(), ch.end());
  return ctx;
}

namespace {

std::string signature(const std::vector<std::string>& types) {
  std::string s;
  for (const auto& t : types) {
    s += t;
    s += ';';
  }
  return s;
}

}  // namespace

Canonical canonicalize(const Context& ctx) {
  const int c = static_cast<int>(ctx.channels.size());
  std::vector<int> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::string> sig(c);
  for (int i = 0; i < c; ++i) sig[i] = signature(ctx.channels[i]);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sig[a] < sig[b]; });
  Canonical canon;
  canon.pi.assign(c, 0);
  for (int rank = 0; rank < c; ++rank) canon.pi[order[rank]] = rank + 1;
  std::string key;
  for (int rank = 0; rank < c; ++rank) {
    key += '[';
    key += sig[order[rank]];
    key += ']';
  }
  canon.key = std::move(key);
  return canon;
}

std::string canonical_key(const Context& ctx) { return canonicalize(ctx).key; }

int apply_pi(const std::vector<int>& pi, int channel) { return pi.at(channel - 1); }

std::vector<int> invert_pi(const std::vector<int>& pi) {
  std::vector<int> inv(pi.size(), 0);
  for (size_t c = 0; c < pi.size(); ++c) inv[pi[c] - 1] = static_cast<int>(c) + 1;
  return inv;
}

AgentState transform_state(const AgentState& s, const std::vector<int>& pi) {
  AgentState out = s;
  for (HistEntry& h : out.history)
    if (!h.null) h.act.channel = apply_pi(pi, h.act.channel);
  for (int c = 1; c <= static_cast<int>(pi.size()); ++c)
    out.ratios[apply_pi(pi, c) - 1] = s.ratios[c - 1];
  return out;
}

Action detransform_action(const Action& a, const std::vector<int>& pi) {
  return {a.len, invert_pi(pi)[a.channel - 1]};
}

Action transform_action(const Action& a, const std::vector<int>& pi) {
  return {a.len, apply_pi(pi, a.channel)};
}

unsigned long long context_bound(int types, int channels) {
  if (types < 1 || channels < 1)
    throw std::invalid_argument("context_bound: types and channels must be >= 1");
  // C(types + channels - 1, channels) with overflow-checked arithmetic.
  const int n = types + channels - 1;
  const int k = std::min(channels, n - channels);
  unsigned long long r = 1;
  for (int i = 1; i <= k; ++i) {
    const unsigned long long num = static_cast<unsigned long long>(n - k + i);
    if (r > (~0ull) / num) throw std::overflow_error("context_bound: result exceeds 64 bits");
    r = r * num / i;  // divides exactly: r holds C(n-k+i, i) each round
  }
  return r;
}

Snapshot& ContextRegistry::lookup_or_create(const std::string& key, long slot, bool& created,
                                            const std::function<Snapshot()>& make) {
  auto it = store_.find(key);
  created = it == store_.end();
  if (created) {
    Snapshot snap = make();
    snap.created_slot = slot;
    snap.key = key;
    it = store_.emplace(key, std::move(snap)).first;
  }
  it->second.visits += 1;
  return it->second;
}

std::vector<ContextRegistry::Entry> ContextRegistry::entries() const {
  std::vector<Entry> out;
  out.reserve(store_.size());
  for (const auto& [key, snap] : store_)
    out.push_back({key, snap.visits, snap.trained_steps, snap.created_slot});
  return out;
}

namespace {

void save_optimizer(const Optimizer& opt, std::ostream& os) {
  const std::int32_t kind = opt.kind == Optimizer::Kind::Adam ? 1 : 0;
  os.write(reinterpret_cast<const char*>(&kind), sizeof kind);
  os.write(reinterpret_cast<const char*>(&opt.lr), sizeof opt.lr);
  os.write(reinterpret_cast<const char*>(&opt.t), sizeof opt.t);
  if (opt.kind == Optimizer::Kind::Adam) {
    save_params_raw(opt.m, os);
    save_params_raw(opt.v, os);
  }
}

Optimizer load_optimizer(std::istream& is, const NetDims& dims) {
  std::int32_t kind = 0;
  double lr = 0.0;
  long t = 0;
  is.read(reinterpret_cast<char*>(&kind), sizeof kind);
  is.read(reinterpret_cast<char*>(&lr), sizeof lr);
  is.read(reinterpret_cast<char*>(&t), sizeof t);
  if (!is) throw std::runtime_error("snapshot: truncated optimizer");
  Optimizer opt = Optimizer::make(kind == 1 ? Optimizer::Kind::Adam : Optimizer::Kind::SGD,
                                  lr, dims);
  opt.t = t;
  if (opt.kind == Optimizer::Kind::Adam) {
    load_params_raw(opt.m, is);
    load_params_raw(opt.v, is);
  }
  return opt;
}

}  // namespace

void ContextRegistry::spill(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "registry.txt");
  int idx = 0;
  for (const auto& [key, snap] : store_) {
    const std::string name = "ctx" + std::to_string(idx++) + ".snap";
    manifest << name << '\t' << key << '\t' << snap.visits << '\t' << snap.trained_steps
             << '\t' << snap.created_slot << '\n';
    std::ofstream os(fs::path(dir) / name, std::ios::binary);
    save_net(snap.online, os);
    save_net(snap.target, os);
    save_replay(snap.replay, os);
    save_optimizer(snap.opt, os);
    if (!os) throw std::runtime_error("snapshot: write failed for " + name);
  }
}

ContextRegistry ContextRegistry::load(const std::string& dir, size_t replay_capacity) {
  namespace fs = std::filesystem;
  ContextRegistry reg;
  std::ifstream manifest(fs::path(dir) / "registry.txt");
  if (!manifest) throw std::runtime_error("snapshot: missing manifest in " + dir);
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string name, key;
    long visits = 0, trained = 0, created = 0;
    if (!std::getline(row, name, '\t') || !std::getline(row, key, '\t') ||
        !(row >> visits >> trained >> created))
      throw std::runtime_error("snapshot: malformed manifest line");
    std::ifstream is(fs::path(dir) / name, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: missing file " + name);
    ValueNet online = load_net(is);
    ValueNet target = load_net(is);
    ReplayMemory replay = load_replay(is);
    Optimizer opt = load_optimizer(is, online.dims);
    if (replay.capacity() != replay_capacity)
      throw std::runtime_error("snapshot: replay capacity mismatch");
    Snapshot snap{std::move(online), std::move(target), std::move(replay), std::move(opt),
                  visits, created, trained, key};
    reg.store_.emplace(key, std::move(snap));
  }
  return reg;
}

}  // namespace clmac
