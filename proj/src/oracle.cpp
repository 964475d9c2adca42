#include "clmac/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "clmac/fairness.hpp"
#include "clmac/rng.hpp"

namespace clmac {

namespace {

constexpr double kCapSlack = 1e-9;
constexpr long kNodeCeiling = 50'000'000;

std::string at(long t, int c) {
  std::ostringstream os;
  os << "slot " << t << " channel " << (c + 1);
  return os.str();
}

}  // namespace

Schedule derive_support(const Eigen::MatrixXi& r, int max_packet_len) {
  Schedule s;
  s.channels = static_cast<int>(r.rows());
  s.horizon = r.cols();
  if (s.channels < 1 || s.horizon < 1)
    throw std::invalid_argument("derive_support: empty plan");
  s.r = r;
  s.z = Eigen::MatrixXi::Zero(s.channels, s.horizon);
  s.m = Eigen::MatrixXi::Zero(s.channels, s.horizon);
  s.d = Eigen::VectorXi::Zero(s.horizon);
  for (int c = 0; c < s.channels; ++c) {
    int carry = 0;  // remaining slots of the packet in flight on this channel
    for (long t = 0; t < s.horizon; ++t) {
      const int len = r(c, t);
      if (len < 0 || len > max_packet_len)
        throw std::invalid_argument("derive_support: " + at(t, c) +
                                    ": packet length " + std::to_string(len) +
                                    " outside [0, " + std::to_string(max_packet_len) + "]");
      if (len > 0) {
        if (carry > 0)
          throw std::invalid_argument(
              "derive_support: " + at(t, c) +
              ": new packet starts before the ongoing transmission completes "
              "(no-preemption rule)");
        if (t + len > s.horizon)
          throw std::invalid_argument("derive_support: " + at(t, c) +
                                      ": packet of length " + std::to_string(len) +
                                      " runs past the horizon");
        carry = len;
      }
      s.z(c, t) = carry;
      s.m(c, t) = carry > 0 ? 1 : 0;
      if (carry > 0) --carry;
    }
  }
  for (long t = 0; t < s.horizon; ++t) {
    int in_flight = 0;  // own transmission continuing from an earlier slot
    for (int c = 0; c < s.channels; ++c)
      if (s.z(c, t) > 0 && s.r(c, t) == 0) in_flight = 1;
    s.d(t) = in_flight ? 0 : 1;
  }
  return s;
}

ConstraintReport check_constraints(const Schedule& s, const Eigen::MatrixXi& busy,
                                   const Eigen::VectorXd& chi, int window) {
  if (busy.rows() != s.channels || busy.cols() != s.horizon)
    throw std::invalid_argument("check_constraints: busy matrix shape mismatch");
  if (chi.size() != s.channels)
    throw std::invalid_argument("check_constraints: chi width mismatch");
  if (window < 1 || window > s.horizon)
    throw std::invalid_argument("check_constraints: window outside [1, horizon]");
  ConstraintReport rep;

  for (long t = 0; t < s.horizon && rep.one_channel.ok; ++t) {
    int own = 0;
    for (int c = 0; c < s.channels; ++c) own += s.m(c, t);
    if (own > 1) rep.one_channel = {false, t, -1, static_cast<double>(own)};
  }

  for (long t = 0; t < s.horizon && rep.incumbent_overlap.ok; ++t)
    for (int c = 0; c < s.channels; ++c)
      if (s.m(c, t) == 1 && busy(c, t) > 0) {
        rep.incumbent_overlap = {false, t, c + 1, static_cast<double>(busy(c, t))};
        break;
      }

  for (long t = window - 1; t < s.horizon && rep.fairness_cap.ok; ++t) {
    for (int c = 0; c < s.channels; ++c) {
      long credit = 0;
      for (long j = t - window + 1; j <= t; ++j) credit += s.r(c, j);
      const double x = static_cast<double>(credit) / window;
      if (x > chi[c] + kCapSlack) {
        rep.fairness_cap = {false, t, c + 1, x};
        break;
      }
    }
  }
  return rep;
}

double schedule_objective(const Schedule& s, int window) {
  if (window < 1 || window > s.horizon)
    throw std::invalid_argument("schedule_objective: window outside [1, horizon]");
  long weighted = 0;
  for (int c = 0; c < s.channels; ++c)
    for (long j = 0; j < s.horizon; ++j) {
      if (s.r(c, j) == 0) continue;
      const long lo = std::max<long>(window - 1, j);
      const long hi = std::min<long>(s.horizon - 1, j + window - 1);
      if (hi >= lo) weighted += static_cast<long>(s.r(c, j)) * (hi - lo + 1);
    }
  return static_cast<double>(weighted) / window;
}

void OracleInstance::validate() const {
  if (channels < 1) throw std::invalid_argument("instance: channels must be >= 1");
  if (horizon < 1) throw std::invalid_argument("instance: horizon must be >= 1");
  if (max_packet_len < 1) throw std::invalid_argument("instance: max_packet_len must be >= 1");
  if (window < 1 || window > horizon)
    throw std::invalid_argument("instance: window outside [1, horizon]");
  if (chi.size() != channels) throw std::invalid_argument("instance: chi width mismatch");
  for (const Placement& pl : incumbents) {
    pl.profile.validate();
    if (pl.profile.kind == UEKind::CSMA)
      throw std::invalid_argument(
          "instance: CSMA incumbents are not allowed (randomized backoff has no "
          "deterministic schedule)");
    if (pl.profile.kind == UEKind::CH && pl.channel == 0)
      throw std::invalid_argument(
          "instance: CH incumbents need a pinned start channel, e.g. CH(2,1)@1");
    if (pl.channel < 1 || pl.channel > channels)
      throw std::invalid_argument("instance: placement channel out of range");
  }
}

OracleInstance OracleInstance::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  OracleInstance inst;
  inst.channels = j.at("channels").get<int>();
  inst.horizon = j.at("horizon").get<long>();
  inst.max_packet_len = j.at("max_packet_len").get<int>();
  inst.window = j.at("window").get<int>();
  for (const auto& p : j.at("incumbents"))
    inst.incumbents.push_back(Placement::parse(p.get<std::string>()));
  if (j.contains("chi")) {
    const auto v = j.at("chi").get<std::vector<double>>();
    inst.chi = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
  } else if (inst.channels >= 1) {
    // Default fair share: on each channel, water-fill the agent (cap 1)
    // against the incumbents' expected throughputs there.
    inst.chi = Eigen::VectorXd::Zero(inst.channels);
    for (int c = 1; c <= inst.channels; ++c) {
      std::vector<double> caps{1.0};
      for (const Placement& pl : inst.incumbents) {
        const Eigen::VectorXd ex =
            expected_throughput(pl.profile, pl.channel, inst.channels);
        if (ex[c - 1] > 0) caps.push_back(ex[c - 1]);
      }
      inst.chi[c - 1] = water_fill(caps)[0];
    }
  }
  inst.validate();
  return inst;
}

Eigen::MatrixXi OracleInstance::busy_matrix() const {
  validate();
  Eigen::MatrixXi busy = Eigen::MatrixXi::Zero(channels, horizon);
  Rng rng(0);  // never consulted: TDMA and pinned CH draw nothing
  std::vector<UEMachine> machines;
  machines.reserve(incumbents.size());
  for (size_t i = 0; i < incumbents.size(); ++i)
    machines.emplace_back(static_cast<int>(i) + 1, incumbents[i].profile,
                          incumbents[i].channel, 0, channels, rng);
  for (long t = 0; t < horizon; ++t) {
    for (UEMachine& m : machines) {
      // Deterministic incumbents never sense, so carrier state is irrelevant.
      if (m.step(false)) busy(m.channel() - 1, t) += 1;
      if (m.packet_ends_now()) m.on_packet_end(false, rng);
    }
  }
  return busy;
}

namespace {

// Depth-first maximization of the window-weighted credit sum. State is the
// next free slot plus the per-channel credits of the trailing window-1
// slots; that ring is all future feasibility can depend on.
struct Search {
  const Eigen::MatrixXi& busy;
  const Eigen::VectorXd& chi;
  int R, C, h;
  long T;
  std::vector<double> cap;     // chi * h per channel
  std::vector<long> weight;    // objective weight of a credit at slot j
  int bits_per = 0;            // ring cell width when packing is possible
  bool packable = false;
  std::unordered_map<std::uint64_t, long> memo;
  long nodes = 0;

  Search(const Eigen::MatrixXi& b, const Eigen::VectorXd& x, int R_, int h_)
      : busy(b), chi(x), R(R_), C(static_cast<int>(b.rows())), h(h_), T(b.cols()) {
    cap.resize(C);
    for (int c = 0; c < C; ++c) cap[c] = chi[c] * h + kCapSlack;
    weight.resize(T);
    for (long j = 0; j < T; ++j) {
      const long lo = std::max<long>(h - 1, j);
      const long hi = std::min<long>(T - 1, j + h - 1);
      weight[j] = hi >= lo ? hi - lo + 1 : 0;
    }
    bits_per = std::bit_width(static_cast<unsigned>(R));
    const long ring_bits = static_cast<long>(h - 1) * C * bits_per;
    const long t_bits = std::bit_width(static_cast<unsigned long long>(T));
    packable = ring_bits + t_bits <= 64;
  }

  // ring[k*C + c] = credit placed at slot t-1-k on channel c (k < h-1).
  std::uint64_t pack(long t, const std::vector<int>& ring) const {
    std::uint64_t key = static_cast<std::uint64_t>(t);
    for (int v : ring) key = (key << bits_per) | static_cast<unsigned>(v);
    return key;
  }

  bool fits(long t, int c, int len, const std::vector<int>& ring) const {
    if (t + len > T) return false;
    for (long s = t; s < t + len; ++s)
      if (busy(c, s) > 0) return false;
    // Every window that will contain this credit must stay under the cap.
    const long u_lo = std::max<long>(h - 1, t);
    const long u_hi = std::min<long>(T - 1, t + h - 1);
    for (long u = u_lo; u <= u_hi; ++u) {
      long sum = len;
      for (long j = std::max<long>(u - h + 1, 0); j < t; ++j) {
        const long k = t - 1 - j;
        if (k < h - 1) sum += ring[static_cast<size_t>(k) * C + c];
      }
      if (static_cast<double>(sum) > cap[c]) return false;
    }
    return true;
  }

  static void shift(std::vector<int>& ring, int C, int steps) {
    // Advance time by `steps` slots, the first carrying the given credits
    // already placed into position by the caller (we only shift zeros in).
    const size_t n = ring.size();
    if (n == 0) return;
    for (int s = 0; s < steps; ++s) {
      for (size_t i = n; i-- > static_cast<size_t>(C);) ring[i] = ring[i - C];
      for (int c = 0; c < C; ++c) ring[c] = 0;
    }
  }

  long best(long t, std::vector<int>& ring) {
    if (t >= T) return 0;
    if (++nodes > kNodeCeiling)
      throw SearchTooLarge("exhaustive search exceeded the " +
                           std::to_string(kNodeCeiling) + "-node ceiling");
    std::uint64_t key = 0;
    if (packable) {
      key = pack(t, ring);
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
    }
    // Idle this slot.
    std::vector<int> next = ring;
    shift(next, C, 1);
    long value = best(t + 1, next);
    // Or start a packet.
    for (int c = 0; c < C; ++c)
      for (int len = 1; len <= R; ++len) {
        if (!fits(t, c, len, ring)) continue;
        next = ring;
        shift(next, C, 1);
        if (h > 1) next[c] = len;  // credit lands at slot t, now 1 step back
        shift(next, C, len - 1);
        const long v = len * weight[t] + best(t + len, next);
        value = std::max(value, v);
      }
    if (packable) memo[key] = value;
    return value;
  }
};

}  // namespace

OracleResult brute_force_optimum(const Eigen::MatrixXi& busy, const Eigen::VectorXd& chi,
                                 int max_packet_len, int window) {
  const int C = static_cast<int>(busy.rows());
  const long T = busy.cols();
  if (C < 1 || T < 1) throw std::invalid_argument("brute_force: empty instance");
  if (chi.size() != C) throw std::invalid_argument("brute_force: chi width mismatch");
  if (window < 1 || window > T)
    throw std::invalid_argument("brute_force: window outside [1, horizon]");

  Search search(busy, chi, max_packet_len, window);
  if (!search.packable) {
    const double est = std::pow(static_cast<double>(max_packet_len) * C + 1,
                                static_cast<double>(T));
    if (est > 1e8) {
      std::ostringstream os;
      os << "instance too large for plain exhaustive search: about ("
         << max_packet_len * C + 1 << ")^" << T << " = " << est
         << " nodes and the trailing-credit state does not fit a 64-bit memo key";
      throw SearchTooLarge(os.str());
    }
  }
  std::vector<int> ring(static_cast<size_t>(std::max(window - 1, 0)) * C, 0);
  const long best = search.best(0, ring);

  // Reconstruct one optimal plan by replaying the memoized values.
  Eigen::MatrixXi r = Eigen::MatrixXi::Zero(C, T);
  std::fill(ring.begin(), ring.end(), 0);
  long t = 0, remaining = best;
  while (t < T) {
    std::vector<int> next = ring;
    Search::shift(next, C, 1);
    if (search.best(t + 1, next) == remaining) {
      ++t;
      ring = next;
      continue;
    }
    bool placed = false;
    for (int c = 0; c < C && !placed; ++c)
      for (int len = 1; len <= max_packet_len && !placed; ++len) {
        if (!search.fits(t, c, len, ring)) continue;
        next = ring;
        Search::shift(next, C, 1);
        if (window > 1) next[c] = len;
        Search::shift(next, C, len - 1);
        const long tail = search.best(t + len, next);
        if (len * search.weight[t] + tail == remaining) {
          r(c, t) = len;
          remaining = tail;
          t += len;
          ring = next;
          placed = true;
        }
      }
    if (!placed) throw std::logic_error("brute_force: reconstruction diverged");
  }

  OracleResult res;
  res.schedule = derive_support(r, max_packet_len);
  res.objective = static_cast<double>(best) / window;
  res.nodes = search.nodes;
  return res;
}

OracleResult brute_force_optimum(const OracleInstance& inst) {
  return brute_force_optimum(inst.busy_matrix(), inst.chi, inst.max_packet_len,
                             inst.window);
}

std::string schedule_csv(const Schedule& s) {
  std::ostringstream os;
  os << "slot,d";
  for (int c = 1; c <= s.channels; ++c)
    os << ",r" << c << ",z" << c << ",m" << c;
  os << "\n";
  for (long t = 0; t < s.horizon; ++t) {
    os << t << "," << s.d(t);
    for (int c = 0; c < s.channels; ++c)
      os << "," << s.r(c, t) << "," << s.z(c, t) << "," << s.m(c, t);
    os << "\n";
  }
  return os.str();
}

}  // namespace clmac
