#include "clmac/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "clmac/fairness.hpp"

namespace clmac {

namespace {

// Stochastic timelines draw from their own stream so that changing the
// agent kind never shifts the incumbent schedule.
constexpr std::uint64_t kTimelineSalt = 0xc2b2ae3d27d4eb4full;

Hyperparams hyper_from_json(const nlohmann::json& j, Hyperparams hp) {
  for (const auto& [key, value] : j.items()) {
    if (key == "H") hp.H = value.get<int>();
    else if (key == "memory") hp.memory = value.get<int>();
    else if (key == "batch") hp.batch = value.get<int>();
    else if (key == "gamma") hp.gamma = value.get<double>();
    else if (key == "lr") hp.lr = value.get<double>();
    else if (key == "eps0") hp.eps0 = value.get<double>();
    else if (key == "eps_floor") hp.eps_floor = value.get<double>();
    else if (key == "eps_decay") hp.eps_decay = value.get<double>();
    else if (key == "train_every") hp.train_every = value.get<int>();
    else if (key == "sync_every") hp.sync_every = value.get<int>();
    else if (key == "M") hp.M = value.get<double>();
    else if (key == "mu") hp.mu = value.get<double>();
    else if (key == "trunk") hp.trunk = value.get<int>();
    else if (key == "s1") hp.s1 = value.get<int>();
    else if (key == "s2") hp.s2 = value.get<int>();
    else if (key == "adam") hp.adam = value.get<bool>();
    else throw std::invalid_argument("scenario: unknown hyper key '" + key + "'");
  }
  return hp;
}

}  // namespace

ScenarioSpec ScenarioSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ScenarioSpec s;
  s.version = j.at("version").get<int>();
  if (s.version != 1) throw std::invalid_argument("scenario: unsupported version");
  s.kind = j.at("kind").get<std::string>();
  s.channels = j.at("channels").get<int>();
  s.horizon = j.at("horizon").get<long>();
  s.max_packet_len = j.value("max_packet_len", 5);
  s.header = j.value("header", 0.5);
  s.window = j.value("window", 1000);
  s.warmup_slots = j.value("warmup_slots", 0L);
  if (j.contains("intervals")) {
    for (const auto& ij : j.at("intervals")) {
      Interval iv;
      iv.until = ij.at("until").get<long>();
      for (const auto& p : ij.at("placements"))
        iv.placements.push_back(Placement::parse(p.get<std::string>()));
      s.intervals.push_back(std::move(iv));
    }
  }
  if (j.contains("pool"))
    for (const auto& p : j.at("pool"))
      s.pool.push_back(UEProfile::parse(p.get<std::string>()));
  s.dwell_beta = j.value("dwell_beta", 0.0);
  s.dwell_slots = j.value("dwell_slots", 0L);
  if (j.contains("hyper")) s.hyper = hyper_from_json(j.at("hyper"), s.hyper);
  s.hyper.channels = s.channels;
  s.hyper.R = s.max_packet_len;
  s.validate();
  return s;
}

void ScenarioSpec::validate() const {
  if (kind != "fixed" && kind != "stochastic")
    throw std::invalid_argument("scenario: kind must be 'fixed' or 'stochastic'");
  if (channels < 1) throw std::invalid_argument("scenario: channels must be >= 1");
  if (horizon < 1) throw std::invalid_argument("scenario: horizon must be >= 1");
  if (max_packet_len < 1) throw std::invalid_argument("scenario: max_packet_len must be >= 1");
  if (header < 0 || header >= 1) throw std::invalid_argument("scenario: header in [0, 1)");
  if (window < 1 || window > horizon)
    throw std::invalid_argument("scenario: window outside [1, horizon]");
  if (warmup_slots < 0 || warmup_slots >= horizon)
    throw std::invalid_argument("scenario: warmup_slots outside [0, horizon)");
  if (kind == "fixed") {
    if (intervals.empty()) throw std::invalid_argument("scenario: fixed needs intervals");
    long prev = 0;
    for (const Interval& iv : intervals) {
      if (iv.until <= prev) throw std::invalid_argument("scenario: intervals must advance");
      prev = iv.until;
      for (const Placement& pl : iv.placements) {
        pl.profile.validate();
        if (pl.channel < 0 || pl.channel > channels)
          throw std::invalid_argument("scenario: placement channel out of range");
        if (pl.profile.kind != UEKind::CH && pl.channel == 0)
          throw std::invalid_argument("scenario: " + pl.profile.type_id() +
                                      " needs an explicit @channel");
      }
    }
    if (prev != horizon)
      throw std::invalid_argument("scenario: intervals must partition [0, horizon)");
  } else {
    if (pool.empty()) throw std::invalid_argument("scenario: stochastic needs a pool");
    for (const UEProfile& p : pool) p.validate();
    const bool beta = dwell_beta > 0.0, slots = dwell_slots > 0;
    if (beta == slots)
      throw std::invalid_argument(
          "scenario: stochastic needs exactly one of dwell_beta or dwell_slots");
  }
}

long ScenarioSpec::mean_dwell() const {
  if (dwell_slots > 0) return dwell_slots;
  return std::max<long>(1, std::lround(dwell_beta * static_cast<double>(horizon)));
}

AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "cl-d3ql") return AgentKind::CLD3QL;
  if (s == "d3ql") return AgentKind::D3QL;
  if (s == "random") return AgentKind::Random;
  throw std::invalid_argument("unknown agent kind '" + s + "'");
}

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::CLD3QL: return "cl-d3ql";
    case AgentKind::D3QL: return "d3ql";
    case AgentKind::Random: return "random";
  }
  return "?";
}

namespace {

std::vector<TimelineEvent> fixed_timeline(const ScenarioSpec& spec) {
  // Rows keep one ue_id across intervals: each placement binds to the
  // lowest existing row with the same profile not yet taken this interval.
  std::vector<UEProfile> rows;
  std::vector<TimelineEvent> events;
  long start = 0;
  for (const ScenarioSpec::Interval& iv : spec.intervals) {
    TimelineEvent ev;
    ev.slot = start;
    std::vector<bool> taken(rows.size(), false);
    for (const Placement& pl : iv.placements) {
      size_t row = rows.size();
      for (size_t i = 0; i < rows.size(); ++i)
        if (!taken[i] && rows[i] == pl.profile) {
          row = i;
          break;
        }
      if (row == rows.size()) {
        rows.push_back(pl.profile);
        taken.push_back(false);
      }
      taken[row] = true;
      ev.occupants.push_back({static_cast<int>(row) + 1, pl.profile, pl.channel});
    }
    events.push_back(std::move(ev));
    start = iv.until;
  }
  return events;
}

std::vector<TimelineEvent> stochastic_timeline(const ScenarioSpec& spec,
                                               std::uint64_t seed) {
  Rng rng(seed ^ kTimelineSalt);
  const long mean = spec.mean_dwell();
  struct Change {
    long slot;
    int channel;     // 1-based chain the arrival replaces
    UEProfile profile;
    int ue_id;
  };
  std::vector<Change> changes;
  int next_id = 1;
  for (int c = 1; c <= spec.channels; ++c) {
    long t = 0;
    while (t < spec.horizon) {
      const UEProfile& p = spec.pool[rng.below(spec.pool.size())];
      changes.push_back({t, c, p, next_id++});
      t += std::max<long>(1, static_cast<long>(std::ceil(
                                 rng.exponential(static_cast<double>(mean)))));
    }
  }
  std::sort(changes.begin(), changes.end(),
            [](const Change& a, const Change& b) {
              return a.slot != b.slot ? a.slot < b.slot : a.channel < b.channel;
            });
  std::vector<TimelineEvent> events;
  std::vector<Occupant> current(spec.channels, Occupant{0, UEProfile{}, 0});
  for (size_t i = 0; i < changes.size();) {
    const long slot = changes[i].slot;
    for (; i < changes.size() && changes[i].slot == slot; ++i) {
      const Change& ch = changes[i];
      // The arrival takes the departed chain's channel; hoppers start there
      // and roam on their own.
      current[ch.channel - 1] = Occupant{ch.ue_id, ch.profile, ch.channel};
    }
    TimelineEvent ev;
    ev.slot = slot;
    for (const Occupant& occ : current)
      if (occ.ue_id != 0) ev.occupants.push_back(occ);
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace

std::vector<TimelineEvent> build_timeline(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<TimelineEvent> events = spec.kind == "fixed"
                                          ? fixed_timeline(spec)
                                          : stochastic_timeline(spec, seed);
  if (events.empty() || events.front().slot != 0)
    events.insert(events.begin(), TimelineEvent{0, {}});
  return events;
}

Context context_from(const std::vector<Occupant>& occupants, int channels) {
  return Context::from_occupants(occupants, channels);
}

std::map<int, Eigen::VectorXd> fair_targets(const std::vector<Occupant>& occupants,
                                            int channels) {
  std::map<int, Eigen::VectorXd> out;
  out[kAgentId] = Eigen::VectorXd::Zero(channels);
  for (const Occupant& occ : occupants)
    if (!out.count(occ.ue_id)) out[occ.ue_id] = Eigen::VectorXd::Zero(channels);
  for (int c = 1; c <= channels; ++c) {
    std::vector<double> caps{1.0};  // the agent first
    std::vector<int> ids{kAgentId};
    for (const Occupant& occ : occupants) {
      const Eigen::VectorXd ex = expected_throughput(occ.profile, occ.channel, channels);
      if (ex[c - 1] > 0) {
        caps.push_back(ex[c - 1]);
        ids.push_back(occ.ue_id);
      }
    }
    const std::vector<double> alloc = water_fill(caps);
    for (size_t i = 0; i < ids.size(); ++i) out[ids[i]][c - 1] = alloc[i];
  }
  return out;
}

RunResult run_scenario(const ScenarioSpec& spec, AgentKind kind, std::uint64_t seed,
                       const RunOptions& opts) {
  spec.validate();
  SimConfig scfg;
  scfg.channels = spec.channels;
  scfg.max_packet_len = spec.max_packet_len;
  scfg.header = spec.header;
  scfg.horizon = spec.horizon;
  scfg.seed = seed;
  SimCore sim(scfg);
  D3QLAgent agent(kind, spec.hyper, seed);
  ThroughputLedger ledger(spec.channels, spec.window, spec.header);
  ledger.add_ue(kAgentId);

  const std::vector<TimelineEvent> timeline = build_timeline(spec, seed);
  size_t next_event = 0;

  RunResult out;
  out.kind = kind;
  out.seed = seed;
  out.horizon = spec.horizon;
  out.window = spec.window;
  out.warmup_slots = spec.warmup_slots;
  if (spec.kind == "fixed") {
    long start = 0;
    for (const ScenarioSpec::Interval& iv : spec.intervals) {
      out.interval_starts.push_back(start);
      start = iv.until;
    }
  }

  long pkt_start = -1;
  int pkt_len = 0, pkt_ch = 1;
  bool sensing = false;
  int sense_ch = 1;
  std::deque<std::pair<long, bool>> obs_ring;  // (slot, was collision)

  for (long t = 0; t < spec.horizon; ++t) {
    if (next_event < timeline.size() && timeline[next_event].slot == t) {
      const TimelineEvent& ev = timeline[next_event];
      sim.set_occupants(ev.occupants, t);
      std::set<int> active;
      for (const Occupant& occ : ev.occupants) active.insert(occ.ue_id);
      for (int id : ledger.ues())
        if (id != kAgentId && !active.count(id)) ledger.remove_ue(id);
      for (const Occupant& occ : ev.occupants)
        if (!ledger.has_ue(occ.ue_id)) ledger.add_ue(occ.ue_id);
      for (const auto& [id, chi] : fair_targets(ev.occupants, spec.channels))
        ledger.set_target(id, chi);
      agent.announce(context_from(ev.occupants, spec.channels), t);
      ++next_event;
    }

    ledger.advance(t);

    if (pkt_start < 0 && !sensing) {
      Eigen::VectorXd ratios(spec.channels);
      for (int c = 1; c <= spec.channels; ++c)
        ratios[c - 1] = ledger.normalized(kAgentId, c);
      const Action a = agent.decide(ratios, t);
      if (a.len == 0) {
        sensing = true;
        sense_ch = a.channel;
      } else {
        pkt_start = t;
        pkt_len = a.len;
        pkt_ch = a.channel;
      }
    }

    const std::optional<int> agent_ch =
        pkt_start >= 0 ? std::optional<int>(pkt_ch) : std::nullopt;
    const SlotOutcome& oc = sim.advance(agent_ch, t);

    for (const PacketEnd& pe : oc.ended)
      if (!pe.collided && ledger.has_ue(pe.ue_id))
        ledger.credit(pe.ue_id, pe.channel, pe.len, t);

    if (sensing) {
      const Observation o = resolve_sense(oc, sense_ch);
      agent.resolve(o, compute_reward(o, 0, 0.0, 0.0, spec.hyper.M, spec.hyper.mu));
      obs_ring.emplace_back(t, false);
      sensing = false;
    } else if (pkt_start >= 0 && t == pkt_start + pkt_len - 1) {
      const Observation o = resolve_agent_packet(pkt_start, pkt_len, pkt_ch, sim.recent());
      if (o == Observation::Success) {
        ledger.credit(kAgentId, pkt_ch, pkt_len, t);
        out.successes.emplace_back(pkt_start, pkt_len);
      }
      const double xc = ledger.x(kAgentId, pkt_ch);
      const double cc = ledger.chi(kAgentId, pkt_ch);
      agent.resolve(o, compute_reward(o, pkt_len, xc, cc, spec.hyper.M, spec.hyper.mu));
      obs_ring.emplace_back(t, o == Observation::Collision);
      pkt_start = -1;
      pkt_len = 0;
    }

    while (!obs_ring.empty() && obs_ring.front().first <= t - spec.window)
      obs_ring.pop_front();

    if (opts.dump_slots) {
      std::ostringstream row;
      for (int c = 1; c <= spec.channels; ++c) {
        row << t << "," << c << ",";
        const auto& ids = oc.tx[c - 1];
        for (size_t i = 0; i < ids.size(); ++i) row << (i ? " " : "") << ids[i];
        if (c < spec.channels) row << "\n";
      }
      out.slot_rows.push_back(row.str());
    }

    if ((t + 1) % spec.window == 0) {
      WindowRow w;
      w.slot = t + 1;
      w.throughput = ledger.ratio_total(kAgentId);
      long colls = 0;
      for (const auto& [slot, was] : obs_ring) colls += was ? 1 : 0;
      w.collision_rate =
          obs_ring.empty() ? 0.0 : static_cast<double>(colls) / obs_ring.size();
      const std::vector<int> ids = ledger.ues();
      Eigen::VectorXd rhos(static_cast<long>(ids.size()));
      for (size_t i = 0; i < ids.size(); ++i)
        rhos[static_cast<long>(i)] = ledger.ratio_total(ids[i]);
      w.jain = jain_index(rhos);
      for (int c = 1; c <= spec.channels; ++c)
        w.max_channel_ratio =
            std::max(w.max_channel_ratio, ledger.normalized(kAgentId, c));
      w.eps = agent.epsilon();
      w.registry = static_cast<long>(agent.registry_size());
      w.announcements = agent.announcements();
      out.windows.push_back(w);
      for (int id : ids)
        for (int c = 1; c <= spec.channels; ++c) {
          FairnessRow f;
          f.slot = t + 1;
          f.ue_id = id;
          f.channel = c;
          f.x = ledger.x(id, c);
          f.chi = ledger.chi(id, c);
          f.ratio = ledger.normalized(id, c);
          f.jain = w.jain;
          out.fairness.push_back(f);
        }
    }
  }

  agent.abort_pending();
  out.trace = agent.trace();
  out.registry = agent.registry_entries();
  out.announcements = agent.announcements();
  out.decisions = agent.decision_steps();
  return out;
}

Aggregate aggregate(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  const size_t n = runs.front().windows.size();
  for (const RunResult& r : runs)
    if (r.windows.size() != n)
      throw std::invalid_argument("aggregate: runs have mismatched window grids");
  Aggregate agg;
  auto fill = [&](auto metric, std::vector<double>& mean, std::vector<double>& sd) {
    mean.resize(n);
    sd.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double m = 0;
      for (const RunResult& r : runs) m += metric(r.windows[i]);
      m /= static_cast<double>(runs.size());
      double v = 0;
      for (const RunResult& r : runs) {
        const double d = metric(r.windows[i]) - m;
        v += d * d;
      }
      mean[i] = m;
      sd[i] = std::sqrt(v / static_cast<double>(runs.size()));
    }
  };
  agg.slots.resize(n);
  for (size_t i = 0; i < n; ++i) agg.slots[i] = runs.front().windows[i].slot;
  fill([](const WindowRow& w) { return w.throughput; }, agg.mean_throughput,
       agg.std_throughput);
  fill([](const WindowRow& w) { return w.collision_rate; }, agg.mean_collision,
       agg.std_collision);
  fill([](const WindowRow& w) { return w.jain; }, agg.mean_jain, agg.std_jain);
  return agg;
}

std::vector<IntervalSummary> interval_summaries(const RunResult& run) {
  std::vector<IntervalSummary> out;
  if (run.interval_starts.empty()) return out;
  for (size_t i = 0; i < run.interval_starts.size(); ++i) {
    IntervalSummary s;
    s.index = static_cast<int>(i) + 1;
    s.from = run.interval_starts[i];
    s.until = i + 1 < run.interval_starts.size() ? run.interval_starts[i + 1]
                                                 : run.horizon;
    long count = 0;
    for (const WindowRow& w : run.windows)
      if (w.slot > s.from && w.slot <= s.until) {
        s.mean_throughput += w.throughput;
        s.mean_collision += w.collision_rate;
        s.mean_jain += w.jain;
        ++count;
      }
    if (count > 0) {
      s.mean_throughput /= static_cast<double>(count);
      s.mean_collision /= static_cast<double>(count);
      s.mean_jain /= static_cast<double>(count);
    }
    out.push_back(s);
  }
  return out;
}

std::string metrics_csv(const RunResult& run) {
  std::ostringstream os;
  os << "slot,throughput,collision_rate,jain,max_channel_ratio,eps,registry,"
        "announcements\n";
  for (const WindowRow& w : run.windows)
    os << w.slot << "," << w.throughput << "," << w.collision_rate << "," << w.jain
       << "," << w.max_channel_ratio << "," << w.eps << "," << w.registry << ","
       << w.announcements << "\n";
  return os.str();
}

std::string fairness_csv(const RunResult& run) {
  std::ostringstream os;
  os << "slot,ue_id,channel,x,chi,ratio,jain\n";
  for (const FairnessRow& f : run.fairness)
    os << f.slot << "," << f.ue_id << "," << f.channel << "," << f.x << "," << f.chi
       << "," << f.ratio << "," << f.jain << "\n";
  return os.str();
}

std::string trace_csv(const RunResult& run) {
  std::ostringstream os;
  os << "decision_step,slot,eps,action_r,action_c,reward,td_loss\n";
  for (const TraceRow& t : run.trace) {
    os << t.decision_step << "," << t.slot << "," << t.eps << "," << t.action_r << ","
       << t.action_c << "," << t.reward << ",";
    if (t.has_loss) os << t.td_loss;
    os << "\n";
  }
  return os.str();
}

std::string registry_csv(const RunResult& run) {
  std::ostringstream os;
  os << "key,visits,trained_steps,created_slot\n";
  for (const ContextRegistry::Entry& e : run.registry)
    os << "\"" << e.key << "\"," << e.visits << "," << e.trained_steps << ","
       << e.created_slot << "\n";
  return os.str();
}

std::string aggregate_csv(const Aggregate& agg) {
  std::ostringstream os;
  os << "slot,mean_throughput,std_throughput,mean_collision,std_collision,mean_jain,"
        "std_jain\n";
  for (size_t i = 0; i < agg.slots.size(); ++i)
    os << agg.slots[i] << "," << agg.mean_throughput[i] << "," << agg.std_throughput[i]
       << "," << agg.mean_collision[i] << "," << agg.std_collision[i] << ","
       << agg.mean_jain[i] << "," << agg.std_jain[i] << "\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace clmac
