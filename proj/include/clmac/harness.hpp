#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clmac/agent.hpp"
#include "clmac/sim.hpp"

namespace clmac {

// Full active incumbent set taking effect at `slot`.
struct TimelineEvent {
  long slot = 0;
  std::vector<Occupant> occupants;
};

// A run definition loaded from a versioned JSON file. Fixed scenarios list
// intervals that partition [0, horizon) with explicit placements; stochastic
// scenarios evolve each channel independently with exponentially distributed
// dwell times and uniform replacement from a profile pool.
struct ScenarioSpec {
  int version = 1;
  std::string kind;  // "fixed" or "stochastic"
  int channels = 3;
  long horizon = 40000;
  int max_packet_len = 5;
  double header = 0.5;
  int window = 1000;       // metric and ledger window, in slots
  long warmup_slots = 0;   // windows ending at or before this are warm-up

  struct Interval {
    long until = 0;  // exclusive end slot
    std::vector<Placement> placements;
  };
  std::vector<Interval> intervals;  // fixed only

  std::vector<UEProfile> pool;  // stochastic only
  double dwell_beta = 0.0;      // mean dwell as a fraction of the horizon
  long dwell_slots = 0;         // or mean dwell in slots; set exactly one

  Hyperparams hyper;  // channels and R are forced from this spec

  static ScenarioSpec from_json(const std::string& text);
  void validate() const;
  long mean_dwell() const;
};

AgentKind agent_kind_from_string(const std::string& s);
std::string to_string(AgentKind kind);

// Expands the scenario into the merged context-change timeline. Stochastic
// sampling uses its own random stream derived from the seed, so the timeline
// is identical across agent kinds. Fixed timelines keep one stable ue_id per
// profile row across intervals.
std::vector<TimelineEvent> build_timeline(const ScenarioSpec& spec, std::uint64_t seed);

// Context announcement payload for an occupant set. Channel hoppers appear
// in every channel's multiset.
Context context_from(const std::vector<Occupant>& occupants, int channels);

// Per-channel water-fill of unit capacity over the agent (ue 0, cap 1) and
// the occupants present on that channel; returns each participant's
// per-channel targets.
std::map<int, Eigen::VectorXd> fair_targets(const std::vector<Occupant>& occupants,
                                            int channels);

// One metrics row, emitted at every full window boundary.
struct WindowRow {
  long slot = 0;              // window end (exclusive)
  double throughput = 0.0;    // agent sum_c x / sum_c chi
  double collision_rate = 0.0;  // collision obs / all obs, trailing window
  double jain = 0.0;          // over all active users' normalized throughputs
  double max_channel_ratio = 0.0;  // max_c agent x_c / chi_c
  double eps = 0.0;
  long registry = 0;
  long announcements = 0;
};

struct FairnessRow {
  long slot = 0;
  int ue_id = 0;
  int channel = 0;
  double x = 0.0;
  double chi = 0.0;
  double ratio = 0.0;   // x / chi on this channel
  double jain = 0.0;    // window-level index, repeated per row
};

struct RunResult {
  AgentKind kind = AgentKind::Random;
  std::uint64_t seed = 0;
  long horizon = 0;
  int window = 0;
  long warmup_slots = 0;
  std::vector<long> interval_starts;  // fixed scenarios; for quarter summaries
  std::vector<WindowRow> windows;
  std::vector<FairnessRow> fairness;
  std::vector<TraceRow> trace;
  std::vector<ContextRegistry::Entry> registry;
  std::vector<std::pair<long, int>> successes;  // agent packets (start, len)
  long announcements = 0;
  long decisions = 0;
  std::vector<std::string> slot_rows;  // optional per-slot transmitter dump
};

struct RunOptions {
  bool dump_slots = false;
};

RunResult run_scenario(const ScenarioSpec& spec, AgentKind kind, std::uint64_t seed,
                       const RunOptions& opts = {});

// Pointwise mean and population standard deviation across runs; all runs
// must share the same window grid.
struct Aggregate {
  std::vector<long> slots;
  std::vector<double> mean_throughput, std_throughput;
  std::vector<double> mean_collision, std_collision;
  std::vector<double> mean_jain, std_jain;
};
Aggregate aggregate(const std::vector<RunResult>& runs);

// Mean metrics per scenario interval (fixed scenarios).
struct IntervalSummary {
  int index = 0;  // 1-based
  long from = 0, until = 0;
  double mean_throughput = 0.0;
  double mean_collision = 0.0;
  double mean_jain = 0.0;
};
std::vector<IntervalSummary> interval_summaries(const RunResult& run);

std::string metrics_csv(const RunResult& run);
std::string fairness_csv(const RunResult& run);
std::string trace_csv(const RunResult& run);
std::string registry_csv(const RunResult& run);
std::string aggregate_csv(const Aggregate& agg);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace clmac
