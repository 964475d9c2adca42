#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "clmac/harness.hpp"

using namespace clmac;

namespace {

std::string fixed_json(const std::string& intervals, const std::string& extra = "") {
  return std::string(R"({"version": 1, "kind": "fixed", "channels": 2,)") +
         R"( "horizon": 2000, "max_packet_len": 2, "window": 100,)" +
         R"( "intervals": [)" + intervals + "]" + extra + "}";
}

ScenarioSpec empty_channel_spec() {
  ScenarioSpec s;
  s.kind = "fixed";
  s.channels = 1;
  s.horizon = 2000;
  s.max_packet_len = 2;
  s.window = 100;
  s.intervals.push_back({2000, {}});
  s.hyper.channels = 1;
  s.hyper.R = 2;
  return s;
}

Hyperparams tiny_hyper(int channels, int R) {
  Hyperparams hp;
  hp.channels = channels;
  hp.R = R;
  hp.H = 2;
  hp.memory = 200;
  hp.batch = 16;
  hp.train_every = 10;
  hp.sync_every = 50;
  hp.trunk = 8;
  hp.s1 = 8;
  hp.s2 = 4;
  return hp;
}

bool same_trace(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const TraceRow &x = a[i], &y = b[i];
    if (x.decision_step != y.decision_step || x.slot != y.slot || x.eps != y.eps ||
        x.action_r != y.action_r || x.action_c != y.action_c || x.reward != y.reward ||
        x.has_loss != y.has_loss || x.td_loss != y.td_loss)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("scenario JSON round-trips fields and forces agent dimensions") {
  const std::string text = fixed_json(
      R"({"until": 1000, "placements": ["TDMA(2,0,4)@1"]},)"
      R"({"until": 2000, "placements": ["CSMA(1,2,4)@2"]})",
      R"(, "header": 0.25, "warmup_slots": 500, "hyper": {"gamma": 0.8, "trunk": 16})");
  ScenarioSpec s = ScenarioSpec::from_json(text);
  CHECK(s.kind == "fixed");
  CHECK(s.channels == 2);
  CHECK(s.horizon == 2000);
  CHECK(s.max_packet_len == 2);
  CHECK(s.header == doctest::Approx(0.25));
  CHECK(s.warmup_slots == 500);
  CHECK(s.intervals.size() == 2);
  CHECK(s.intervals[0].until == 1000);
  CHECK(s.intervals[0].placements[0].profile.type_id() == "TDMA(2,0,4)");
  CHECK(s.intervals[1].placements[0].channel == 2);
  CHECK(s.hyper.gamma == doctest::Approx(0.8));
  CHECK(s.hyper.trunk == 16);
  CHECK(s.hyper.channels == 2);  // forced from the scenario
  CHECK(s.hyper.R == 2);
}

TEST_CASE("stochastic JSON pools take bare profiles without channels") {
  const std::string text = R"js({
    "version": 1, "kind": "stochastic", "channels": 2, "horizon": 4000,
    "max_packet_len": 3, "window": 100,
    "pool": ["TDMA(2,0,4)", "CSMA(1,2,4)", "CH(2,-1)"], "dwell_slots": 400
  })js";
  ScenarioSpec s = ScenarioSpec::from_json(text);
  CHECK(s.pool.size() == 3);
  CHECK(s.pool[0].type_id() == "TDMA(2,0,4)");
  CHECK(s.pool[2].type_id() == "CH(2,-1)");
  CHECK(s.mean_dwell() == doctest::Approx(400.0));
}

TEST_CASE("scenario JSON rejects malformed definitions") {
  CHECK_THROWS(ScenarioSpec::from_json("{}"));  // missing keys
  // version must be 1
  std::string bad = fixed_json(R"({"until": 2000, "placements": []})");
  bad.replace(bad.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK_THROWS_AS(ScenarioSpec::from_json(bad), std::invalid_argument);
  // intervals must partition [0, horizon)
  CHECK_THROWS_AS(
      ScenarioSpec::from_json(fixed_json(R"({"until": 1500, "placements": []})")),
      std::invalid_argument);
  // intervals must advance
  CHECK_THROWS_AS(ScenarioSpec::from_json(fixed_json(
                      R"({"until": 1000, "placements": []},)"
                      R"({"until": 1000, "placements": []})")),
                  std::invalid_argument);
  // non-hopper placements need a channel
  CHECK_THROWS_AS(ScenarioSpec::from_json(fixed_json(
                      R"js({"until": 2000, "placements": ["TDMA(2,0,4)"]})js")),
                  std::invalid_argument);
  // placement channel above the channel count
  CHECK_THROWS_AS(ScenarioSpec::from_json(fixed_json(
                      R"({"until": 2000, "placements": ["TDMA(2,0,4)@3"]})")),
                  std::invalid_argument);
  // unknown hyper key
  CHECK_THROWS_AS(ScenarioSpec::from_json(fixed_json(
                      R"({"until": 2000, "placements": []})", R"(, "hyper": {"lrx": 1})")),
                  std::invalid_argument);

  ScenarioSpec s = empty_channel_spec();
  s.window = 4000;  // wider than the horizon
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = empty_channel_spec();
  s.warmup_slots = 2000;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  ScenarioSpec st;
  st.kind = "stochastic";
  st.channels = 2;
  st.horizon = 1000;
  st.window = 100;
  st.pool.push_back(Placement::parse("TDMA(2,0,4)@1").profile);
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);  // no dwell given
  st.dwell_slots = 50;
  st.dwell_beta = 0.1;
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);  // both dwells given
  st.dwell_beta = 0.0;
  CHECK_NOTHROW(st.validate());
  st.pool.clear();
  CHECK_THROWS_AS(st.validate(), std::invalid_argument);  // empty pool
}

TEST_CASE("mean dwell comes from slots or from the horizon fraction") {
  ScenarioSpec s;
  s.horizon = 500;
  s.dwell_slots = 77;
  CHECK(s.mean_dwell() == 77);
  s.dwell_slots = 0;
  s.dwell_beta = 0.1;
  CHECK(s.mean_dwell() == 50);
}

TEST_CASE("agent kind names round-trip") {
  for (AgentKind k : {AgentKind::CLD3QL, AgentKind::D3QL, AgentKind::Random})
    CHECK(agent_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(agent_kind_from_string("dqn"), std::invalid_argument);
}

TEST_CASE("fixed timelines keep one ue id per profile row across intervals") {
  ScenarioSpec s;
  s.kind = "fixed";
  s.channels = 3;
  s.horizon = 300;
  s.window = 100;
  s.intervals.push_back(
      {100, {Placement::parse("TDMA(2,0,4)@1"), Placement::parse("CSMA(1,2,4)@2")}});
  s.intervals.push_back({200, {Placement::parse("CSMA(1,2,4)@1")}});
  s.intervals.push_back(
      {300, {Placement::parse("CSMA(1,2,4)@3"), Placement::parse("CSMA(1,2,4)@1")}});

  const std::vector<TimelineEvent> tl = build_timeline(s, 1);
  REQUIRE(tl.size() == 3);
  CHECK(tl[0].slot == 0);
  CHECK(tl[1].slot == 100);
  CHECK(tl[2].slot == 200);
  CHECK(tl[0].occupants[0].ue_id == 1);  // TDMA row
  CHECK(tl[0].occupants[1].ue_id == 2);  // CSMA row
  // The CSMA profile moves channel but keeps its row id.
  REQUIRE(tl[1].occupants.size() == 1);
  CHECK(tl[1].occupants[0].ue_id == 2);
  CHECK(tl[1].occupants[0].channel == 1);
  // A second copy of the same profile gets a fresh row.
  REQUIRE(tl[2].occupants.size() == 2);
  CHECK(tl[2].occupants[0].ue_id == 2);
  CHECK(tl[2].occupants[1].ue_id == 3);
  // Timelines of fixed scenarios ignore the seed entirely.
  const std::vector<TimelineEvent> tl2 = build_timeline(s, 99);
  REQUIRE(tl2.size() == tl.size());
  for (size_t i = 0; i < tl.size(); ++i) {
    CHECK(tl2[i].slot == tl[i].slot);
    CHECK(tl2[i].occupants.size() == tl[i].occupants.size());
  }
}

TEST_CASE("stochastic timelines hit the requested dwell and pool statistics") {
  ScenarioSpec s;
  s.kind = "stochastic";
  s.channels = 2;
  s.horizon = 50000;
  s.window = 1000;
  s.pool = {Placement::parse("TDMA(2,0,4)@1").profile,
            Placement::parse("CSMA(1,2,4)@1").profile};
  s.dwell_slots = 100;

  const std::vector<TimelineEvent> tl = build_timeline(s, 7);
  REQUIRE(!tl.empty());
  CHECK(tl.front().slot == 0);
  CHECK(tl.front().occupants.size() == 2);  // every chain seeds at slot 0

  long prev = -1;
  std::map<int, int> chain_ue;  // chain channel -> current ue
  std::set<int> ids;
  long arrivals = 0, tdma = 0;
  for (const TimelineEvent& ev : tl) {
    CHECK(ev.slot > prev);  // same-slot changes are merged
    prev = ev.slot;
    CHECK(ev.occupants.size() == 2);  // chains never go empty after slot 0
    for (const Occupant& occ : ev.occupants) {
      if (chain_ue[occ.channel] != occ.ue_id) {
        chain_ue[occ.channel] = occ.ue_id;
        CHECK(ids.insert(occ.ue_id).second);  // ue ids are never reused
        ++arrivals;
        if (occ.profile.kind == UEKind::TDMA) ++tdma;
      }
    }
  }
  // Roughly horizon/dwell arrivals per chain, uniformly drawn from the pool.
  CHECK(arrivals > 900);
  CHECK(arrivals < 1100);
  CHECK(std::abs(2 * tdma - arrivals) < 120);

  // Rebuilding with the same seed reproduces the exact timeline.
  const std::vector<TimelineEvent> again = build_timeline(s, 7);
  REQUIRE(again.size() == tl.size());
  bool same = true;
  for (size_t i = 0; i < tl.size() && same; ++i) {
    same = again[i].slot == tl[i].slot &&
           again[i].occupants.size() == tl[i].occupants.size();
    for (size_t k = 0; same && k < tl[i].occupants.size(); ++k)
      same = again[i].occupants[k].ue_id == tl[i].occupants[k].ue_id &&
             again[i].occupants[k].channel == tl[i].occupants[k].channel &&
             again[i].occupants[k].profile == tl[i].occupants[k].profile;
  }
  CHECK(same);
  CHECK(build_timeline(s, 8).size() != tl.size());
}

TEST_CASE("hoppers in a stochastic pool appear in every channel's context") {
  ScenarioSpec s;
  s.kind = "stochastic";
  s.channels = 2;
  s.horizon = 100;
  s.window = 50;
  s.pool = {Placement::parse("CH(2,1)").profile};
  s.dwell_slots = 1000;  // effectively static
  const std::vector<TimelineEvent> tl = build_timeline(s, 3);
  REQUIRE(!tl.empty());
  const Context ctx = context_from(tl.front().occupants, 2);
  REQUIRE(ctx.channels.size() == 2);
  CHECK(ctx.channels[0].size() == 2);  // both hoppers, on both channels
  CHECK(ctx.channels[1].size() == 2);
}

TEST_CASE("fair targets water-fill each channel over agent and occupants") {
  // Empty band: the agent owns every channel.
  const auto solo = fair_targets({}, 3);
  REQUIRE(solo.size() == 1);
  CHECK(solo.at(kAgentId).isApprox(Eigen::VectorXd::Ones(3)));

  // One TDMA on channel 1 of 2.
  const Occupant tdma{1, Placement::parse("TDMA(3,0,8)@1").profile, 1};
  auto t = fair_targets({tdma}, 2);
  CHECK(t.at(kAgentId)[0] == doctest::Approx(0.625).epsilon(1e-9));
  CHECK(t.at(kAgentId)[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.at(1)[0] == doctest::Approx(0.375).epsilon(1e-9));
  CHECK(t.at(1)[1] == 0.0);

  // Three-way split: agent plus TDMA(3,0,8) and CSMA(2,4,6) on one channel.
  const Occupant csma{2, Placement::parse("CSMA(2,4,6)@1").profile, 1};
  auto three = fair_targets({tdma, csma}, 1);
  CHECK(three.at(kAgentId)[0] == doctest::Approx(0.34).epsilon(1e-9));
  CHECK(three.at(1)[0] == doctest::Approx(0.33).epsilon(1e-9));
  CHECK(three.at(2)[0] == doctest::Approx(0.33).epsilon(1e-9));

  // A hopper consumes 1/C on every channel; the agent gets the rest.
  const Occupant hopper{3, Placement::parse("CH(2,1)").profile, 0};
  auto hop = fair_targets({hopper}, 3);
  for (int c = 0; c < 3; ++c) {
    CHECK(hop.at(kAgentId)[c] == doctest::Approx(0.666667).epsilon(1e-9));
    CHECK(hop.at(3)[c] == doctest::Approx(0.333333).epsilon(1e-9));
  }
}

TEST_CASE("window throughput equals the windowed credit of logged successes") {
  const ScenarioSpec s = empty_channel_spec();
  const RunResult run = run_scenario(s, AgentKind::Random, 5);
  REQUIRE(run.windows.size() == 20);
  CHECK(run.announcements == 1);
  for (size_t i = 0; i < run.windows.size(); ++i) {
    const WindowRow& w = run.windows[i];
    CHECK(w.slot == static_cast<long>(i + 1) * 100);
    double credit = 0.0;
    for (const auto& [start, len] : run.successes) {
      if (start + len > w.slot) continue;  // still unresolved at the boundary
      for (long j = start; j < start + len; ++j)
        if (j >= w.slot - 100) credit += (len - s.header) / len;
    }
    // Alone on one empty channel: chi is 1, so the ratio is the raw share.
    CHECK(w.throughput == doctest::Approx(credit / 100.0).epsilon(1e-12));
    CHECK(w.collision_rate == 0.0);  // nobody to collide with
    CHECK(w.jain == 1.0);            // single user
    CHECK(w.eps == 1.0);             // random agent never decays
    CHECK(w.registry == 0);
    CHECK(w.announcements == 1);
  }
  CHECK(run.decisions == static_cast<long>(run.trace.size()));
  // Sense actions resolve in one slot, packets occupy len slots.
  CHECK(run.decisions >= 1000);
  CHECK(run.decisions <= 2000);
}

TEST_CASE("fairness rows carry the per channel targets of every active user") {
  ScenarioSpec s;
  s.kind = "fixed";
  s.channels = 2;
  s.horizon = 1200;
  s.max_packet_len = 2;
  s.window = 400;
  s.intervals.push_back({1200, {Placement::parse("TDMA(2,0,4)@1")}});
  s.hyper = tiny_hyper(2, 2);
  const RunResult run = run_scenario(s, AgentKind::Random, 11);
  REQUIRE(run.windows.size() == 3);
  REQUIRE(run.fairness.size() == 3 * 2 * 2);  // windows x users x channels
  auto row = [&](long slot, int ue, int ch) -> const FairnessRow& {
    for (const FairnessRow& f : run.fairness)
      if (f.slot == slot && f.ue_id == ue && f.channel == ch) return f;
    throw std::logic_error("row not found");
  };
  // TDMA(2,0,4) expects half the channel, so the fair split is 0.5 each.
  for (long slot : {400L, 800L, 1200L}) {
    CHECK(row(slot, 0, 1).chi == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(row(slot, 0, 2).chi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(row(slot, 1, 1).chi == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(row(slot, 1, 2).chi == 0.0);
    // Collisions only ever cost the incumbent credit, never add credit.
    CHECK(row(slot, 1, 1).x <= 0.5 + 1e-9);
    CHECK(row(slot, 1, 2).x == 0.0);
    CHECK(row(slot, 1, 2).ratio == 0.0);  // 0/0 counts as on-target
    CHECK(row(slot, 1, 1).jain == row(slot, 0, 1).jain);
  }
}

TEST_CASE("runs are reproducible per seed and diverge across seeds") {
  const ScenarioSpec s = empty_channel_spec();
  const RunResult a = run_scenario(s, AgentKind::Random, 42);
  const RunResult b = run_scenario(s, AgentKind::Random, 42);
  CHECK(metrics_csv(a) == metrics_csv(b));
  CHECK(trace_csv(a) == trace_csv(b));
  CHECK(fairness_csv(a) == fairness_csv(b));
  CHECK(a.successes == b.successes);
  const RunResult c = run_scenario(s, AgentKind::Random, 43);
  CHECK(trace_csv(a) != trace_csv(c));
}

TEST_CASE("with a single static context the context learner matches the baseline") {
  // One TDMA on channel 2 of 2: the empty channel sorts first, so the
  // canonical relabeling is the identity and both agents see identical
  // inputs, draw identical nets, and must produce identical runs.
  ScenarioSpec s;
  s.kind = "fixed";
  s.channels = 2;
  s.horizon = 3000;
  s.max_packet_len = 2;
  s.window = 500;
  s.intervals.push_back({3000, {Placement::parse("TDMA(2,0,4)@2")}});
  s.hyper = tiny_hyper(2, 2);
  const RunResult cl = run_scenario(s, AgentKind::CLD3QL, 17);
  const RunResult base = run_scenario(s, AgentKind::D3QL, 17);
  CHECK(same_trace(cl.trace, base.trace));
  CHECK(cl.successes == base.successes);
  REQUIRE(cl.windows.size() == base.windows.size());
  for (size_t i = 0; i < cl.windows.size(); ++i) {
    CHECK(cl.windows[i].throughput == base.windows[i].throughput);
    CHECK(cl.windows[i].collision_rate == base.windows[i].collision_rate);
    CHECK(cl.windows[i].jain == base.windows[i].jain);
    CHECK(cl.windows[i].eps == base.windows[i].eps);
    CHECK(cl.windows[i].registry == 1);
    CHECK(base.windows[i].registry == 1);
  }
  CHECK(cl.registry.size() == 1);
  CHECK(base.registry.size() == 1);
  CHECK(base.registry[0].key == "announce#1");
  // Some training happened, and it happened identically.
  CHECK(cl.registry[0].trained_steps > 0);
  bool any_loss = false;
  for (const TraceRow& t : cl.trace) any_loss = any_loss || t.has_loss;
  CHECK(any_loss);
}

TEST_CASE("a never-changing stochastic band also equates learner and baseline") {
  // Dwell far beyond the horizon: one arrival per chain at slot 0 and no
  // transitions after it. A single-profile pool keeps every channel's
  // signature equal, so the canonical relabeling is the identity.
  ScenarioSpec s;
  s.kind = "stochastic";
  s.channels = 2;
  s.horizon = 2000;
  s.max_packet_len = 2;
  s.window = 500;
  s.pool = {Placement::parse("TDMA(2,0,4)@1").profile};
  s.dwell_slots = 1000000;
  s.hyper = tiny_hyper(2, 2);
  const RunResult cl = run_scenario(s, AgentKind::CLD3QL, 23);
  const RunResult base = run_scenario(s, AgentKind::D3QL, 23);
  CHECK(cl.announcements == 1);
  CHECK(base.announcements == 1);
  CHECK(same_trace(cl.trace, base.trace));
  CHECK(cl.successes == base.successes);
}

TEST_CASE("interval summaries average the windows inside each interval") {
  RunResult run;
  run.horizon = 400;
  run.interval_starts = {0, 200};
  for (int i = 1; i <= 4; ++i) {
    WindowRow w;
    w.slot = i * 100;
    w.throughput = i;
    w.collision_rate = 0.1 * i;
    w.jain = 1.0;
    run.windows.push_back(w);
  }
  const std::vector<IntervalSummary> sums = interval_summaries(run);
  REQUIRE(sums.size() == 2);
  CHECK(sums[0].index == 1);
  CHECK(sums[0].from == 0);
  CHECK(sums[0].until == 200);
  CHECK(sums[0].mean_throughput == doctest::Approx(1.5));
  CHECK(sums[1].until == 400);
  CHECK(sums[1].mean_throughput == doctest::Approx(3.5));
  CHECK(sums[1].mean_collision == doctest::Approx(0.35));
  CHECK(interval_summaries(RunResult{}).empty());
}

TEST_CASE("aggregation reports pointwise mean and population deviation") {
  auto mk = [](double t1, double t2) {
    RunResult r;
    WindowRow w;
    w.slot = 100;
    w.throughput = t1;
    w.collision_rate = t1 / 2;
    w.jain = 1.0;
    r.windows.push_back(w);
    w.slot = 200;
    w.throughput = t2;
    w.collision_rate = t2 / 2;
    r.windows.push_back(w);
    return r;
  };
  const Aggregate agg = aggregate({mk(0.4, 0.6), mk(0.8, 0.2)});
  REQUIRE(agg.slots == std::vector<long>({100, 200}));
  CHECK(agg.mean_throughput[0] == doctest::Approx(0.6));
  CHECK(agg.std_throughput[0] == doctest::Approx(0.2));
  CHECK(agg.mean_throughput[1] == doctest::Approx(0.4));
  CHECK(agg.std_throughput[1] == doctest::Approx(0.2));
  CHECK(agg.mean_collision[0] == doctest::Approx(0.3));

  RunResult shorter = mk(0.5, 0.5);
  shorter.windows.pop_back();
  CHECK_THROWS_AS(aggregate({mk(0.4, 0.6), shorter}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);

  const Aggregate same = aggregate({mk(0.4, 0.6), mk(0.4, 0.6)});
  CHECK(same.std_throughput[0] == 0.0);
  CHECK(same.std_jain[0] == 0.0);
}

TEST_CASE("CSV writers emit the documented headers and rows") {
  RunResult run;
  WindowRow w;
  w.slot = 100;
  w.throughput = 0.5;
  w.collision_rate = 0.25;
  w.jain = 1;
  w.max_channel_ratio = 0.8;
  w.eps = 0.37;
  w.registry = 2;
  w.announcements = 3;
  run.windows.push_back(w);
  CHECK(metrics_csv(run) ==
        "slot,throughput,collision_rate,jain,max_channel_ratio,eps,registry,"
        "announcements\n100,0.5,0.25,1,0.8,0.37,2,3\n");

  FairnessRow f;
  f.slot = 100;
  f.ue_id = 1;
  f.channel = 2;
  f.x = 0.375;
  f.chi = 0.5;
  f.ratio = 0.75;
  f.jain = 0.9;
  run.fairness.push_back(f);
  CHECK(fairness_csv(run) ==
        "slot,ue_id,channel,x,chi,ratio,jain\n100,1,2,0.375,0.5,0.75,0.9\n");

  TraceRow tr;
  tr.decision_step = 1;
  tr.slot = 5;
  tr.eps = 1.0;
  tr.action_r = 2;
  tr.action_c = 3;
  tr.reward = -2.5;
  run.trace.push_back(tr);
  tr.decision_step = 2;
  tr.slot = 7;
  tr.reward = 0.1;
  tr.has_loss = true;
  tr.td_loss = 0.125;
  run.trace.push_back(tr);
  CHECK(trace_csv(run) ==
        "decision_step,slot,eps,action_r,action_c,reward,td_loss\n"
        "1,5,1,2,3,-2.5,\n"
        "2,7,1,2,3,0.1,0.125\n");

  ContextRegistry::Entry e;
  e.key = "[TDMA(2,0,4)][]";
  e.visits = 2;
  e.trained_steps = 7;
  e.created_slot = 0;
  run.registry.push_back(e);
  CHECK(registry_csv(run) ==
        "key,visits,trained_steps,created_slot\n\"[TDMA(2,0,4)][]\",2,7,0\n");

  Aggregate agg;
  agg.slots = {100};
  agg.mean_throughput = {0.5};
  agg.std_throughput = {0.1};
  agg.mean_collision = {0.2};
  agg.std_collision = {0.0};
  agg.mean_jain = {1.0};
  agg.std_jain = {0.0};
  CHECK(aggregate_csv(agg) ==
        "slot,mean_throughput,std_throughput,mean_collision,std_collision,"
        "mean_jain,std_jain\n100,0.5,0.1,0.2,0,1,0\n");
}

TEST_CASE("slot dumps list every channel's transmitters per slot") {
  ScenarioSpec s = empty_channel_spec();
  s.horizon = 100;
  s.window = 100;
  s.intervals[0].until = 100;
  const RunResult plain = run_scenario(s, AgentKind::Random, 1);
  CHECK(plain.slot_rows.empty());
  RunOptions opts;
  opts.dump_slots = true;
  const RunResult dumped = run_scenario(s, AgentKind::Random, 1, opts);
  REQUIRE(dumped.slot_rows.size() == 100);
  CHECK(dumped.slot_rows[0].rfind("0,1,", 0) == 0);
  CHECK(dumped.slot_rows[42].rfind("42,1,", 0) == 0);
}

TEST_CASE("file helpers round-trip and surface IO failures") {
  const std::string path = "/tmp/clmac_harness_io_test.txt";
  write_file(path, "alpha,beta\n1,2\n");
  CHECK(read_file(path) == "alpha,beta\n1,2\n");
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_file("/tmp/clmac_does_not_exist_42.txt"), std::runtime_error);
  CHECK_THROWS_AS(write_file("/tmp/no_such_dir_42/x.txt", "x"), std::runtime_error);
}
