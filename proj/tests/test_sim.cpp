#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <vector>

#include "clmac/sim.hpp"

using namespace clmac;

namespace {

SimConfig small_cfg(std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.channels = 3;
  cfg.max_packet_len = 5;
  cfg.header = 0.5;
  cfg.horizon = 1000;
  cfg.seed = seed;
  return cfg;
}

SlotOutcome outcome(long slot, int channels, std::vector<std::vector<int>> tx) {
  SlotOutcome o;
  o.slot = slot;
  o.tx = std::move(tx);
  o.tx.resize(channels);
  return o;
}

}  // namespace

TEST_CASE("config validation rejects out-of-range fields") {
  CHECK_NOTHROW(small_cfg().validate());
  SimConfig c = small_cfg();
  c.channels = 0;
  CHECK_THROWS(c.validate());
  c = small_cfg();
  c.max_packet_len = 0;
  CHECK_THROWS(c.validate());
  c = small_cfg();
  c.header = 1.0;
  CHECK_THROWS(c.validate());
  c.header = -0.1;
  CHECK_THROWS(c.validate());
  c = small_cfg();
  c.horizon = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("action indices round-trip for every (len, channel)") {
  const int C = 3, R = 5;
  std::vector<bool> seen((R + 1) * C, false);
  for (int len = 0; len <= R; ++len) {
    for (int ch = 1; ch <= C; ++ch) {
      const Action a{len, ch};
      const int idx = a.index(C);
      REQUIRE(idx >= 0);
      REQUIRE(idx < (R + 1) * C);
      CHECK_FALSE(seen[idx]);
      seen[idx] = true;
      CHECK(Action::from_index(idx, C) == a);
    }
  }
  CHECK(Action{0, 1}.index(C) == 0);  // senses occupy the lowest indices
}

TEST_CASE("a packet succeeds only when the agent is sole transmitter throughout") {
  std::deque<SlotOutcome> w;
  w.push_back(outcome(10, 3, {{kAgentId}, {7}, {}}));
  w.push_back(outcome(11, 3, {{kAgentId}, {}, {}}));
  w.push_back(outcome(12, 3, {{kAgentId}, {}, {9}}));
  CHECK(resolve_agent_packet(10, 3, 1, w) == Observation::Success);

  // One overlapping slot anywhere fails the whole packet.
  w[1].tx[0].push_back(4);
  CHECK(resolve_agent_packet(10, 3, 1, w) == Observation::Collision);
  w[1].tx[0].pop_back();
  w[2].tx[0].push_back(4);
  CHECK(resolve_agent_packet(10, 3, 1, w) == Observation::Collision);
}

TEST_CASE("packet resolution demands full window coverage") {
  std::deque<SlotOutcome> w;
  w.push_back(outcome(5, 2, {{kAgentId}, {}}));
  w.push_back(outcome(6, 2, {{kAgentId}, {}}));
  CHECK_THROWS(resolve_agent_packet(5, 3, 1, w));   // slot 7 missing
  CHECK_THROWS(resolve_agent_packet(4, 2, 1, w));   // slot 4 missing
  CHECK(resolve_agent_packet(5, 2, 1, w) == Observation::Success);
}

TEST_CASE("sensing reports busy for any transmitter, idle otherwise") {
  const SlotOutcome o = outcome(0, 3, {{3}, {}, {1, 2}});
  CHECK(resolve_sense(o, 1) == Observation::Busy);
  CHECK(resolve_sense(o, 2) == Observation::Idle);
  CHECK(resolve_sense(o, 3) == Observation::Busy);
}

TEST_CASE("TDMA incumbents occupy exactly their burst slots") {
  SimCore sim(small_cfg());
  sim.set_occupants({{1, UEProfile::parse("TDMA(3,0,8)"), 1}}, 0);
  std::vector<int> busy;
  for (long t = 0; t < 16; ++t) {
    const SlotOutcome& o = sim.advance(std::nullopt, t);
    busy.push_back(o.count(1));
    CHECK(o.count(2) == 0);
    CHECK(o.count(3) == 0);
  }
  CHECK(busy == std::vector<int>{1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0});
}

TEST_CASE("overlapping incumbents collide and both packets fail") {
  SimCore sim(small_cfg());
  sim.set_occupants({{1, UEProfile::parse("TDMA(3,0,8)"), 1},
                     {2, UEProfile::parse("TDMA(2,1,8)"), 1}},
                    0);
  std::vector<PacketEnd> ended;
  for (long t = 0; t < 8; ++t) {
    const SlotOutcome& o = sim.advance(std::nullopt, t);
    for (const PacketEnd& e : o.ended) ended.push_back(e);
    if (t == 1 || t == 2) CHECK(o.collided(1));
  }
  REQUIRE(ended.size() == 2);
  for (const PacketEnd& e : ended) {
    CHECK(e.channel == 1);
    CHECK(e.collided);  // whole-packet failure even for the non-overlapped slot 0
  }
}

TEST_CASE("the agent's transmission collides incumbent packets and vice versa") {
  SimCore sim(small_cfg());
  sim.set_occupants({{1, UEProfile::parse("TDMA(3,0,8)"), 1}}, 0);
  // Agent transmits a 2-slot packet on channel 1 over slots 0..1.
  sim.advance(1, 0);
  const SlotOutcome& o1 = sim.advance(1, 1);
  CHECK(o1.collided(1));
  CHECK(resolve_agent_packet(0, 2, 1, sim.recent()) == Observation::Collision);
  // Incumbent's packet (ends slot 2) is marked failed too.
  const SlotOutcome& o2 = sim.advance(std::nullopt, 2);
  REQUIRE(o2.ended.size() == 1);
  CHECK(o2.ended[0].collided);
}

TEST_CASE("the agent succeeds on a channel incumbents leave idle") {
  SimCore sim(small_cfg());
  sim.set_occupants({{1, UEProfile::parse("TDMA(3,0,8)"), 1}}, 0);
  for (long t = 0; t < 4; ++t) sim.advance(2, t);
  CHECK(resolve_agent_packet(0, 4, 2, sim.recent()) == Observation::Success);
}

TEST_CASE("sensing adds no transmission") {
  SimCore sim(small_cfg());
  sim.set_occupants({{1, UEProfile::parse("TDMA(3,0,8)"), 1}}, 0);
  const SlotOutcome& o = sim.advance(std::nullopt, 0);
  CHECK(o.count(1) == 1);  // incumbent only
  CHECK(resolve_sense(o, 1) == Observation::Busy);
  CHECK(resolve_sense(o, 2) == Observation::Idle);
}

TEST_CASE("CSMA incumbents carrier-sense the agent's transmissions") {
  SimCore sim(small_cfg(3));
  sim.set_occupants({{1, UEProfile::parse("CSMA(2,4,6)"), 1}}, 0);
  REQUIRE(sim.machines().size() == 1);
  // Pick a seed whose initial backoff is positive so the machine starts idle.
  REQUIRE(sim.machines()[0].backoff() > 0);
  sim.advance(1, 0);  // agent on the CSMA home channel
  const int after_first = sim.machines()[0].backoff();
  std::vector<int> backoffs;
  for (long t = 1; t < 8; ++t) {
    const SlotOutcome& o = sim.advance(1, t);
    CHECK(o.count(1) == 1);  // agent alone: the incumbent defers
    backoffs.push_back(sim.machines()[0].backoff());
  }
  // Counter froze the moment the channel sensed busy.
  for (int b : backoffs) CHECK(b == after_first);
}

TEST_CASE("a transmitter does not carrier-sense its own packet") {
  SimCore sim(small_cfg(3));
  sim.set_occupants({{1, UEProfile::parse("CSMA(2,4,6)"), 1}}, 0);
  long first_tx = -1;
  for (long t = 0; t < 20 && first_tx < 0; ++t) {
    const SlotOutcome& o = sim.advance(std::nullopt, t);
    if (o.count(1) == 1) first_tx = t;
  }
  REQUIRE(first_tx >= 0);
  // The packet is 2 slots long; the second slot must follow immediately even
  // though the machine itself made the channel busy.
  const SlotOutcome& o = sim.advance(std::nullopt, first_tx + 1);
  CHECK(o.count(1) == 1);
  REQUIRE(o.ended.size() == 1);
  CHECK(o.ended[0].len == 2);
  CHECK_FALSE(o.ended[0].collided);
}

TEST_CASE("identical seeds replay identical transmit traces") {
  auto run = [](std::uint64_t seed) {
    SimCore sim(small_cfg(seed));
    sim.set_occupants({{1, UEProfile::parse("TDMA(3,0,8)"), 1},
                       {2, UEProfile::parse("CSMA(2,4,6)"), 2},
                       {3, UEProfile::parse("CH(2,1)"), 0}},
                      0);
    std::vector<std::vector<std::vector<int>>> trace;
    for (long t = 0; t < 300; ++t)
      trace.push_back(sim.advance(t % 7 == 0 ? std::optional<int>(1) : std::nullopt, t).tx);
    return trace;
  };
  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("re-announcing the same occupants preserves protocol state") {
  SimCore sim(small_cfg(2));
  const std::vector<Occupant> occ{{4, UEProfile::parse("CH(2,1)"), 0},
                                  {5, UEProfile::parse("CSMA(3,4,8)"), 2}};
  sim.set_occupants(occ, 0);
  for (long t = 0; t < 5; ++t) sim.advance(std::nullopt, t);
  const int ch_before = sim.machines()[0].channel();
  const int w_before = sim.machines()[1].window();
  const int b_before = sim.machines()[1].backoff();
  sim.set_occupants(occ, 5);
  CHECK(sim.machines()[0].channel() == ch_before);
  CHECK(sim.machines()[1].window() == w_before);
  CHECK(sim.machines()[1].backoff() == b_before);
}

TEST_CASE("a moved or replaced placement starts a fresh machine") {
  SimCore sim(small_cfg(2));
  sim.set_occupants({{4, UEProfile::parse("TDMA(3,0,8)"), 1}}, 0);
  for (long t = 0; t < 3; ++t) sim.advance(std::nullopt, t);
  sim.set_occupants({{4, UEProfile::parse("TDMA(3,0,8)"), 2}}, 3);
  CHECK(sim.machines()[0].channel() == 2);
  // A brand-new ue id also starts fresh while the survivor keeps its channel.
  sim.set_occupants({{4, UEProfile::parse("TDMA(3,0,8)"), 2},
                     {9, UEProfile::parse("CH(1,1)"), 3}},
                    4);
  CHECK(sim.machines()[0].channel() == 2);
  CHECK(sim.machines()[1].channel() == 3);
}

TEST_CASE("the outcome ring always covers a full packet window") {
  SimCore sim(small_cfg());
  sim.set_occupants({}, 0);
  for (long t = 0; t < 50; ++t) sim.advance(std::nullopt, t);
  CHECK(sim.recent().size() >= static_cast<size_t>(small_cfg().max_packet_len));
  CHECK(sim.recent().back().slot == 49);
  CHECK(sim.recent().front().slot <= 49 - small_cfg().max_packet_len + 1);
}

TEST_CASE("advance rejects an out-of-range agent channel") {
  SimCore sim(small_cfg());
  sim.set_occupants({}, 0);
  CHECK_THROWS(sim.advance(0, 0));
  CHECK_THROWS(sim.advance(4, 0));
  CHECK_NOTHROW(sim.advance(3, 0));
}
