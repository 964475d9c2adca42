#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <vector>

#include "clmac/incumbents.hpp"
#include "clmac/rng.hpp"

namespace clmac {

// The agent is always user 0 in transmit traces and ledgers.
inline constexpr int kAgentId = 0;

struct SimConfig {
  int channels = 3;
  int max_packet_len = 5;       // agent packet lengths r in 1..max_packet_len
  double header = 0.5;          // per-packet header overhead, in slots
  long horizon = 40000;
  std::uint64_t seed = 1;

  void validate() const;
};

// What the agent hears back at the end of an action. Sensing yields
// Busy/Idle; a transmission yields Success only if every slot of the packet
// had the agent as the sole transmitter on its channel, else Collision.
enum class Observation { Busy, Idle, Success, Collision };

// Agent action: len == 0 senses `channel` for one slot, len >= 1 transmits a
// len-slot packet on `channel`. Channels are 1-based.
struct Action {
  int len = 0;
  int channel = 1;

  int index(int num_channels) const { return len * num_channels + (channel - 1); }
  static Action from_index(int idx, int num_channels) {
    return {idx / num_channels, idx % num_channels + 1};
  }
  bool operator==(const Action&) const = default;
};

// One (observation, action) entry of the agent's decision history. A null
// entry pads the history before enough decisions have resolved.
struct HistEntry {
  bool null = true;
  Observation obs = Observation::Idle;
  Action act;
};

// Decision-time state: the most recent H resolved (observation, action)
// tuples plus the current per-channel normalized throughputs x_c / chi_c.
struct AgentState {
  std::vector<HistEntry> history;  // history[0] is the oldest entry
  Eigen::VectorXd ratios;          // one per channel, unclipped
};

// An incumbent packet that finished this slot.
struct PacketEnd {
  int ue_id;
  int channel;  // 1-based
  int len;
  bool collided;
};

struct SlotOutcome {
  long slot = 0;
  std::vector<std::vector<int>> tx;  // per channel (0-based), transmitter ue ids
  std::vector<PacketEnd> ended;      // incumbent packets that completed this slot

  int count(int channel) const { return static_cast<int>(tx[channel - 1].size()); }
  bool collided(int channel) const { return count(channel) >= 2; }
};

// Resolves a completed agent transmission against the recorded outcomes.
// The window must cover slots [start, start+len). Success iff the agent was
// the sole transmitter on `channel` in every slot of the packet.
Observation resolve_agent_packet(long start, int len, int channel,
                                 const std::deque<SlotOutcome>& outcomes);

// Resolves a one-slot sense: Busy iff any incumbent transmitted on `channel`.
Observation resolve_sense(const SlotOutcome& outcome, int channel);

// A profile instance active on the air. Channel 0 lets a CH machine draw its
// starting channel at attach time.
struct Occupant {
  int ue_id;
  UEProfile profile;
  int channel;

  bool operator==(const Occupant&) const = default;
};

// Slotted multi-channel engine. Owns the incumbent machines and the
// environment's random stream; the caller owns the agent and the clock.
class SimCore {
 public:
  explicit SimCore(const SimConfig& cfg);

  // Replaces the active incumbent set. Machines whose (ue_id, profile,
  // channel) placement is unchanged keep their protocol state; moved or new
  // placements start fresh.
  void set_occupants(const std::vector<Occupant>& occupants, long slot);

  // Advances one slot. agent_channel, when set, adds the agent as a
  // transmitter on that 1-based channel. Returns the resolved outcome,
  // including incumbent packets that ended.
  const SlotOutcome& advance(std::optional<int> agent_channel, long slot);

  // Recent outcomes, oldest first; covers at least the last
  // max_packet_len slots.
  const std::deque<SlotOutcome>& recent() const { return recent_; }

  const std::vector<UEMachine>& machines() const { return machines_; }
  Rng& rng() { return rng_; }
  const SimConfig& config() const { return cfg_; }

 private:
  bool busy_for(const UEMachine& m) const;

  SimConfig cfg_;
  Rng rng_;
  std::vector<UEMachine> machines_;
  std::vector<Occupant> occupants_;
  std::deque<SlotOutcome> recent_;
};

}  // namespace clmac
