#include "clmac/sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace clmac {

void SimConfig::validate() const {
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (max_packet_len < 1) throw std::invalid_argument("max_packet_len must be >= 1");
  if (header < 0 || header >= 1)
    throw std::invalid_argument("header overhead must lie in [0, 1)");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
}

Observation resolve_agent_packet(long start, int len, int channel,
                                 const std::deque<SlotOutcome>& outcomes) {
  int seen = 0;
  for (const SlotOutcome& o : outcomes) {
    if (o.slot < start || o.slot >= start + len) continue;
    ++seen;
    const auto& ids = o.tx[channel - 1];
    if (ids.size() != 1 || ids[0] != kAgentId) return Observation::Collision;
  }
  if (seen != len)
    throw std::invalid_argument("outcome window does not cover the packet");
  return Observation::Success;
}

Observation resolve_sense(const SlotOutcome& outcome, int channel) {
  return outcome.count(channel) >= 1 ? Observation::Busy : Observation::Idle;
}

SimCore::SimCore(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.seed ^ 0x9e3779b97f4a7c15ull) {
  cfg_.validate();
}

void SimCore::set_occupants(const std::vector<Occupant>& occupants, long slot) {
  std::vector<UEMachine> next;
  next.reserve(occupants.size());
  for (const Occupant& oc : occupants) {
    auto same = std::find_if(machines_.begin(), machines_.end(), [&](const UEMachine& m) {
      return m.ue_id == oc.ue_id;
    });
    auto prev = std::find_if(occupants_.begin(), occupants_.end(), [&](const Occupant& p) {
      return p.ue_id == oc.ue_id;
    });
    if (same != machines_.end() && prev != occupants_.end() && *prev == oc) {
      next.push_back(*same);  // unchanged placement keeps protocol state
    } else {
      next.emplace_back(oc.ue_id, oc.profile, oc.channel, slot, cfg_.channels, rng_);
    }
  }
  machines_ = std::move(next);
  occupants_ = occupants;
}

bool SimCore::busy_for(const UEMachine& m) const {
  if (recent_.empty()) return false;
  const auto& ids = recent_.back().tx[m.channel() - 1];
  for (int id : ids)
    if (id != m.ue_id) return true;
  return false;
}

const SlotOutcome& SimCore::advance(std::optional<int> agent_channel, long slot) {
  SlotOutcome out;
  out.slot = slot;
  out.tx.resize(cfg_.channels);
  if (agent_channel) {
    if (*agent_channel < 1 || *agent_channel > cfg_.channels)
      throw std::invalid_argument("agent channel out of range");
    out.tx[*agent_channel - 1].push_back(kAgentId);
  }
  for (UEMachine& m : machines_) {
    const bool busy = busy_for(m);
    if (m.step(busy)) out.tx[m.channel() - 1].push_back(m.ue_id);
  }
  for (int c = 1; c <= cfg_.channels; ++c) {
    if (out.collided(c)) {
      for (UEMachine& m : machines_)
        if (m.in_packet() && m.channel() == c) m.mark_collided();
    }
  }
  for (UEMachine& m : machines_) {
    if (m.packet_ends_now()) {
      out.ended.push_back({m.ue_id, m.channel(), m.packet_len(), m.packet_collided()});
      m.on_packet_end(m.packet_collided(), rng_);
    }
  }
  recent_.push_back(std::move(out));
  const size_t keep = static_cast<size_t>(cfg_.max_packet_len) + 2;
  while (recent_.size() > keep) recent_.pop_front();
  return recent_.back();
}

}  // namespace clmac
