#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "clmac/net.hpp"
#include "clmac/sim.hpp"

namespace clmac {

// A network context: per channel, the multiset of incumbent profile type ids
// active there. Channel-hopping profiles appear in every channel's multiset
// since they visit all of them. The agent itself is not part of the context.
struct Context {
  std::vector<std::vector<std::string>> channels;  // entry c-1: sorted type ids on channel c

  static Context from_occupants(const std::vector<Occupant>& occ, int num_channels);
  bool operator==(const Context&) const = default;
};

// Channel relabeling that maps a context onto its canonical representative:
// channels ordered by their type-id signature, ties broken by original index.
// pi[c-1] is the 1-based canonical channel for environment channel c.
struct Canonical {
  std::vector<int> pi;
  std::string key;
};

Canonical canonicalize(const Context& ctx);
std::string canonical_key(const Context& ctx);

int apply_pi(const std::vector<int>& pi, int channel);
std::vector<int> invert_pi(const std::vector<int>& pi);

// Rewrites every channel reference of a decision-time state into canonical
// space: history action channels map through pi and the ratio vector is
// permuted so that canonical channel pi(c) carries environment channel c's
// ratio.
AgentState transform_state(const AgentState& s, const std::vector<int>& pi);

// Canonical action -> environment action (channel through pi^-1).
Action detransform_action(const Action& a, const std::vector<int>& pi);

// Environment action -> canonical action.
Action transform_action(const Action& a, const std::vector<int>& pi);

// Number of distinguishable contexts given `types` possible per-channel
// signatures and `channels` channels: multisets of size `channels` drawn with
// replacement from `types` signatures. Throws std::overflow_error when the
// count does not fit 64 bits.
unsigned long long context_bound(int types, int channels);

// Per-context learning snapshot: the online/target nets, the replay memory
// (canonical space) and bookkeeping for the registry dump.
struct Snapshot {
  ValueNet online;
  ValueNet target;
  ReplayMemory replay;
  Optimizer opt;
  long visits = 0;
  long created_slot = 0;
  long trained_steps = 0;
  std::string key;
};

// Registry of snapshots keyed by canonical context. In canonical mode a
// revisited context (any channel permutation of a known one) resumes its
// stored snapshot; in per-announcement mode every announcement registers a
// fresh key, modeling an agent with no context memory.
class ContextRegistry {
 public:
  struct Entry {
    std::string key;
    long visits;
    long trained_steps;
    long created_slot;
  };

  // Returns the snapshot for `key`, creating it via `make` on first sight.
  // Bumps the visit counter. `created` reports whether it was new.
  Snapshot& lookup_or_create(const std::string& key, long slot, bool& created,
                             const std::function<Snapshot()>& make);

  size_t size() const { return store_.size(); }
  std::vector<Entry> entries() const;

  // On-disk spill of every snapshot (nets + replay), one file per entry plus
  // a manifest. load() restores them bit-exactly; both throw
  // std::runtime_error on malformed content.
  void spill(const std::string& dir) const;
  static ContextRegistry load(const std::string& dir, size_t replay_capacity);

 private:
  std::map<std::string, Snapshot> store_;  // ordered: deterministic dumps
};

}  // namespace clmac
