#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "clmac/incumbents.hpp"

namespace clmac {

// An agent transmission plan over [0, T): r[c][t] is the packet length
// started at slot t on channel c (0 if none). z counts remaining slots of
// the packet occupying that channel (r at the start slot, then down to 1 at
// the last slot). m marks transmitting slots. d marks decision points: slots
// where no own packet is in flight, i.e. idle slots and start slots.
struct Schedule {
  int channels = 1;
  long horizon = 0;
  Eigen::MatrixXi r;  // channels x horizon
  Eigen::MatrixXi z;
  Eigen::MatrixXi m;
  Eigen::VectorXi d;  // horizon
};

// Fills in z, m, d from r. Throws std::invalid_argument when r is not a
// well-formed plan: a length outside [0, max_packet_len], a packet starting
// on a channel that is still mid-transmission (no-preemption rule), or a
// packet running past the horizon.
Schedule derive_support(const Eigen::MatrixXi& r, int max_packet_len);

// One constraint's verdict; t/channel point at the first violation.
struct ConstraintCheck {
  bool ok = true;
  long t = -1;
  int channel = -1;  // -1 when not channel-specific
  double value = 0.0;
};

struct ConstraintReport {
  ConstraintCheck one_channel;       // at most one own transmission per slot
  ConstraintCheck incumbent_overlap; // never transmit over an incumbent
  ConstraintCheck fairness_cap;      // windowed share <= target on every channel
  bool ok() const { return one_channel.ok && incumbent_overlap.ok && fairness_cap.ok; }
};

// Checks the three schedule-level constraints against the incumbent
// occupancy matrix busy (channels x horizon, nonzero = some incumbent
// transmits) and the per-channel fair-share targets chi. The fairness share
// at slot t is the mean of r over the trailing `window` slots (raw packet
// lengths credited at start slots, no header discount), evaluated for
// t >= window-1; credits from earlier slots count via the window tail.
ConstraintReport check_constraints(const Schedule& s, const Eigen::MatrixXi& busy,
                                   const Eigen::VectorXd& chi, int window);

// Objective: the windowed share summed over all channels and all evaluated
// slots t in [window-1, horizon-1].
double schedule_objective(const Schedule& s, int window);

// A small deterministic planning instance. Incumbents must have fully
// deterministic schedules: TDMA anywhere, CH only with a pinned start
// channel; CSMA is rejected (randomized backoff).
struct OracleInstance {
  int channels = 1;
  long horizon = 0;
  int max_packet_len = 1;
  int window = 1;
  std::vector<Placement> incumbents;
  Eigen::VectorXd chi;  // per-channel agent targets

  // Parses the JSON instance text. chi may be given explicitly; otherwise it
  // is derived per channel by water-filling the agent (cap 1) against the
  // incumbents' expected throughputs on that channel.
  static OracleInstance from_json(const std::string& text);
  void validate() const;

  // Per-slot incumbent occupancy (channels x horizon, entry = transmitter count).
  Eigen::MatrixXi busy_matrix() const;
};

struct OracleResult {
  double objective = 0.0;
  Schedule schedule;
  long nodes = 0;  // search nodes expanded
};

// Thrown when the exhaustive search would exceed the node ceiling.
struct SearchTooLarge : std::runtime_error {
  explicit SearchTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Exhaustive depth-first search over agent plans, maximizing
// schedule_objective subject to check_constraints. Memoizes on the packed
// (slot, trailing credit ring) state when it fits 64 bits; otherwise runs a
// plain search under a node ceiling and refuses with a size estimate.
OracleResult brute_force_optimum(const Eigen::MatrixXi& busy, const Eigen::VectorXd& chi,
                                 int max_packet_len, int window);
OracleResult brute_force_optimum(const OracleInstance& inst);

// CSV dump of a schedule: slot,d,then per channel r/z/m columns.
std::string schedule_csv(const Schedule& s);

}  // namespace clmac
