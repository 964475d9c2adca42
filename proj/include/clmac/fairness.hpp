#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

namespace clmac {

// Splits one unit of channel capacity across users by round-robin increments
// of eps, never lifting a user above its cap. Increments run in input order;
// the final increment per user shrinks to land exactly on the cap or on the
// remaining capacity. Stops when capacity is exhausted or everyone is capped.
//
// Arithmetic runs in integer micro-units so results are exact: e.g.
// caps {0.9, 0.5, 0.1} -> {0.45, 0.45, 0.1} and caps {1.0, 0.375} ->
// {0.625, 0.375}.
std::vector<double> water_fill(const std::vector<double>& caps, double eps = 0.01);

// Jain fairness index (sum(rho))^2 / (N * sum(rho^2)) over N = ratios.size()
// users. An all-zero vector is treated as perfectly fair (index 1).
double jain_index(const Eigen::VectorXd& ratios);

// Sliding-window throughput accounting for every user, agent included.
//
// Each user/channel pair owns a ring of the last `window` slots. A packet of
// length r credited at its final slot spreads (r - header)/r payload across
// each of its r occupied slots, so x(ue, ch) = window-sum / window is the
// header-excluded throughput share of the trailing `window` slots.
class ThroughputLedger {
 public:
  ThroughputLedger(int channels, int window = 1000, double header = 0.5);

  void add_ue(int ue_id);
  void remove_ue(int ue_id);
  bool has_ue(int ue_id) const { return rows_.count(ue_id) != 0; }
  std::vector<int> ues() const;

  // Must be called once per slot, before any credit for that slot, to evict
  // the cell leaving the window.
  void advance(long slot);

  // Credits a successful packet of `len` slots ending at `end_slot`.
  void credit(int ue_id, int channel, int len, long end_slot);

  double x(int ue_id, int channel) const;

  // Water-fill targets, recomputed by the caller on every context change.
  void set_target(int ue_id, const Eigen::VectorXd& chi);
  double chi(int ue_id, int channel) const;

  // x/chi on one channel. 0/0 is 0; positive x against a zero target returns
  // +infinity so misuse is visible rather than silent.
  double normalized(int ue_id, int channel) const;

  // Sum over channels of x divided by sum over channels of chi; the per-user
  // normalized throughput used for run metrics and the Jain index.
  double ratio_total(int ue_id) const;

  int channels() const { return channels_; }
  int window() const { return window_; }
  double header() const { return header_; }

 private:
  // x is summed from the ring on demand. An incremental per-channel total
  // would drift by rounding under subtract-on-evict and read nonzero (or
  // negative) long after every credit has left the window.
  struct Row {
    Eigen::MatrixXd ring;  // channels x window
    Eigen::VectorXd chi;   // per channel
  };

  int channels_;
  int window_;
  double header_;
  std::map<int, Row> rows_;
};

}  // namespace clmac
