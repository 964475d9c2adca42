#include "clmac/fairness.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace clmac {

std::vector<double> water_fill(const std::vector<double>& caps, double eps) {
  if (eps <= 0 || eps > 1) throw std::invalid_argument("water_fill: eps must lie in (0, 1]");
  constexpr long long kUnit = 1000000;  // micro-units per slot of capacity
  const long long eps_u = std::llround(eps * kUnit);
  if (eps_u <= 0) throw std::invalid_argument("water_fill: eps too small");

  const size_t n = caps.size();
  std::vector<long long> cap_u(n), alloc(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (caps[i] < 0) throw std::invalid_argument("water_fill: negative cap");
    cap_u[i] = std::llround(std::min(caps[i], 1.0) * kUnit);
  }

  long long r = kUnit;
  bool progressed = true;
  while (r > 0 && progressed) {
    progressed = false;
    for (size_t i = 0; i < n && r > 0; ++i) {
      if (alloc[i] >= cap_u[i]) continue;
      const long long d = std::min({eps_u, cap_u[i] - alloc[i], r});
      alloc[i] += d;
      r -= d;
      progressed = true;
    }
  }

  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<double>(alloc[i]) / kUnit;
  return out;
}

double jain_index(const Eigen::VectorXd& ratios) {
  if (ratios.size() == 0) throw std::invalid_argument("jain_index: empty input");
  if ((ratios.array() < 0).any()) throw std::invalid_argument("jain_index: negative ratio");
  const double sum = ratios.sum();
  const double sq = ratios.squaredNorm();
  if (sq == 0.0) return 1.0;  // nobody has throughput: treat as perfectly fair
  return sum * sum / (static_cast<double>(ratios.size()) * sq);
}

ThroughputLedger::ThroughputLedger(int channels, int window, double header)
    : channels_(channels), window_(window), header_(header) {
  if (channels < 1) throw std::invalid_argument("ledger: channels must be >= 1");
  if (window < 1) throw std::invalid_argument("ledger: window must be >= 1");
  if (header < 0 || header >= 1) throw std::invalid_argument("ledger: header must lie in [0, 1)");
}

void ThroughputLedger::add_ue(int ue_id) {
  if (rows_.count(ue_id)) return;
  Row row;
  row.ring = Eigen::MatrixXd::Zero(channels_, window_);
  row.chi = Eigen::VectorXd::Zero(channels_);
  rows_.emplace(ue_id, std::move(row));
}

void ThroughputLedger::remove_ue(int ue_id) { rows_.erase(ue_id); }

std::vector<int> ThroughputLedger::ues() const {
  std::vector<int> out;
  out.reserve(rows_.size());
  for (const auto& [id, row] : rows_) out.push_back(id);
  return out;
}

void ThroughputLedger::advance(long slot) {
  const long col = slot % window_;
  for (auto& [id, row] : rows_) row.ring.col(col).setZero();
}

void ThroughputLedger::credit(int ue_id, int channel, int len, long end_slot) {
  auto it = rows_.find(ue_id);
  if (it == rows_.end()) throw std::invalid_argument("ledger: unknown ue");
  if (channel < 1 || channel > channels_)
    throw std::invalid_argument("ledger: channel out of range");
  if (len < 1 || len > window_) throw std::invalid_argument("ledger: bad packet length");
  if (end_slot - len + 1 < 0) throw std::invalid_argument("ledger: packet precedes slot 0");
  const double per_slot = (len - header_) / len;
  Row& row = it->second;
  for (long s = end_slot - len + 1; s <= end_slot; ++s)
    row.ring(channel - 1, s % window_) += per_slot;
}

double ThroughputLedger::x(int ue_id, int channel) const {
  return rows_.at(ue_id).ring.row(channel - 1).sum() / window_;
}

void ThroughputLedger::set_target(int ue_id, const Eigen::VectorXd& chi) {
  rows_.at(ue_id).chi = chi;
}

double ThroughputLedger::chi(int ue_id, int channel) const {
  return rows_.at(ue_id).chi[channel - 1];
}

double ThroughputLedger::normalized(int ue_id, int channel) const {
  const double xx = x(ue_id, channel);
  const double target = chi(ue_id, channel);
  if (target <= 0.0)
    return xx > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return xx / target;
}

double ThroughputLedger::ratio_total(int ue_id) const {
  const Row& row = rows_.at(ue_id);
  const double total_chi = row.chi.sum();
  const double total_x = row.ring.sum() / window_;
  if (total_chi <= 0.0)
    return total_x > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return total_x / total_chi;
}

}  // namespace clmac
