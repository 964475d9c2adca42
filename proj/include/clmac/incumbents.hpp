#pragma once

#include <Eigen/Dense>
#include <string>

#include "clmac/rng.hpp"

namespace clmac {

enum class UEKind { TDMA, CSMA, CH };

// Transmission profile of an incumbent user. Three families:
//   TDMA(p, tau, w)   - transmits slots [tau, tau+p) of every w-slot frame
//   CSMA(p, w, wmax)  - carrier-sense with binary-exponential backoff
//   CH(p, d)          - back-to-back p-slot packets, hops d channels after each
struct UEProfile {
  UEKind kind = UEKind::TDMA;
  int p = 0;     // packet length in slots
  int tau = 0;   // TDMA: burst offset within the frame
  int w = 0;     // TDMA: frame length; CSMA: default contention window
  int wmax = 0;  // CSMA: contention window cap
  int d = 0;     // CH: hop distance per packet

  // Canonical "KIND(a,b,c)" form; unique per parameter tuple.
  std::string type_id() const;

  // Parses the canonical form; throws std::invalid_argument naming the
  // offending token on malformed input or out-of-range parameters.
  static UEProfile parse(const std::string& text);

  void validate() const;
  bool operator==(const UEProfile&) const = default;
};

// A profile placed on a channel. Channel is 1-based; 0 means "unpinned"
// (valid only for CH, whose machine draws its starting channel at seed time).
struct Placement {
  UEProfile profile;
  int channel = 0;

  // Accepts "TDMA(3,0,8)@1", "CSMA(2,4,6)@2", "CH(2,1)".
  static Placement parse(const std::string& text);
  std::string to_string() const;
};

// Stand-alone expected throughput per channel (1-based channel index maps to
// entry channel-1): TDMA p/w and CSMA p/(p+w/2) on the home channel, CH 1/C
// on every channel.
Eigen::VectorXd expected_throughput(const UEProfile&, int channel, int num_channels);

// Slot-stepped protocol machine for one incumbent.
//
// Call protocol per slot: step() decides whether the machine transmits this
// slot; after the slot's collisions are resolved the owner calls
// mark_collided() for machines caught in a collided slot, and on_packet_end()
// for machines whose packet finished.
class UEMachine {
 public:
  UEMachine(int ue_id, const UEProfile& profile, int channel, long start_slot,
            int num_channels, Rng& rng);

  // busy_last: some *other* transmitter occupied this machine's channel in
  // the previous slot. A transmitter cannot carrier-sense its own packet.
  bool step(bool busy_last);

  int channel() const { return channel_; }
  bool in_packet() const { return left_ > 0 || ends_now_; }
  bool packet_ends_now() const { return ends_now_; }
  int packet_len() const { return packet_len_; }
  void mark_collided() { collided_ = true; }
  bool packet_collided() const { return collided_; }
  void on_packet_end(bool collided, Rng& rng);

  // CSMA internals, exposed for tests.
  int window() const { return window_; }
  int backoff() const { return backoff_; }

  const int ue_id;
  const UEProfile profile;

 private:
  int channel_;        // current channel (CH hops, others fixed)
  int num_channels_;
  int slot_in_frame_;  // TDMA position within the frame
  int left_ = 0;       // remaining slots of the active packet
  int packet_len_ = 0;
  bool ends_now_ = false;
  bool collided_ = false;
  int window_ = 0;     // CSMA current contention window
  int backoff_ = 0;    // CSMA remaining backoff slots
};

}  // namespace clmac
