#include "clmac/incumbents.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace clmac {

namespace {

[[noreturn]] void bad(const std::string& text, const std::string& why) {
  throw std::invalid_argument("bad profile '" + text + "': " + why);
}

}  // namespace

std::string UEProfile::type_id() const {
  std::ostringstream os;
  switch (kind) {
    case UEKind::TDMA: os << "TDMA(" << p << "," << tau << "," << w << ")"; break;
    case UEKind::CSMA: os << "CSMA(" << p << "," << w << "," << wmax << ")"; break;
    case UEKind::CH:   os << "CH(" << p << "," << d << ")"; break;
  }
  return os.str();
}

void UEProfile::validate() const {
  if (p < 1) throw std::invalid_argument(type_id() + ": packet length must be >= 1");
  switch (kind) {
    case UEKind::TDMA:
      if (w < 1) throw std::invalid_argument(type_id() + ": frame length must be >= 1");
      if (tau < 0) throw std::invalid_argument(type_id() + ": offset must be >= 0");
      if (tau + p > w)
        throw std::invalid_argument(type_id() + ": burst must fit in the frame (tau+p <= w)");
      break;
    case UEKind::CSMA:
      if (w < 1) throw std::invalid_argument(type_id() + ": window must be >= 1");
      if (wmax < w)
        throw std::invalid_argument(type_id() + ": window cap must be >= default window");
      break;
    case UEKind::CH:
      if (d != 1 && d != -1)
        throw std::invalid_argument(type_id() + ": hop direction must be +1 or -1");
      break;
  }
}

UEProfile UEProfile::parse(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    bad(text, "expected KIND(args)");
  const std::string name = text.substr(0, open);
  std::vector<int> args;
  std::string inner = text.substr(open + 1, close - open - 1);
  std::istringstream is(inner);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    try {
      size_t used = 0;
      args.push_back(std::stoi(tok, &used));
      if (used != tok.size()) bad(text, "trailing characters in '" + tok + "'");
    } catch (const std::invalid_argument&) {
      bad(text, "not a number: '" + tok + "'");
    } catch (const std::out_of_range&) {
      bad(text, "out of range: '" + tok + "'");
    }
  }
  UEProfile prof;
  if (name == "TDMA") {
    if (args.size() != 3) bad(text, "TDMA takes (p,tau,w)");
    prof = {UEKind::TDMA, args[0], args[1], args[2], 0, 0};
  } else if (name == "CSMA") {
    if (args.size() != 3) bad(text, "CSMA takes (p,w,wmax)");
    prof = {UEKind::CSMA, args[0], 0, args[1], args[2], 0};
  } else if (name == "CH") {
    if (args.size() != 2) bad(text, "CH takes (p,d)");
    prof = {UEKind::CH, args[0], 0, 0, 0, args[1]};
  } else {
    bad(text, "unknown kind '" + name + "'");
  }
  prof.validate();
  return prof;
}

Placement Placement::parse(const std::string& text) {
  Placement pl;
  const auto at = text.rfind('@');
  if (at == std::string::npos) {
    pl.profile = UEProfile::parse(text);
    pl.channel = 0;
  } else {
    pl.profile = UEProfile::parse(text.substr(0, at));
    const std::string ch = text.substr(at + 1);
    try {
      size_t used = 0;
      pl.channel = std::stoi(ch, &used);
      if (used != ch.size() || pl.channel < 1) bad(text, "bad channel '" + ch + "'");
    } catch (const std::logic_error&) {
      bad(text, "bad channel '" + ch + "'");
    }
  }
  if (pl.profile.kind != UEKind::CH && pl.channel == 0)
    bad(text, "missing @channel (only CH may omit it)");
  return pl;
}

std::string Placement::to_string() const {
  if (channel == 0) return profile.type_id();
  return profile.type_id() + "@" + std::to_string(channel);
}

Eigen::VectorXd expected_throughput(const UEProfile& prof, int channel, int num_channels) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(num_channels);
  switch (prof.kind) {
    case UEKind::TDMA:
      e[channel - 1] = static_cast<double>(prof.p) / prof.w;
      break;
    case UEKind::CSMA:
      e[channel - 1] = prof.p / (prof.p + prof.w / 2.0);
      break;
    case UEKind::CH:
      e.setConstant(1.0 / num_channels);
      break;
  }
  return e;
}

UEMachine::UEMachine(int ue_id_, const UEProfile& profile_, int channel, long start_slot,
                     int num_channels, Rng& rng)
    : ue_id(ue_id_), profile(profile_), channel_(channel), num_channels_(num_channels) {
  profile.validate();
  switch (profile.kind) {
    case UEKind::TDMA:
      slot_in_frame_ = static_cast<int>(start_slot % profile.w);
      break;
    case UEKind::CSMA:
      window_ = profile.w;
      backoff_ = rng.range(0, window_);
      break;
    case UEKind::CH:
      if (channel_ == 0) channel_ = rng.range(1, num_channels_);
      break;
  }
  if (channel_ < 1 || channel_ > num_channels_)
    throw std::invalid_argument(profile.type_id() + ": channel out of range");
  (void)start_slot;
}

bool UEMachine::step(bool busy_last) {
  ends_now_ = false;
  bool tx = false;
  switch (profile.kind) {
    case UEKind::TDMA: {
      // Frames are aligned to absolute slot 0. A machine attached mid-burst
      // stays silent until the next full burst.
      if (left_ > 0) {
        tx = true;
        if (--left_ == 0) ends_now_ = true;
      } else if (slot_in_frame_ == profile.tau) {
        left_ = profile.p;
        packet_len_ = profile.p;
        collided_ = false;
        tx = true;
        if (--left_ == 0) ends_now_ = true;
      }
      slot_in_frame_ = (slot_in_frame_ + 1) % profile.w;
      break;
    }
    case UEKind::CSMA: {
      if (left_ > 0) {
        tx = true;
        if (--left_ == 0) ends_now_ = true;
      } else if (backoff_ == 0 && !busy_last) {
        left_ = profile.p;
        packet_len_ = profile.p;
        collided_ = false;
        tx = true;
        if (--left_ == 0) ends_now_ = true;
      } else if (backoff_ > 0 && !busy_last) {
        --backoff_;  // counter freezes while the channel is busy
      }
      break;
    }
    case UEKind::CH: {
      if (left_ == 0) {
        left_ = profile.p;
        packet_len_ = profile.p;
        collided_ = false;
      }
      tx = true;
      if (--left_ == 0) ends_now_ = true;
      break;
    }
  }
  return tx;
}

void UEMachine::on_packet_end(bool collided, Rng& rng) {
  ends_now_ = false;
  collided_ = false;
  switch (profile.kind) {
    case UEKind::TDMA:
      break;
    case UEKind::CSMA:
      // Collision doubles the window up to the cap; success resets it. The
      // counter is redrawn uniformly over {0..window} so that the mean gap
      // equals window/2, matching the profile's nominal p/(p+w/2) rate.
      window_ = collided ? std::min(2 * window_, profile.wmax) : profile.w;
      backoff_ = rng.range(0, window_);
      break;
    case UEKind::CH:
      channel_ = (channel_ - 1 + profile.d + num_channels_) % num_channels_ + 1;
      break;
  }
}

}  // namespace clmac
