#include "irn/irn_transport.h"

#include <string>

namespace irn {

namespace {

uint32_t SackCapacity(const IrnSenderConfig& config) {
  if (config.bitmap_capacity != 0) return config.bitmap_capacity;
  return config.bdp_cap;
}

}  // namespace

IrnSender::IrnSender(const IrnSenderConfig& config, uint32_t total_packets,
                     Psn initial_psn)
    : config_(config),
      next_psn_(initial_psn),
      snd_una_(initial_psn),
      end_psn_(initial_psn + total_packets),
      high_water_(initial_psn),
      retransmit_seq_(initial_psn),
      recovery_seq_(initial_psn),
      sack_(SackCapacity(config), initial_psn) {
  if (config.bdp_cap == 0) throw std::invalid_argument("bdp_cap must be > 0");
  if (config.bdp_fc && sack_.capacity() < config.bdp_cap) {
    throw std::invalid_argument("SACK bitmap narrower than the BDP cap");
  }
}

std::optional<TxDecision> IrnSender::TxFree(bool new_data_allowed) {
  if (in_recovery_) {
    const Psn from = PsnMax(retransmit_seq_, snd_una_);
    if (from < next_psn_) {
      // Look ahead for the next hole. A hole counts as lost only if some
      // higher sequence has been selectively acked.
      const Psn candidate = sack_.FirstUnsetFrom(from);
      if (candidate < next_psn_ &&
          (head_retransmit_pending_ || sack_.AnySetAfter(candidate))) {
        head_retransmit_pending_ = false;
        retransmit_seq_ = candidate + 1;
        ++retransmissions_;
        return TxDecision{candidate, true};
      }
    }
  }
  const uint32_t in_flight = InFlight();
  if (next_psn_ == end_psn_ || !new_data_allowed) return std::nullopt;
  if (config_.bdp_fc && in_flight >= config_.bdp_cap) return std::nullopt;
  // Without BDP-FC the window is still bounded by the SACK bitmap width.
  if (in_flight >= sack_.capacity()) return std::nullopt;
  const bool resend = next_psn_ < high_water_;
  if (resend) ++retransmissions_;
  const Psn psn = next_psn_++;
  high_water_ = PsnMax(high_water_, next_psn_);
  return TxDecision{psn, resend};
}

void IrnSender::EnterRecovery() {
  in_recovery_ = true;
  retransmit_seq_ = snd_una_;
  recovery_seq_ = next_psn_ - 1;
  head_retransmit_pending_ = true;
}

AckOutcome IrnSender::ReceiveAck(const AckPacket& ack) {
  AckOutcome out;
  // Acks can only cover what was ever sent.
  if (ack.cumulative < snd_una_ || ack.cumulative > high_water_) {
    out.stale = true;
    return out;
  }
  out.newly_acked = Distance(snd_una_, ack.cumulative);
  if (out.newly_acked > 0) {
    snd_una_ = ack.cumulative;
    next_psn_ = PsnMax(next_psn_, snd_una_);
    sack_.AdvanceTo(snd_una_);
    head_retransmit_pending_ = false;
    retransmit_seq_ = PsnMax(retransmit_seq_, snd_una_);
  }

  if (ack.kind == AckKind::kErrorNack) {
    RewindToUnacked();
    out.exited_recovery = true;
    out.rewound = true;
    return out;
  }

  if (in_recovery_ && snd_una_ > recovery_seq_) {
    in_recovery_ = false;
    out.exited_recovery = true;
  }

  if (ack.kind == AckKind::kNack) {
    if (ack.sacked > snd_una_ && ack.sacked < high_water_ &&
        sack_.InWindow(ack.sacked)) {
      sack_.Mark(ack.sacked);
    }
    if (!in_recovery_) {
      EnterRecovery();
      out.entered_recovery = true;
    }
  }
  return out;
}

void IrnSender::RewindToUnacked() {
  next_psn_ = snd_una_;
  in_recovery_ = false;
  head_retransmit_pending_ = false;
  retransmit_seq_ = snd_una_;
  sack_.Reset(snd_una_);
}

TimeoutAction IrnSender::TimeoutFired() {
  if (InFlight() == 0) return TimeoutAction::kDisarm;
  if (timer_low_ && InFlight() > config_.timer.n_small) {
    timer_low_ = false;
    return TimeoutAction::kExtendToHigh;
  }
  EnterRecovery();
  return TimeoutAction::kEnterRecovery;
}

SimTime IrnSender::ArmTimer() {
  timer_low_ = config_.timer.dual && InFlight() <= config_.timer.n_small;
  return timer_low_ ? config_.timer.rto_low : config_.timer.rto_high;
}

IrnReceiver::IrnReceiver(uint32_t bitmap_capacity, Psn initial_psn)
    : bitmap_(bitmap_capacity, initial_psn) {}

ReceiveResult IrnReceiver::ReceiveData(Psn psn, SeqBitmap::Flags flags) {
  ReceiveResult result;
  const Psn expected = bitmap_.head();
  if (psn < expected) {
    result.duplicate = true;
    result.ack = AckPacket{AckKind::kAck, expected, Psn(), msn_};
    return result;
  }
  if (!bitmap_.InWindow(psn)) {
    throw ProtocolViolation("data psn " + std::to_string(psn.value()) +
                            " beyond receive window at " +
                            std::to_string(expected.value()));
  }
  if (!bitmap_.Mark(psn, flags)) {
    result.duplicate = true;
    result.ack = AckPacket{AckKind::kAck, expected, Psn(), msn_};
    return result;
  }
  if (psn != expected) {
    result.ack = AckPacket{AckKind::kNack, expected, psn, msn_};
    return result;
  }
  const SeqBitmap::AdvanceResult advance = bitmap_.Advance();
  msn_ += advance.plane_counts[SeqBitmap::kMsnPlane];
  result.delivered_begin = expected;
  result.delivered = advance.consumed;
  result.consumed_flags = advance.plane_counts;
  result.ack = AckPacket{AckKind::kAck, bitmap_.head(), Psn(), msn_};
  return result;
}

}  // namespace irn
