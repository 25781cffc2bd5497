#include "irn/gbn_transport.h"

namespace irn {

GbnSender::GbnSender(const GbnSenderConfig& config, uint32_t total_packets,
                     Psn initial_psn)
    : config_(config),
      next_psn_(initial_psn),
      snd_una_(initial_psn),
      end_psn_(initial_psn + total_packets),
      high_water_(initial_psn),
      recovery_seq_(initial_psn) {
  if (config.bdp_fc && config.bdp_cap == 0) {
    throw std::invalid_argument("bdp_cap must be > 0");
  }
}

std::optional<TxDecision> GbnSender::TxFree(bool new_data_allowed) {
  if (next_psn_ == end_psn_) return std::nullopt;
  const bool resend = next_psn_ < high_water_;
  // Resent packets were admitted once already; only fresh data asks CC.
  if (!resend && !new_data_allowed) return std::nullopt;
  if (config_.bdp_fc && InFlight() >= config_.bdp_cap) return std::nullopt;
  if (resend) ++retransmissions_;
  const Psn psn = next_psn_++;
  high_water_ = PsnMax(high_water_, next_psn_);
  return TxDecision{psn, resend};
}

bool GbnSender::Rewind() {
  if (next_psn_ == snd_una_) return false;
  GoBackNRewind(next_psn_, snd_una_);
  if (in_recovery_) return false;
  in_recovery_ = true;
  recovery_seq_ = high_water_ - 1;
  return true;
}

AckOutcome GbnSender::ReceiveAck(const AckPacket& ack) {
  AckOutcome out;
  if (ack.cumulative < snd_una_ || ack.cumulative > high_water_) {
    out.stale = true;
    return out;
  }
  out.newly_acked = Distance(snd_una_, ack.cumulative);
  if (out.newly_acked > 0) {
    snd_una_ = ack.cumulative;
    next_psn_ = PsnMax(next_psn_, snd_una_);
  }
  if (in_recovery_ && snd_una_ > recovery_seq_) {
    in_recovery_ = false;
    out.exited_recovery = true;
  }
  if (ack.kind != AckKind::kAck) {
    out.rewound = next_psn_ != snd_una_;
    out.entered_recovery = Rewind();
  }
  return out;
}

TimeoutAction GbnSender::TimeoutFired() {
  if (InFlight() == 0) return TimeoutAction::kDisarm;
  if (timer_low_ && InFlight() > config_.timer.n_small) {
    timer_low_ = false;
    return TimeoutAction::kExtendToHigh;
  }
  Rewind();
  return TimeoutAction::kEnterRecovery;
}

SimTime GbnSender::ArmTimer() {
  timer_low_ = config_.timer.dual && InFlight() <= config_.timer.n_small;
  return timer_low_ ? config_.timer.rto_low : config_.timer.rto_high;
}

ReceiveResult GbnReceiver::ReceiveData(Psn psn, SeqBitmap::Flags flags) {
  ReceiveResult result;
  if (psn == expected_) {
    result.delivered_begin = expected_;
    result.delivered = 1;
    if (flags.msn_update) {
      ++msn_;
      result.consumed_flags[SeqBitmap::kMsnPlane] = 1;
    }
    if (flags.wqe_expire) result.consumed_flags[SeqBitmap::kExpirePlane] = 1;
    ++expected_;
    nack_outstanding_ = false;
    result.ack = AckPacket{AckKind::kAck, expected_, Psn(), msn_};
    return result;
  }
  if (psn < expected_) {
    result.duplicate = true;
    result.ack = AckPacket{AckKind::kAck, expected_, Psn(), msn_};
    return result;
  }
  result.discarded = true;
  if (!nack_outstanding_) {
    nack_outstanding_ = true;
    result.ack = AckPacket{AckKind::kNack, expected_, psn, msn_};
  }
  return result;
}

}  // namespace irn
