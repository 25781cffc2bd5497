#ifndef IRN_IRN_TRANSPORT_H_
#define IRN_IRN_TRANSPORT_H_

#include <cstdint>
#include <optional>

#include "irn/psn.h"
#include "irn/seq_bitmap.h"
#include "irn/transport.h"

namespace irn {

struct IrnSenderConfig {
  // Static cap on packets in flight (bandwidth-delay product / MTU).
  uint32_t bdp_cap = 120;
  bool bdp_fc = true;
  // SACK bitmap width; 0 sizes it to the BDP cap. Must cover the largest
  // window the sender can open, i.e. the message length when BDP-FC is off.
  uint32_t bitmap_capacity = 0;
  TimerConfig timer;
};

// Requester side of IRN loss recovery. The handlers map onto the NIC's
// txFree, receiveAck and timeout modules; all are pure transformations of
// this object's state.
class IrnSender final : public TransportSender {
 public:
  IrnSender(const IrnSenderConfig& config, uint32_t total_packets,
            Psn initial_psn = Psn(0));

  std::optional<TxDecision> TxFree(bool new_data_allowed = true) override;
  AckOutcome ReceiveAck(const AckPacket& ack) override;
  TimeoutAction TimeoutFired() override;
  SimTime ArmTimer() override;
  SimTime TimerExtension() const override {
    return config_.timer.rto_high - config_.timer.rto_low;
  }

  Psn next_psn() const override { return next_psn_; }
  Psn snd_una() const override { return snd_una_; }
  bool in_recovery() const override { return in_recovery_; }
  uint64_t retransmissions() const override { return retransmissions_; }
  bool HasUnsent() const override { return next_psn_ != end_psn_; }
  bool Done() const override { return snd_una_ == end_psn_; }
  void AddPackets(uint32_t count) override { end_psn_ += count; }

  Psn retransmit_seq() const { return retransmit_seq_; }
  Psn recovery_seq() const { return recovery_seq_; }
  bool timer_low() const { return timer_low_; }
  const SeqBitmap& sack_bitmap() const { return sack_; }
  const IrnSenderConfig& config() const { return config_; }

  // Go-back-N rewind used for error NACKs: forget SACK state and resend
  // everything from snd_una.
  void RewindToUnacked();

 private:
  void EnterRecovery();

  IrnSenderConfig config_;
  Psn next_psn_;
  Psn snd_una_;
  Psn end_psn_;
  Psn high_water_;  // highest next_psn_ ever reached
  Psn retransmit_seq_;
  Psn recovery_seq_;
  bool in_recovery_ = false;
  // The first retransmission after entering recovery is the cumulative ack
  // value, even when nothing above it has been selectively acked.
  bool head_retransmit_pending_ = false;
  bool timer_low_ = true;
  SeqBitmap sack_;
  uint64_t retransmissions_ = 0;
};

// Responder side: tracks arrivals in a 2-bitmap and acks every packet,
// NACKing each out-of-order arrival (receiveData module).
class IrnReceiver final : public TransportReceiver {
 public:
  IrnReceiver(uint32_t bitmap_capacity, Psn initial_psn = Psn(0));

  // Throws ProtocolViolation for a psn beyond the receive window.
  ReceiveResult ReceiveData(Psn psn, SeqBitmap::Flags flags = {}) override;

  Psn expected_psn() const override { return bitmap_.head(); }
  uint32_t msn() const override { return msn_; }
  const SeqBitmap& bitmap() const { return bitmap_; }

 private:
  SeqBitmap bitmap_;
  uint32_t msn_ = 0;
};

}  // namespace irn

#endif  // IRN_IRN_TRANSPORT_H_
