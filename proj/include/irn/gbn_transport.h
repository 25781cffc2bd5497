#ifndef IRN_GBN_TRANSPORT_H_
#define IRN_GBN_TRANSPORT_H_

#include <cstdint>
#include <optional>

#include "irn/psn.h"
#include "irn/transport.h"

namespace irn {

// The go-back-N rewind shared by the RoCE sender and IRN's error-NACK path:
// transmission resumes at the oldest unacknowledged packet.
inline void GoBackNRewind(Psn& next_psn, Psn snd_una) { next_psn = snd_una; }

struct GbnSenderConfig {
  // RoCE sends limited only by the message; the cap exists for the
  // "IRN with go-back-N" factor analysis.
  bool bdp_fc = false;
  uint32_t bdp_cap = 120;
  TimerConfig timer{.dual = false};
  // Optional pause after each loss signal. Zero disables it.
  SimTime loss_backoff = 0;
};

// RoCE requester: retransmits everything after the last acked packet on a
// NACK or timeout.
class GbnSender final : public TransportSender {
 public:
  GbnSender(const GbnSenderConfig& config, uint32_t total_packets,
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

  const GbnSenderConfig& config() const { return config_; }

 private:
  // Returns true when this rewind opens a new loss episode.
  bool Rewind();

  GbnSenderConfig config_;
  Psn next_psn_;
  Psn snd_una_;
  Psn end_psn_;
  Psn high_water_;
  Psn recovery_seq_;
  bool in_recovery_ = false;
  bool timer_low_ = false;
  uint64_t retransmissions_ = 0;
};

// RoCE responder: accepts only the expected packet. The first out-of-order
// arrival for a given expected psn draws a NACK; later ones are discarded
// silently until the gap is filled.
class GbnReceiver final : public TransportReceiver {
 public:
  explicit GbnReceiver(Psn initial_psn = Psn(0)) : expected_(initial_psn) {}

  ReceiveResult ReceiveData(Psn psn, SeqBitmap::Flags flags = {}) override;

  Psn expected_psn() const override { return expected_; }
  uint32_t msn() const override { return msn_; }

 private:
  Psn expected_;
  uint32_t msn_ = 0;
  bool nack_outstanding_ = false;
};

}  // namespace irn

#endif  // IRN_GBN_TRANSPORT_H_
