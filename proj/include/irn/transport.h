#ifndef IRN_TRANSPORT_H_
#define IRN_TRANSPORT_H_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "irn/psn.h"
#include "irn/seq_bitmap.h"
#include "irn/units.h"

namespace irn {

// Thrown when a peer violates the transport contract, e.g. a data packet
// beyond the receive window.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AckKind : uint8_t {
  kAck,
  kNack,       // out-of-sequence: cumulative + the psn that triggered it
  kErrorNack,  // receiver-not-ready and other errors; always go-back-N
};

struct AckPacket {
  AckKind kind = AckKind::kAck;
  Psn cumulative;  // receiver's next expected psn
  Psn sacked;      // meaningful for kNack only
  uint32_t msn = 0;

  friend bool operator==(const AckPacket&, const AckPacket&) = default;
};

struct TxDecision {
  Psn psn;
  bool retransmission = false;
};

struct AckOutcome {
  uint32_t newly_acked = 0;
  bool stale = false;
  bool entered_recovery = false;
  bool exited_recovery = false;
  bool rewound = false;
};

enum class TimeoutAction : uint8_t {
  kEnterRecovery,  // retransmit from snd_una
  kExtendToHigh,   // low timer fired with too many packets out; re-arm
  kDisarm,         // nothing in flight
};

struct TimerConfig {
  SimTime rto_low = 100 * kMicrosecond;
  SimTime rto_high = 320 * kMicrosecond;
  uint32_t n_small = 3;
  // When false every arm uses rto_high (RoCE's single static timeout).
  bool dual = true;
};

struct ReceiveResult {
  // Absent when the receiver stays silent (suppressed go-back-N NACKs).
  std::optional<AckPacket> ack;
  // Packets [delivered_begin, delivered_begin + delivered) were handed up in
  // order by this arrival.
  Psn delivered_begin;
  uint32_t delivered = 0;
  bool duplicate = false;
  bool discarded = false;
  std::array<uint32_t, SeqBitmap::kNumPlanes> consumed_flags{};
};

// Common surface of the sender state machines, so the simulator can drive
// either protocol through one interface.
class TransportSender {
 public:
  virtual ~TransportSender() = default;

  // Link free for this QP. `new_data_allowed` is the congestion control
  // verdict for sending a new (not retransmitted) packet.
  virtual std::optional<TxDecision> TxFree(bool new_data_allowed) = 0;
  virtual AckOutcome ReceiveAck(const AckPacket& ack) = 0;
  virtual TimeoutAction TimeoutFired() = 0;
  // Picks the timer mode for an arm happening now and returns its duration.
  virtual SimTime ArmTimer() = 0;
  virtual SimTime TimerExtension() const = 0;

  virtual Psn next_psn() const = 0;
  virtual Psn snd_una() const = 0;
  virtual bool in_recovery() const = 0;
  virtual uint64_t retransmissions() const = 0;

  uint32_t InFlight() const { return Distance(snd_una(), next_psn()); }
  virtual bool HasUnsent() const = 0;
  virtual bool Done() const = 0;
  virtual void AddPackets(uint32_t count) = 0;
};

class TransportReceiver {
 public:
  virtual ~TransportReceiver() = default;
  virtual ReceiveResult ReceiveData(Psn psn, SeqBitmap::Flags flags) = 0;
  virtual Psn expected_psn() const = 0;
  virtual uint32_t msn() const = 0;
};

}  // namespace irn

#endif  // IRN_TRANSPORT_H_
