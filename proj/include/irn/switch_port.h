#ifndef IRN_SWITCH_PORT_H_
#define IRN_SWITCH_PORT_H_

#include <bit>
#include <cstdint>
#include <optional>

#include "irn/topology.h"

namespace irn {

struct PfcConfig {
  bool enabled = false;
  uint64_t buffer_bytes = 240'000;
  // X-OFF once occupancy reaches this; X-ON once it drops below resume.
  uint64_t pause_threshold = 220'000;
  uint64_t resume_threshold = 220'000;
};

// Headroom that guarantees no overflow once X-OFF is sent: one link round
// trip of data plus three maximum-size packets of packet-boundary slack
// (the packet that crosses the threshold, the one on the wire edge, and the
// one the upstream finishes after the pause lands).
uint64_t PfcHeadroom(const LinkParams& link, uint32_t max_packet_bytes);

enum class PfcSignal : uint8_t { kNone, kXoff, kXon };

// Byte accounting for one switch input port.
class IngressBuffer {
 public:
  explicit IngressBuffer(const PfcConfig& config);

  struct EnqueueResult {
    bool accepted = false;
    PfcSignal signal = PfcSignal::kNone;
  };

  // Tail drop when the packet does not fit. With PFC on, X-OFF is raised when
  // occupancy reaches the pause threshold.
  EnqueueResult Enqueue(uint32_t bytes);
  PfcSignal Dequeue(uint32_t bytes);

  uint64_t occupancy() const { return occupancy_; }
  uint64_t max_occupancy() const { return max_occupancy_; }
  bool upstream_paused() const { return xoff_sent_; }
  const PfcConfig& config() const { return config_; }

 private:
  PfcConfig config_;
  uint64_t occupancy_ = 0;
  uint64_t max_occupancy_ = 0;
  bool xoff_sent_ = false;
};

// Round-robin choice among input ports with a non-empty virtual output queue
// for one output port.
class OutputArbiter {
 public:
  void SetBacklogged(uint32_t input) { backlog_ |= uint64_t{1} << input; }
  void ClearBacklogged(uint32_t input) { backlog_ &= ~(uint64_t{1} << input); }
  bool HasBacklog() const { return backlog_ != 0; }

  // Next backlogged input at or after the cursor, wrapping.
  std::optional<uint32_t> Pick() {
    if (backlog_ == 0) return std::nullopt;
    const uint64_t ahead = cursor_ >= 64 ? 0 : backlog_ & (~uint64_t{0} << cursor_);
    const uint32_t input = static_cast<uint32_t>(
        std::countr_zero(ahead != 0 ? ahead : backlog_));
    cursor_ = input + 1;
    return input;
  }

 private:
  uint64_t backlog_ = 0;
  uint32_t cursor_ = 0;
};

}  // namespace irn

#endif  // IRN_SWITCH_PORT_H_
