#include "irn/switch_port.h"

#include <algorithm>

namespace irn {

uint64_t PfcHeadroom(const LinkParams& link, uint32_t max_packet_bytes) {
  return 2 * BytesInFlight(link.bandwidth_bps, link.propagation) +
         3ull * max_packet_bytes;
}

IngressBuffer::IngressBuffer(const PfcConfig& config) : config_(config) {
  if (config.enabled && (config.pause_threshold > config.buffer_bytes ||
                         config.resume_threshold > config.pause_threshold)) {
    throw ConfigError("PFC thresholds must satisfy resume <= pause <= buffer");
  }
}

IngressBuffer::EnqueueResult IngressBuffer::Enqueue(uint32_t bytes) {
  EnqueueResult result;
  if (occupancy_ + bytes > config_.buffer_bytes) return result;
  result.accepted = true;
  occupancy_ += bytes;
  max_occupancy_ = std::max(max_occupancy_, occupancy_);
  if (config_.enabled && !xoff_sent_ &&
      occupancy_ >= config_.pause_threshold) {
    xoff_sent_ = true;
    result.signal = PfcSignal::kXoff;
  }
  return result;
}

PfcSignal IngressBuffer::Dequeue(uint32_t bytes) {
  occupancy_ -= std::min<uint64_t>(bytes, occupancy_);
  if (xoff_sent_ && occupancy_ < config_.resume_threshold) {
    xoff_sent_ = false;
    return PfcSignal::kXon;
  }
  return PfcSignal::kNone;
}

}  // namespace irn
