#include "irn/seq_bitmap.h"

#include <algorithm>
#include <bit>
#include <string>

namespace irn {

SeqBitmap::SeqBitmap(uint32_t capacity, Psn head)
    : capacity_(RoundCapacity(capacity)),
      head_(head),
      bits_(capacity_ / 64, 0) {
  if (capacity_ >= (kPsnSpace >> 1)) {
    throw std::invalid_argument("bitmap capacity exceeds half the PSN space");
  }
  for (auto& plane : planes_) plane.assign(capacity_ / 64, 0);
}

bool SeqBitmap::IsSet(Psn seq) const {
  if (!InWindow(seq)) return false;
  const uint32_t pos = RingPos(Distance(head_, seq));
  return (bits_[pos >> 6] >> (pos & 63)) & 1;
}

bool SeqBitmap::IsFlagged(Psn seq, int plane) const {
  if (!InWindow(seq)) return false;
  const uint32_t pos = RingPos(Distance(head_, seq));
  return (planes_[plane][pos >> 6] >> (pos & 63)) & 1;
}

bool SeqBitmap::Mark(Psn seq, Flags flags) {
  if (!InWindow(seq)) {
    throw WindowViolation("psn " + std::to_string(seq.value()) +
                          " outside window [" + std::to_string(head_.value()) +
                          ", +" + std::to_string(capacity_) + ")");
  }
  const uint32_t pos = RingPos(Distance(head_, seq));
  const uint64_t bit = uint64_t{1} << (pos & 63);
  uint64_t& word = bits_[pos >> 6];
  if (word & bit) return false;
  word |= bit;
  if (flags.msn_update) planes_[kMsnPlane][pos >> 6] |= bit;
  if (flags.wqe_expire) planes_[kExpirePlane][pos >> 6] |= bit;
  return true;
}

uint32_t SeqBitmap::FirstUnsetOffset(uint32_t from) const {
  uint32_t offset = from;
  while (offset < capacity_) {
    const uint32_t pos = RingPos(offset);
    const uint32_t shift = pos & 63;
    // Words never straddle the ring seam since capacity % 64 == 0.
    const uint64_t clear = ~bits_[pos >> 6] >> shift;
    if (clear != 0) {
      return std::min(capacity_, offset + std::countr_zero(clear));
    }
    offset += 64 - shift;
  }
  return capacity_;
}

Psn SeqBitmap::FirstUnsetFrom(Psn from) const {
  const uint32_t offset = Distance(head_, from);
  if (offset >= capacity_) return head_ + capacity_;
  return head_ + FirstUnsetOffset(offset);
}

bool SeqBitmap::AnySetAfter(Psn seq) const {
  uint32_t offset = 0;
  if (seq >= head_) {
    offset = Distance(head_, seq) + 1;
  }
  while (offset < capacity_) {
    const uint32_t pos = RingPos(offset);
    const uint32_t shift = pos & 63;
    const uint32_t len = std::min(64 - shift, capacity_ - offset);
    uint64_t word = bits_[pos >> 6] >> shift;
    if (len < 64) word &= (uint64_t{1} << len) - 1;
    if (word != 0) return true;
    offset += len;
  }
  return false;
}

uint32_t SeqBitmap::PopCount() const {
  uint32_t n = 0;
  for (uint64_t w : bits_) n += std::popcount(w);
  return n;
}

SeqBitmap::AdvanceResult SeqBitmap::ConsumeFront(uint32_t count) {
  AdvanceResult result;
  result.consumed = count;
  uint32_t offset = 0;
  while (offset < count) {
    const uint32_t pos = RingPos(offset);
    const uint32_t shift = pos & 63;
    const uint32_t len = std::min(64 - shift, count - offset);
    const uint64_t mask =
        len == 64 ? ~uint64_t{0} : ((uint64_t{1} << len) - 1) << shift;
    const uint32_t word = pos >> 6;
    for (int p = 0; p < kNumPlanes; ++p) {
      result.plane_counts[p] += std::popcount(planes_[p][word] & mask);
      planes_[p][word] &= ~mask;
    }
    bits_[word] &= ~mask;
    offset += len;
  }
  origin_ = RingPos(count % capacity_);
  head_ += count;
  return result;
}

SeqBitmap::AdvanceResult SeqBitmap::Advance() {
  return ConsumeFront(FirstUnsetOffset(0));
}

SeqBitmap::AdvanceResult SeqBitmap::AdvanceTo(Psn target) {
  if (target <= head_) return {};
  const uint32_t distance = Distance(head_, target);
  if (distance <= capacity_) return ConsumeFront(distance);
  AdvanceResult result = ConsumeFront(capacity_);
  result.consumed = distance;
  head_ = target;
  return result;
}

void SeqBitmap::Reset(Psn head) {
  head_ = head;
  origin_ = 0;
  std::fill(bits_.begin(), bits_.end(), 0);
  for (auto& plane : planes_) std::fill(plane.begin(), plane.end(), 0);
}

}  // namespace irn
