#ifndef IRN_SEQ_BITMAP_H_
#define IRN_SEQ_BITMAP_H_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "irn/psn.h"

namespace irn {

// Thrown when a sequence outside [head, head + capacity) is marked.
class WindowViolation : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Per-sequence flag-plane bits carried alongside an arrival mark.
struct SeqFlags {
  bool msn_update = false;
  bool wqe_expire = false;
};

// Ring-buffer bitmap over a window of packet sequence numbers. Bit 0 always
// represents head(). Two optional flag planes ride along with the arrival
// bits: the responder's 2-bitmap uses them to remember which packets end a
// message (MSN update) and which expire a Receive WQE.
//
// Capacity is rounded up to a multiple of 64 so that first-unset and popcount
// run a word at a time.
class SeqBitmap {
 public:
  static constexpr int kNumPlanes = 2;
  static constexpr int kMsnPlane = 0;
  static constexpr int kExpirePlane = 1;

  using Flags = SeqFlags;

  struct AdvanceResult {
    uint32_t consumed = 0;
    std::array<uint32_t, kNumPlanes> plane_counts{};
  };

  SeqBitmap() : SeqBitmap(64, Psn(0)) {}
  SeqBitmap(uint32_t capacity, Psn head);

  static uint32_t RoundCapacity(uint32_t bits) {
    return bits == 0 ? 64 : (bits + 63) / 64 * 64;
  }

  Psn head() const { return head_; }
  uint32_t capacity() const { return capacity_; }

  bool InWindow(Psn seq) const { return Distance(head_, seq) < capacity_; }
  // False for sequences outside the window.
  bool IsSet(Psn seq) const;
  bool IsFlagged(Psn seq, int plane) const;

  // Returns false when the bit was already set. Throws WindowViolation.
  bool Mark(Psn seq, Flags flags = {});

  // Smallest clear sequence >= head; head + capacity when the window is full.
  Psn FirstUnset() const { return head_ + FirstUnsetOffset(0); }
  // Smallest clear sequence >= from (from must be inside the window, or equal
  // to head + capacity in which case that is returned).
  Psn FirstUnsetFrom(Psn from) const;
  // True if any bit strictly after `seq` is set (seq may precede head).
  bool AnySetAfter(Psn seq) const;
  uint32_t PopCount() const;

  // Consume the contiguous run of set bits at the head. No-op when bit 0 is
  // clear. Afterwards FirstUnset() == head().
  AdvanceResult Advance();
  // Move the head forward to `target`, discarding everything below it. Used
  // by the sender when a cumulative ack jumps the window. Targets behind the
  // current head are ignored.
  AdvanceResult AdvanceTo(Psn target);

  void Reset(Psn head);

 private:
  uint32_t FirstUnsetOffset(uint32_t from) const;
  AdvanceResult ConsumeFront(uint32_t count);
  uint32_t RingPos(uint32_t offset) const {
    const uint32_t p = origin_ + offset;
    return p >= capacity_ ? p - capacity_ : p;
  }

  uint32_t capacity_;
  Psn head_;
  uint32_t origin_ = 0;  // ring position of head_
  std::vector<uint64_t> bits_;
  std::array<std::vector<uint64_t>, kNumPlanes> planes_;
};

}  // namespace irn

#endif  // IRN_SEQ_BITMAP_H_
