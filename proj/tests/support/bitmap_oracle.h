#ifndef IRN_TESTS_SUPPORT_BITMAP_ORACLE_H_
#define IRN_TESTS_SUPPORT_BITMAP_ORACLE_H_

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "irn/rng.h"
#include "irn/seq_bitmap.h"

namespace irn::testing {

// Reference model: an unbounded 64-bit sequence space and a std::set of marked
// sequences. Sequences map to 24-bit PSNs only when talking to SeqBitmap.
class OracleBitmap {
 public:
  OracleBitmap(uint64_t head, uint32_t capacity)
      : head_(head), capacity_(capacity) {}

  bool InWindow(uint64_t s) const { return s >= head_ && s < head_ + capacity_; }

  bool Mark(uint64_t s, SeqBitmap::Flags f) {
    if (!marked_.insert(s).second) return false;
    flags_[s] = f;
    return true;
  }

  uint64_t FirstUnsetFrom(uint64_t from) const {
    for (uint64_t s = from; s < head_ + capacity_; ++s) {
      if (!marked_.count(s)) return s;
    }
    return head_ + capacity_;
  }

  bool AnySetAfter(uint64_t s) const { return marked_.upper_bound(s) != marked_.end(); }

  SeqBitmap::AdvanceResult ConsumeTo(uint64_t target) {
    SeqBitmap::AdvanceResult r;
    r.consumed = static_cast<uint32_t>(target - head_);
    while (!marked_.empty() && *marked_.begin() < target) {
      const uint64_t s = *marked_.begin();
      const auto& f = flags_[s];
      r.plane_counts[SeqBitmap::kMsnPlane] += f.msn_update;
      r.plane_counts[SeqBitmap::kExpirePlane] += f.wqe_expire;
      flags_.erase(s);
      marked_.erase(marked_.begin());
    }
    head_ = target;
    return r;
  }

  uint64_t head() const { return head_; }
  uint32_t capacity() const { return capacity_; }
  uint32_t PopCount() const { return static_cast<uint32_t>(marked_.size()); }

 private:
  uint64_t head_;
  uint32_t capacity_;
  std::set<uint64_t> marked_;
  std::map<uint64_t, SeqBitmap::Flags> flags_;
};

inline Psn ToPsn(uint64_t s) { return Psn(static_cast<uint32_t>(s)); }

// One random op stream against both models. Returns an empty string on
// agreement, otherwise a description of the first mismatch.
inline std::string RunBitmapTrial(uint64_t seed, uint32_t max_window = 256,
                                  int max_ops = 64) {
  Rng rng(seed, RngStream::kTest);
  const uint32_t requested = 1 + static_cast<uint32_t>(rng.Below(max_window));
  // Start near the 24-bit seam in a third of the trials.
  uint64_t start = rng.Below(kPsnSpace);
  if (rng.Below(3) == 0) start = kPsnSpace - rng.Below(2 * requested + 1);
  SeqBitmap bm(requested, ToPsn(start));
  OracleBitmap oracle(start, bm.capacity());
  const int ops = 1 + static_cast<int>(rng.Below(max_ops));
  std::ostringstream err;
  auto fail = [&](int step, const std::string& what) {
    err << "seed " << seed << " step " << step << ": " << what;
    return err.str();
  };

  for (int i = 0; i < ops; ++i) {
    const uint64_t head = oracle.head();
    if (bm.head() != ToPsn(head)) return fail(i, "head diverged");
    const uint32_t cap = oracle.capacity();
    switch (rng.Below(8)) {
      case 0:
      case 1:
      case 2: {  // mark, occasionally just outside the window
        const uint64_t s = head + rng.Below(cap + 8);
        SeqBitmap::Flags f{rng.Bernoulli(0.3), rng.Bernoulli(0.2)};
        if (!oracle.InWindow(s)) {
          bool threw = false;
          try {
            bm.Mark(ToPsn(s), f);
          } catch (const WindowViolation&) {
            threw = true;
          }
          if (!threw) return fail(i, "out-of-window mark accepted");
          break;
        }
        if (bm.Mark(ToPsn(s), f) != oracle.Mark(s, f)) {
          return fail(i, "mark freshness");
        }
        break;
      }
      case 3: {
        if (bm.FirstUnset() != ToPsn(oracle.FirstUnsetFrom(head))) {
          return fail(i, "first_unset");
        }
        const uint64_t from = head + rng.Below(cap);
        if (bm.FirstUnsetFrom(ToPsn(from)) !=
            ToPsn(oracle.FirstUnsetFrom(from))) {
          return fail(i, "first_unset_from");
        }
        break;
      }
      case 4: {
        const auto got = bm.Advance();
        const auto want = oracle.ConsumeTo(oracle.FirstUnsetFrom(head));
        if (got.consumed != want.consumed ||
            got.plane_counts != want.plane_counts) {
          return fail(i, "advance counts");
        }
        if (bm.FirstUnset() != bm.head()) {
          return fail(i, "head not at first hole after advance");
        }
        break;
      }
      case 5: {
        if (bm.PopCount() != oracle.PopCount()) return fail(i, "popcount");
        const uint64_t s = head + rng.Below(cap);
        if (bm.AnySetAfter(ToPsn(s)) != oracle.AnySetAfter(s)) {
          return fail(i, "any_set_after");
        }
        break;
      }
      case 6: {
        const uint64_t s = head + rng.Below(cap + 8);
        const bool in = oracle.InWindow(s);
        if (bm.InWindow(ToPsn(s)) != in) return fail(i, "in_window");
        const bool set = in && oracle.FirstUnsetFrom(s) != s;
        if (bm.IsSet(ToPsn(s)) != set) return fail(i, "is_set");
        break;
      }
      case 7: {  // sender-style jump of the head
        const uint64_t target = head + rng.Below(cap + 1);
        const auto got = bm.AdvanceTo(ToPsn(target));
        const auto want = oracle.ConsumeTo(target);
        if (got.consumed != want.consumed ||
            got.plane_counts != want.plane_counts) {
          return fail(i, "advance_to counts");
        }
        break;
      }
    }
  }
  if (bm.PopCount() != oracle.PopCount()) return fail(ops, "final popcount");
  return {};
}

}  // namespace irn::testing

#endif  // IRN_TESTS_SUPPORT_BITMAP_ORACLE_H_
