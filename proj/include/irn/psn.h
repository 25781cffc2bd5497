#ifndef IRN_PSN_H_
#define IRN_PSN_H_

#include <cstdint>
#include <functional>
#include <ostream>

namespace irn {

inline constexpr uint32_t kPsnBits = 24;
inline constexpr uint32_t kPsnSpace = 1u << kPsnBits;
inline constexpr uint32_t kPsnMask = kPsnSpace - 1;

// 24-bit packet sequence number. Ordering operators use serial-number
// arithmetic: a < b iff (b - a) mod 2^24 lies in [1, 2^23).
class Psn {
 public:
  constexpr Psn() = default;
  constexpr explicit Psn(uint32_t value) : value_(value & kPsnMask) {}

  constexpr uint32_t value() const { return value_; }

  constexpr Psn operator+(uint32_t n) const { return Psn(value_ + n); }
  constexpr Psn operator-(uint32_t n) const { return Psn(value_ - n); }
  constexpr Psn& operator+=(uint32_t n) {
    value_ = (value_ + n) & kPsnMask;
    return *this;
  }
  constexpr Psn& operator++() { return *this += 1; }
  constexpr Psn operator++(int) {
    Psn old = *this;
    *this += 1;
    return old;
  }

  friend constexpr bool operator==(Psn a, Psn b) = default;

 private:
  uint32_t value_ = 0;
};

// Number of steps from `from` forward to `to`, modulo 2^24.
constexpr uint32_t Distance(Psn from, Psn to) {
  return (to.value() - from.value()) & kPsnMask;
}

constexpr bool operator<(Psn a, Psn b) {
  const uint32_t d = Distance(a, b);
  return d != 0 && d < (kPsnSpace >> 1);
}
constexpr bool operator>(Psn a, Psn b) { return b < a; }
constexpr bool operator<=(Psn a, Psn b) { return !(b < a); }
constexpr bool operator>=(Psn a, Psn b) { return !(a < b); }

constexpr Psn PsnMax(Psn a, Psn b) { return a < b ? b : a; }

inline std::ostream& operator<<(std::ostream& os, Psn p) {
  return os << p.value();
}

}  // namespace irn

template <>
struct std::hash<irn::Psn> {
  size_t operator()(irn::Psn p) const noexcept { return p.value(); }
};

#endif  // IRN_PSN_H_
