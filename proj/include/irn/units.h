#ifndef IRN_UNITS_H_
#define IRN_UNITS_H_

#include <cstdint>

namespace irn {

// Simulated time and durations, in integer nanoseconds.
using SimTime = int64_t;

inline constexpr SimTime kNanosecond = 1;
inline constexpr SimTime kMicrosecond = 1000;
inline constexpr SimTime kMillisecond = 1000 * kMicrosecond;
inline constexpr SimTime kSecond = 1000 * kMillisecond;

constexpr SimTime Microseconds(double us) {
  return static_cast<SimTime>(us * kMicrosecond + 0.5);
}

// Time to clock `bytes` onto a link of `bits_per_second`, rounded up to the
// next whole nanosecond.
constexpr SimTime SerializationTime(uint64_t bytes, uint64_t bits_per_second) {
  const unsigned __int128 num =
      static_cast<unsigned __int128>(bytes) * 8 * 1'000'000'000ull;
  return static_cast<SimTime>((num + bits_per_second - 1) / bits_per_second);
}

// Bytes a link of the given rate carries in `duration`.
constexpr uint64_t BytesInFlight(uint64_t bits_per_second, SimTime duration) {
  const unsigned __int128 num =
      static_cast<unsigned __int128>(bits_per_second) * duration;
  return static_cast<uint64_t>(num / (8ull * 1'000'000'000ull));
}

inline constexpr uint64_t kGbps = 1'000'000'000ull;

}  // namespace irn

#endif  // IRN_UNITS_H_
