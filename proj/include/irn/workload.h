#ifndef IRN_WORKLOAD_H_
#define IRN_WORKLOAD_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irn/rng.h"
#include "irn/units.h"

namespace irn {

enum class OpKind : uint8_t { kWrite, kRead, kSend };

std::string_view OpKindName(OpKind kind);

inline constexpr uint64_t kMinFlowBytes = 32;

struct FlowSpec {
  uint32_t id = 0;
  uint32_t src = 0;
  uint32_t dst = 0;
  uint64_t size = 0;
  SimTime arrival = 0;
  OpKind kind = OpKind::kWrite;
  int32_t incast_group = -1;
};

enum class SizeLaw : uint8_t { kUniform, kLogUniform };

struct SizeRow {
  double mass = 0;
  double lo = 0;
  double hi = 0;
  SizeLaw law = SizeLaw::kLogUniform;
};

// Piecewise flow-size distribution: each row carries a probability mass, a
// byte range, and how sizes spread inside it. Samples are the ceiling of the
// continuous draw, so Cdf() at an integer x is exact for the sampler.
class SizeDistribution {
 public:
  // Throws ConfigError unless masses sum to 1 and ranges are disjoint.
  explicit SizeDistribution(std::vector<SizeRow> rows);

  // 50% single-packet messages in [32B, 1KB], 35% in (1KB, 200KB), 15% in
  // [200KB, 3MB]; log-uniform inside each row.
  static SizeDistribution HeavyTailed();
  static SizeDistribution Uniform(double lo, double hi);
  // "mass:lo:hi:law;..." with law in {uniform, loguniform}.
  static SizeDistribution Parse(std::string_view table);

  uint64_t Sample(Rng& rng) const;
  double Mean() const;
  double Cdf(double x) const;
  const std::vector<SizeRow>& rows() const { return rows_; }
  std::string ToString() const;

 private:
  std::vector<SizeRow> rows_;
};

struct OpMix {
  double write = 1.0;
  double read = 0.0;
  double send = 0.0;
};

// Poisson arrivals at every host with rate load * link / mean flow size, each
// flow to a uniformly random other host. Returns the first `count` flows in
// arrival order.
std::vector<FlowSpec> GenerateFlows(const SizeDistribution& dist, double load,
                                    uint32_t num_hosts,
                                    uint64_t host_bandwidth_bps, uint64_t seed,
                                    uint32_t count, OpMix mix = {});

// `fan_in` distinct random senders each send total/fan_in bytes to one
// destination at time `at`.
std::vector<FlowSpec> GenerateIncast(uint32_t fan_in, uint64_t total_bytes,
                                     uint32_t num_hosts, uint64_t seed,
                                     SimTime at = 0,
                                     std::optional<uint32_t> dst = {},
                                     int32_t group = 0);

// Stable merge by arrival time; ids are reassigned in the merged order.
std::vector<FlowSpec> MergeFlows(std::vector<FlowSpec> a,
                                 std::vector<FlowSpec> b);

}  // namespace irn

#endif  // IRN_WORKLOAD_H_
