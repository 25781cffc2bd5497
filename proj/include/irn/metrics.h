#ifndef IRN_METRICS_H_
#define IRN_METRICS_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "irn/topology.h"
#include "irn/units.h"
#include "irn/workload.h"

namespace irn {

struct FlowRecord {
  uint32_t id = 0;
  uint32_t src = 0;
  uint32_t dst = 0;
  OpKind kind = OpKind::kWrite;
  uint64_t size = 0;
  SimTime start = 0;
  SimTime completion = 0;
  SimTime ideal_fct = 0;
  uint32_t path_hops = 0;
  uint64_t retransmissions = 0;
  uint64_t drops = 0;
  int32_t incast_group = -1;

  SimTime fct() const { return completion - start; }
  double slowdown() const {
    return static_cast<double>(fct()) / static_cast<double>(ideal_fct);
  }
};

// Line-rate store-and-forward time to push `payload_bytes` over `hops` idle
// links, split into `mtu`-byte packets that each carry `header_bytes` extra.
// Throws std::invalid_argument for an empty message or zero hops.
SimTime IdealFct(uint64_t payload_bytes, uint32_t hops, const LinkParams& link,
                 uint32_t mtu, uint32_t header_bytes = 0);

// Nearest-rank percentile of a sorted sample: element ceil(p/100 * n).
SimTime NearestRank(const std::vector<SimTime>& sorted, double percentile);

// Percentiles reported for the single-packet tail CDF.
const std::vector<double>& TailPercentiles();

struct Summary {
  size_t flows = 0;
  double avg_slowdown = 0;
  double avg_fct = 0;  // nanoseconds
  SimTime p99_fct = 0;
  size_t single_packet_flows = 0;
  // (percentile, FCT) over flows no larger than one MTU.
  std::vector<std::pair<double, SimTime>> single_packet_tail;
  // Incast group -> time from the group's first start to its last completion.
  std::map<int32_t, SimTime> rct;
};

// Empty input yields nullopt.
std::optional<Summary> Aggregate(std::span<const FlowRecord> records,
                                 uint32_t mtu);

struct Ratio {
  std::string metric;
  double a = 0;
  double b = 0;
  std::optional<double> value;  // absent when b == 0
};

// A over B for avg slowdown, avg FCT and p99 FCT, plus RCT when both sides
// have incast groups.
std::vector<Ratio> RatioTable(const Summary& a, const Summary& b);

// Column order used by WriteFlowCsv.
const std::vector<std::string>& FlowCsvColumns();
void WriteFlowCsv(std::ostream& os, std::span<const FlowRecord> records);
void WriteSummaryCsv(std::ostream& os, const std::optional<Summary>& summary);
void WriteRatioCsv(std::ostream& os, const std::vector<Ratio>& ratios);

// Inverse of WriteSummaryCsv; throws std::runtime_error on malformed input.
std::optional<Summary> ReadSummaryCsv(std::istream& is);

}  // namespace irn

#endif  // IRN_METRICS_H_
