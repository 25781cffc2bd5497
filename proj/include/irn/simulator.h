#ifndef IRN_SIMULATOR_H_
#define IRN_SIMULATOR_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irn/metrics.h"
#include "irn/topology.h"
#include "irn/units.h"
#include "irn/workload.h"

namespace irn {

enum class Protocol : uint8_t { kIrn, kGbn };

std::string_view ProtocolName(Protocol p);

struct FabricSettings {
  int arity = 4;
  LinkParams link;
  // Zero means derive: buffer = 2 x BDP, pause = buffer - PFC headroom,
  // resume = pause.
  uint64_t buffer_bytes = 0;
  bool pfc = false;
  uint64_t pause_threshold = 0;
  uint64_t resume_threshold = 0;
};

struct TransportSettings {
  Protocol protocol = Protocol::kIrn;
  // Unset: on for IRN, off for RoCE.
  std::optional<bool> bdp_fc;
  uint32_t bdp_cap = 0;  // packets; 0 derives BDP / packet size
  SimTime rto_low = 100 * kMicrosecond;
  SimTime rto_high = 0;  // 0 derives round-trip propagation + buffer drain
  double rto_high_scale = 1;  // applied to the derived or given RTO_high
  uint32_t n_small = 3;
  // IRN only; RoCE always uses the single static RTO_high.
  bool dual_timeout = true;
  // Unset: timeouts run only when PFC is off.
  std::optional<bool> timeouts;
  // Extra delay before each retransmitted packet can leave the NIC.
  SimTime retx_fetch_delay = 0;
  // Per-packet placement headers: +16B on Write, +6B on Send packets.
  bool header_overhead = false;
  // RoCE only: pause after a loss signal.
  SimTime loss_backoff = 0;
  uint32_t mtu = 1000;
  uint32_t data_header_bytes = 0;
  uint32_t ack_bytes = 64;
  uint32_t read_request_bytes = 64;
};

struct WorkloadSettings {
  SizeDistribution sizes = SizeDistribution::HeavyTailed();
  double load = 0.7;
  uint32_t flows = 10000;  // background flows; 0 disables them
  OpMix mix;
  uint32_t incast_fan_in = 0;  // 0 disables incast
  uint64_t incast_bytes = 150'000'000;
  SimTime incast_start = 0;
  std::optional<uint32_t> incast_dst;
};

// Deterministic data-packet drops applied as the packet leaves the source NIC.
struct DropRule {
  uint32_t flow = 0;
  uint8_t channel = 0;  // 1 is the Read response direction
  uint32_t packet = 0;  // offset from the first psn of the message
  uint32_t occurrence = 0;  // 0 drops the first transmission
};

struct LossInjection {
  std::vector<DropRule> rules;
  double data_drop_probability = 0;
};

struct RunConfig {
  uint64_t seed = 1;
  FabricSettings fabric;
  // Replaces the fat tree built from fabric.arity (link params still come
  // from fabric.link).
  std::optional<Topology> topology;
  TransportSettings transport;
  std::string cc = "none";
  bool cc_slow_start = false;
  WorkloadSettings workload;
  // Used instead of the generated workload when set.
  std::optional<std::vector<FlowSpec>> flows;
  LossInjection loss;
  // Unset: run until every flow completes.
  std::optional<SimTime> duration;
  // Hard stop to bound runaway runs; incomplete flows are reported.
  SimTime time_limit = 20 * kSecond;
};

// Parameters after defaults are derived from the topology.
struct ResolvedParams {
  uint64_t bdp_bytes = 0;
  uint32_t bdp_cap = 0;
  bool bdp_fc = false;
  uint64_t buffer_bytes = 0;
  uint64_t headroom_bytes = 0;
  uint64_t pause_threshold = 0;
  uint64_t resume_threshold = 0;
  SimTime rto_high = 0;
  bool timeouts = false;
  uint32_t max_wire_packet = 0;
  uint32_t hosts = 0;
  uint32_t diameter_hops = 0;
};

struct RunCounters {
  uint64_t drops = 0;           // buffer overflow
  uint64_t injected_drops = 0;  // loss injection
  uint64_t pause_frames = 0;    // X-OFF frames sent
  uint64_t retransmissions = 0;
  uint64_t timeouts = 0;
  uint64_t bdp_violations = 0;
  uint64_t max_in_flight = 0;  // largest per-QP in-flight packet count seen
  uint64_t data_packets = 0;
  uint64_t ack_packets = 0;
  uint64_t max_ingress_occupancy = 0;
  uint64_t events = 0;
};

struct RunResult {
  std::vector<FlowRecord> records;  // completed flows, by id
  uint32_t incomplete = 0;
  // Flows that started but did not finish, with completion set to end_time
  // so their fct() is a lower bound.
  std::vector<FlowRecord> unfinished;
  RunCounters counters;
  ResolvedParams params;
  SimTime end_time = 0;
};

Topology BuildTopology(const RunConfig& config);
// Throws ConfigError on invalid combinations.
ResolvedParams Resolve(const RunConfig& config, const Topology& topology);
std::vector<FlowSpec> BuildFlows(const RunConfig& config,
                                 const Topology& topology);

// Validates, then simulates. Identical configs yield identical results.
RunResult Run(const RunConfig& config);

}  // namespace irn

#endif  // IRN_SIMULATOR_H_
