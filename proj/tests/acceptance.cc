// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Takes several minutes; progress goes to stderr.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "irn/experiment.h"
#include "irn/metrics.h"
#include "irn/simulator.h"
#include "irn/verbs.h"
#include "support/bitmap_oracle.h"
#include "support/lossy_channel.h"
#include "support/verbs_trace.h"

namespace irn {
namespace {

constexpr SimTime kTimeLimit = 100 * kMillisecond;
const std::vector<uint64_t> kSeeds{1, 2, 3, 4, 5};

int failures = 0;

void Report(const std::string& id, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS " : "FAIL ") << id << ": " << detail << std::endl;
  if (!pass) ++failures;
}

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Running totals over every fabric run with BDP-FC on.
struct BdpAudit {
  uint64_t runs = 0;
  uint64_t violations = 0;
  uint64_t worst_margin = 0;  // max in-flight
  uint32_t cap = 0;
  bool over = false;
} bdp_audit;

struct Scenario {
  Protocol protocol = Protocol::kIrn;
  bool pfc = false;
  std::optional<bool> bdp_fc;
  double load = 0.7;
};

struct PointResult {
  std::optional<Summary> mean;
  uint32_t unfinished = 0;  // across seeds
  uint64_t drops = 0;
  uint64_t max_occupancy = 0;
  uint64_t buffer = 0;
};

RunConfig Base(const Scenario& s, uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.fabric.pfc = s.pfc;
  c.transport.protocol = s.protocol;
  c.transport.bdp_fc = s.bdp_fc;
  c.workload.load = s.load;
  c.workload.flows = 10000;
  c.time_limit = kTimeLimit;
  return c;
}

RunResult Simulate(const RunConfig& c) {
  RunResult r = Run(c);
  if (r.params.bdp_fc) {
    ++bdp_audit.runs;
    bdp_audit.violations += r.counters.bdp_violations;
    bdp_audit.worst_margin =
        std::max(bdp_audit.worst_margin, r.counters.max_in_flight);
    bdp_audit.cap = r.params.bdp_cap;
    bdp_audit.over |= r.counters.max_in_flight > r.params.bdp_cap;
  }
  return r;
}

// Unfinished flows enter the metrics with their elapsed time as a lower
// bound on FCT.
PointResult RunPoint(const std::string& label, const Scenario& s,
                     const std::vector<uint64_t>& seeds) {
  PointResult out;
  std::vector<std::optional<Summary>> per_seed;
  for (uint64_t seed : seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig c = Base(s, seed);
    const RunResult r = Simulate(c);
    std::vector<FlowRecord> all = r.records;
    all.insert(all.end(), r.unfinished.begin(), r.unfinished.end());
    per_seed.push_back(Aggregate(all, c.transport.mtu));
    out.unfinished += static_cast<uint32_t>(r.unfinished.size());
    out.drops += r.counters.drops;
    out.max_occupancy =
        std::max(out.max_occupancy, r.counters.max_ingress_occupancy);
    out.buffer = r.params.buffer_bytes;
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    std::cerr << "  " << label << " seed " << seed << ": "
              << r.records.size() << " done, " << r.unfinished.size()
              << " unfinished, " << r.counters.drops << " drops ("
              << Fmt("%.1f", secs) << " s)\n";
  }
  out.mean = MeanSummary(per_seed);
  return out;
}

struct Metric {
  const char* name;
  std::function<double(const Summary&)> get;
};

const std::vector<Metric>& Metrics() {
  static const std::vector<Metric> m{
      {"avg_slowdown", [](const Summary& s) { return s.avg_slowdown; }},
      {"avg_fct", [](const Summary& s) { return s.avg_fct; }},
      {"p99_fct", [](const Summary& s) { return double(s.p99_fct); }},
  };
  return m;
}

// Checks worse >= factor * better on every metric. The better side must
// have finished every flow, since censoring would flatter it.
void ExpectOrdering(const std::string& id, const std::string& better_name,
                    const PointResult& better, const std::string& worse_name,
                    const PointResult& worse, double factor) {
  std::ostringstream d;
  bool pass = better.mean && worse.mean && better.unfinished == 0;
  if (better.unfinished > 0) {
    d << better_name << " left " << better.unfinished << " flows unfinished; ";
  }
  if (pass) {
    for (const Metric& m : Metrics()) {
      const double ratio = m.get(*worse.mean) / m.get(*better.mean);
      d << m.name << " " << worse_name << "/" << better_name << "="
        << Fmt("%.2f", ratio) << " ";
      pass &= ratio >= factor;
    }
  }
  if (worse.unfinished > 0) {
    d << "(" << worse_name << " " << worse.unfinished
      << " unfinished counted as lower bounds)";
  }
  Report(id, pass, d.str());
}

void CheckP1(const PointResult& irn_pfc, const PointResult& roce_pfc) {
  const bool pass = irn_pfc.drops == 0 && roce_pfc.drops == 0 &&
                    irn_pfc.unfinished == 0 && roce_pfc.unfinished == 0;
  std::ostringstream d;
  d << "drops IRN+PFC=" << irn_pfc.drops << " over 20 seeds, RoCE+PFC="
    << roce_pfc.drops << " over " << kSeeds.size()
    << " seeds; peak ingress occupancy "
    << std::max(irn_pfc.max_occupancy, roce_pfc.max_occupancy) << " of "
    << irn_pfc.buffer << " B";
  Report("P1", pass, d.str());
}

void CheckP3() {
  uint64_t traces = 0;
  std::string first_error;
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    for (testing::Proto proto : {testing::Proto::kIrn, testing::Proto::kGbn}) {
      testing::ChannelParams p = testing::AdversarialParams(seed + 100000);
      if (proto == testing::Proto::kGbn) p.bdp_fc = seed % 2 == 0;
      const testing::TraceResult r = testing::RunChannel(proto, p, seed);
      ++traces;
      if (p.bdp_fc && r.max_in_flight > p.bdp_cap) {
        bdp_audit.over = true;
      }
      if (!r.error.empty() && first_error.empty()) {
        first_error = "seed " + std::to_string(seed) + ": " + r.error;
      }
    }
  }
  Report("P3", first_error.empty(),
         std::to_string(traces) +
             " adversarial traces (drop <= 10%, duplication, reordering)" +
             (first_error.empty() ? "" : "; " + first_error));
}

void CheckP4() {
  uint64_t mismatches = 0;
  std::string first;
  for (uint64_t seed = 0; seed < 1000000; ++seed) {
    const std::string m = testing::RunBitmapTrial(seed + 7000000);
    if (!m.empty()) {
      ++mismatches;
      if (first.empty()) first = m;
    }
  }
  Report("P4", mismatches == 0,
         "1000000 op sequences, window <= 256, " +
             std::to_string(mismatches) + " mismatches" +
             (first.empty() ? "" : "; " + first));
}

void CheckP5() {
  uint64_t bad = 0;
  std::string first;
  for (uint64_t seed = 0; seed < 2000; ++seed) {
    const std::string m = testing::RunVerbsTrial(seed + 50000);
    if (!m.empty()) {
      ++bad;
      if (first.empty()) first = m;
    }
  }
  Report("P5", bad == 0,
         "2000 traces, " + std::to_string(bad) + " differ from in-order replay" +
             (first.empty() ? "" : "; " + first));
}

void CheckP6() {
  const StateOverhead s = StateOverheadReport(128);
  const bool pass = s.sender_bits == 52 && s.per_qp_bits == 160 &&
                    s.bitmap_bits == 640 && s.per_wqe_bytes == 3 &&
                    s.shared_bytes == 10;
  std::ostringstream d;
  d << "sender=" << s.sender_bits << " per_qp=" << s.per_qp_bits
    << " bitmap=" << s.bitmap_bits << " per_wqe=" << s.per_wqe_bytes
    << "B shared=" << s.shared_bytes << "B";
  Report("P6", pass, d.str());
}

void CheckD2(const std::string& id, const PointResult& irn,
             const PointResult& irn_pfc, double load) {
  std::ostringstream d;
  d << "load " << load << ": ";
  bool pass = irn.mean && irn_pfc.mean && irn.unfinished == 0 &&
              irn_pfc.unfinished == 0;
  bool degraded = false;
  if (pass) {
    for (const Metric& m : Metrics()) {
      const double ratio = m.get(*irn_pfc.mean) / m.get(*irn.mean);
      d << m.name << " with/without PFC=" << Fmt("%.2f", ratio) << " ";
      pass &= ratio >= 0.95;
      degraded |= ratio >= 1.10;
    }
  } else {
    d << "unfinished flows present";
  }
  Report(id, pass && degraded, d.str());
}

void CheckD5() {
  // Multi-packet Writes, each losing exactly one data packet once.
  RunConfig base;
  base.seed = 11;
  base.workload.flows = 0;
  Rng rng(11, RngStream::kTest, 5);
  std::vector<FlowSpec> flows;
  for (uint32_t i = 0; i < 200; ++i) {
    FlowSpec f;
    f.id = i;
    f.src = static_cast<uint32_t>(rng.Below(16));
    do {
      f.dst = static_cast<uint32_t>(rng.Below(16));
    } while (f.dst == f.src);
    f.size = 2000 + rng.Below(98000);
    f.arrival = i * 40 * kMicrosecond;
    flows.push_back(f);
    const uint32_t packets = static_cast<uint32_t>((f.size + 999) / 1000);
    base.loss.rules.push_back(
        {i, 0, static_cast<uint32_t>(rng.Below(packets)), 0});
  }
  base.flows = flows;
  uint64_t retx[2] = {0, 0};
  uint64_t lost[2] = {0, 0};
  bool complete = true;
  for (int g = 0; g < 2; ++g) {
    RunConfig c = base;
    c.transport.protocol = g == 0 ? Protocol::kIrn : Protocol::kGbn;
    const RunResult r = Simulate(c);
    retx[g] = r.counters.retransmissions;
    lost[g] = r.counters.injected_drops + r.counters.drops;
    complete &= r.incomplete == 0;
  }
  std::ostringstream d;
  d << "200 single-loss flows: losses IRN=" << lost[0] << " GBN=" << lost[1]
    << ", retransmissions IRN=" << retx[0] << " GBN=" << retx[1];
  Report("D5", complete && lost[0] == 200 && lost[1] == 200 &&
                   retx[0] == lost[0] && retx[1] > retx[0],
         d.str());
}

void CheckD6() {
  std::ostringstream d;
  bool pass = true;
  for (uint32_t m : {8u, 12u}) {
    for (uint64_t seed : {1, 2, 3}) {
      SimTime rct[2] = {0, 0};
      for (int g = 0; g < 2; ++g) {
        RunConfig c;
        c.seed = seed;
        c.workload.flows = 0;
        c.workload.incast_fan_in = m;
        c.fabric.pfc = g == 1;
        c.transport.protocol = g == 0 ? Protocol::kIrn : Protocol::kGbn;
        const RunResult r = Simulate(c);
        const auto s = Aggregate(r.records, c.transport.mtu);
        if (r.incomplete == 0 && s && s->rct.size() == 1) {
          rct[g] = s->rct.begin()->second;
        }
      }
      const double ratio = rct[1] > 0 ? double(rct[0]) / double(rct[1]) : 0;
      d << "M=" << m << " seed " << seed << " ratio " << Fmt("%.4f", ratio)
        << "; ";
      pass &= rct[0] > 0 && rct[1] > 0 && std::abs(ratio - 1) <= 0.10;
    }
  }
  Report("D6", pass, d.str());
}

void CheckD7() {
  std::ostringstream d;
  bool pass = true;
  // Cross-pod (6 hops) and same-rack (2 hops) paths.
  for (uint32_t dst : {15u, 1u}) {
    RunConfig c;
    c.workload.flows = 0;
    c.transport.rto_low = 100 * kMicrosecond;
    c.transport.n_small = 3;
    FlowSpec f;
    f.src = 0;
    f.dst = dst;
    f.size = 1000;
    c.flows = std::vector<FlowSpec>{f};
    c.loss.rules.push_back({0, 0, 0, 0});
    const RunResult r = Simulate(c);
    if (r.records.size() != 1) {
      pass = false;
      d << "flow to host " << dst << " did not complete; ";
      continue;
    }
    const FlowRecord& rec = r.records[0];
    const SimTime rtt =
        IdealFct(1000, rec.path_hops, c.fabric.link, 1000) +
        IdealFct(c.transport.ack_bytes, rec.path_hops, c.fabric.link, 1000);
    const SimTime bound = c.transport.rto_low + 3 * rtt;
    d << rec.path_hops << " hops: FCT " << rec.fct() << " ns <= " << bound
      << " ns; ";
    pass &= rec.fct() <= bound && r.counters.injected_drops == 1;
  }
  Report("D7", pass, d.str());
}

int Main() {
  std::cerr << "verbs, bitmap and channel properties\n";
  CheckP3();
  CheckP4();
  CheckP5();
  CheckP6();

  const std::vector<uint64_t> p1_seeds = [] {
    std::vector<uint64_t> s;
    for (uint64_t i = 1; i <= 20; ++i) s.push_back(i);
    return s;
  }();
  std::cerr << "fabric runs at 70% load, 10^4 flows per seed\n";
  const PointResult irn = RunPoint("IRN", {Protocol::kIrn, false, std::nullopt}, kSeeds);
  const PointResult irn_pfc =
      RunPoint("IRN+PFC", {Protocol::kIrn, true, std::nullopt}, p1_seeds);
  const PointResult roce_pfc =
      RunPoint("RoCE+PFC", {Protocol::kGbn, true, std::nullopt}, kSeeds);
  const PointResult roce = RunPoint("RoCE", {Protocol::kGbn, false, std::nullopt}, kSeeds);
  const PointResult irn_no_bdp =
      RunPoint("IRN-noBDPFC", {Protocol::kIrn, false, false}, kSeeds);
  const PointResult irn_gbn =
      RunPoint("IRN-GBN", {Protocol::kGbn, false, true}, kSeeds);
  std::cerr << "fabric runs at 90% load\n";
  const PointResult irn90 =
      RunPoint("IRN@90", {Protocol::kIrn, false, std::nullopt, 0.9}, kSeeds);
  const PointResult irn_pfc90 =
      RunPoint("IRN+PFC@90", {Protocol::kIrn, true, std::nullopt, 0.9}, kSeeds);

  CheckP1(irn_pfc, roce_pfc);
  CheckD5();
  CheckD6();
  CheckD7();

  std::ostringstream p2;
  p2 << bdp_audit.runs << " fabric runs with BDP-FC plus IRN channel traces: "
     << bdp_audit.violations << " violations, max in-flight "
     << bdp_audit.worst_margin << " (cap " << bdp_audit.cap << ")";
  Report("P2", bdp_audit.violations == 0 && !bdp_audit.over, p2.str());

  ExpectOrdering("D1", "IRN", irn, "RoCE+PFC", roce_pfc, 1.10);
  CheckD2("D2", irn, irn_pfc, 0.7);
  CheckD2("D2", irn90, irn_pfc90, 0.9);
  ExpectOrdering("D3", "RoCE+PFC", roce_pfc, "RoCE", roce, 1.10);

  std::ostringstream d4;
  bool d4_pass = irn.mean && irn_no_bdp.mean && irn_gbn.mean &&
                 irn.unfinished == 0 && irn_no_bdp.unfinished == 0;
  if (d4_pass) {
    d4 << "avg FCT IRN=" << Fmt("%.0f", irn.mean->avg_fct)
       << " < noBDPFC=" << Fmt("%.0f", irn_no_bdp.mean->avg_fct)
       << " < GBN=" << Fmt("%.0f", irn_gbn.mean->avg_fct) << " ns";
    d4_pass = irn.mean->avg_fct < irn_no_bdp.mean->avg_fct &&
              irn_no_bdp.mean->avg_fct < irn_gbn.mean->avg_fct;
    if (irn_gbn.unfinished > 0) {
      d4 << " (GBN " << irn_gbn.unfinished
         << " unfinished counted as lower bounds)";
    }
  } else {
    d4 << "missing results or unfinished flows in IRN / noBDPFC";
  }
  Report("D4", d4_pass, d4.str());

  std::cout << (failures == 0 ? "all criteria passed" : "criteria failed: ")
            << (failures == 0 ? "" : std::to_string(failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace irn

int main() { return irn::Main(); }
