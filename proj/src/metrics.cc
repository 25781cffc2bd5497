#include "irn/metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace irn {

SimTime IdealFct(uint64_t payload_bytes, uint32_t hops, const LinkParams& link,
                 uint32_t mtu, uint32_t header_bytes) {
  if (payload_bytes == 0) throw std::invalid_argument("empty message");
  if (hops == 0) throw std::invalid_argument("path has no links");
  if (mtu == 0) throw std::invalid_argument("mtu must be positive");
  const uint64_t packets = (payload_bytes + mtu - 1) / mtu;
  const uint32_t last_payload =
      static_cast<uint32_t>(payload_bytes - (packets - 1) * mtu);
  const SimTime full =
      SerializationTime(mtu + header_bytes, link.bandwidth_bps);
  const SimTime last =
      SerializationTime(last_payload + header_bytes, link.bandwidth_bps);
  // done[k]: time the previous packet finished serializing onto link k.
  std::vector<SimTime> done(hops, 0);
  for (uint64_t i = 0; i < packets; ++i) {
    const SimTime ser = i + 1 == packets ? last : full;
    SimTime ready = 0;  // time this packet is fully at the sender of link k
    for (uint32_t k = 0; k < hops; ++k) {
      const SimTime start = std::max(ready, done[k]);
      done[k] = start + ser;
      ready = done[k] + link.propagation;
    }
  }
  return done[hops - 1] + link.propagation;
}

SimTime NearestRank(const std::vector<SimTime>& sorted, double percentile) {
  if (sorted.empty()) throw std::invalid_argument("empty sample");
  const double rank =
      std::ceil(percentile / 100.0 * static_cast<double>(sorted.size()) - 1e-9);
  const size_t idx = static_cast<size_t>(std::clamp(
      rank, 1.0, static_cast<double>(sorted.size())));
  return sorted[idx - 1];
}

const std::vector<double>& TailPercentiles() {
  static const std::vector<double> kPercentiles = {
      90, 91, 92, 93, 94, 95, 96, 97, 98, 99, 99.5, 99.9};
  return kPercentiles;
}

std::optional<Summary> Aggregate(std::span<const FlowRecord> records,
                                 uint32_t mtu) {
  if (records.empty()) return std::nullopt;
  Summary s;
  s.flows = records.size();
  std::vector<SimTime> fcts;
  std::vector<SimTime> small;
  fcts.reserve(records.size());
  // Sum in id order so the result does not depend on record order.
  std::vector<const FlowRecord*> ordered;
  for (const FlowRecord& r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const FlowRecord* a, const FlowRecord* b) { return a->id < b->id; });
  double slowdown_sum = 0;
  double fct_sum = 0;
  std::map<int32_t, std::pair<SimTime, SimTime>> groups;
  for (const FlowRecord* r : ordered) {
    slowdown_sum += r->slowdown();
    fct_sum += static_cast<double>(r->fct());
    fcts.push_back(r->fct());
    if (r->size <= mtu) small.push_back(r->fct());
    if (r->incast_group >= 0) {
      auto [it, fresh] =
          groups.try_emplace(r->incast_group, r->start, r->completion);
      if (!fresh) {
        it->second.first = std::min(it->second.first, r->start);
        it->second.second = std::max(it->second.second, r->completion);
      }
    }
  }
  s.avg_slowdown = slowdown_sum / static_cast<double>(s.flows);
  s.avg_fct = fct_sum / static_cast<double>(s.flows);
  std::sort(fcts.begin(), fcts.end());
  s.p99_fct = NearestRank(fcts, 99);
  s.single_packet_flows = small.size();
  if (!small.empty()) {
    std::sort(small.begin(), small.end());
    for (double p : TailPercentiles()) {
      s.single_packet_tail.emplace_back(p, NearestRank(small, p));
    }
  }
  for (const auto& [group, span] : groups) {
    s.rct[group] = span.second - span.first;
  }
  return s;
}

std::vector<Ratio> RatioTable(const Summary& a, const Summary& b) {
  std::vector<Ratio> out;
  auto add = [&](std::string name, double x, double y) {
    Ratio r{std::move(name), x, y, std::nullopt};
    if (y != 0) r.value = x / y;
    out.push_back(std::move(r));
  };
  add("avg_slowdown", a.avg_slowdown, b.avg_slowdown);
  add("avg_fct", a.avg_fct, b.avg_fct);
  add("p99_fct", static_cast<double>(a.p99_fct),
      static_cast<double>(b.p99_fct));
  for (const auto& [group, rct] : a.rct) {
    auto it = b.rct.find(group);
    if (it == b.rct.end()) continue;
    add("rct_group_" + std::to_string(group), static_cast<double>(rct),
        static_cast<double>(it->second));
  }
  return out;
}

const std::vector<std::string>& FlowCsvColumns() {
  static const std::vector<std::string> kColumns = {
      "flow_id",      "src",          "dst",       "kind",
      "size_bytes",   "start_ns",     "completion_ns", "fct_ns",
      "ideal_fct_ns", "slowdown",     "path_hops", "retransmissions",
      "drops",        "incast_group"};
  return kColumns;
}

void WriteFlowCsv(std::ostream& os, std::span<const FlowRecord> records) {
  const auto& cols = FlowCsvColumns();
  for (size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const FlowRecord& r : records) {
    std::ostringstream slowdown;
    slowdown << std::setprecision(9) << r.slowdown();
    os << r.id << ',' << r.src << ',' << r.dst << ',' << OpKindName(r.kind)
       << ',' << r.size << ',' << r.start << ',' << r.completion << ','
       << r.fct() << ',' << r.ideal_fct << ',' << slowdown.str() << ','
       << r.path_hops << ',' << r.retransmissions << ',' << r.drops << ','
       << r.incast_group << '\n';
  }
}

void WriteSummaryCsv(std::ostream& os, const std::optional<Summary>& summary) {
  os << "metric,value\n";
  if (!summary) {
    os << "empty,1\n";
    return;
  }
  const Summary& s = *summary;
  os << std::setprecision(17);
  os << "flows," << s.flows << '\n';
  os << "avg_slowdown," << s.avg_slowdown << '\n';
  os << "avg_fct_ns," << s.avg_fct << '\n';
  os << "p99_fct_ns," << s.p99_fct << '\n';
  os << "single_packet_flows," << s.single_packet_flows << '\n';
  for (const auto& [p, v] : s.single_packet_tail) {
    os << "single_packet_p" << p << "_ns," << v << '\n';
  }
  for (const auto& [g, v] : s.rct) {
    os << "rct_group_" << g << "_ns," << v << '\n';
  }
}

void WriteRatioCsv(std::ostream& os, const std::vector<Ratio>& ratios) {
  os << "metric,a,b,ratio\n" << std::setprecision(17);
  for (const Ratio& r : ratios) {
    os << r.metric << ',' << r.a << ',' << r.b << ',';
    if (r.value) {
      os << *r.value;
    } else {
      os << "undefined";
    }
    os << '\n';
  }
}

std::optional<Summary> ReadSummaryCsv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "metric,value") {
    throw std::runtime_error("summary csv: missing header");
  }
  Summary s;
  bool any = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("summary csv: malformed line '" + line + "'");
    }
    const std::string key = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    try {
      if (key == "empty") return std::nullopt;
      any = true;
      if (key == "flows") {
        s.flows = std::stoull(value);
      } else if (key == "avg_slowdown") {
        s.avg_slowdown = std::stod(value);
      } else if (key == "avg_fct_ns") {
        s.avg_fct = std::stod(value);
      } else if (key == "p99_fct_ns") {
        s.p99_fct = std::stoll(value);
      } else if (key == "single_packet_flows") {
        s.single_packet_flows = std::stoull(value);
      } else if (key.rfind("single_packet_p", 0) == 0) {
        const std::string p = key.substr(15, key.size() - 15 - 3);
        s.single_packet_tail.emplace_back(std::stod(p), std::stoll(value));
      } else if (key.rfind("rct_group_", 0) == 0) {
        const std::string g = key.substr(10, key.size() - 10 - 3);
        s.rct[std::stoi(g)] = std::stoll(value);
      } else {
        throw std::runtime_error("summary csv: unknown metric '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw std::runtime_error("summary csv: bad value in '" + line + "'");
    }
  }
  if (!any) throw std::runtime_error("summary csv: no metrics");
  return s;
}

}  // namespace irn
