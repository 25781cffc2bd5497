#include "irn/workload.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "irn/topology.h"

namespace irn {

std::string_view OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kWrite:
      return "write";
    case OpKind::kRead:
      return "read";
    case OpKind::kSend:
      return "send";
  }
  return "?";
}

SizeDistribution::SizeDistribution(std::vector<SizeRow> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) throw ConfigError("size distribution has no rows");
  double total = 0;
  for (const SizeRow& r : rows_) {
    if (!(r.mass > 0) || !(r.lo > 0) || r.hi < r.lo) {
      throw ConfigError("bad size-distribution row");
    }
    if (r.lo < static_cast<double>(kMinFlowBytes)) {
      throw ConfigError("flow sizes must be at least 32 bytes");
    }
    total += r.mass;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("size-distribution masses must sum to 1");
  }
  std::sort(rows_.begin(), rows_.end(),
            [](const SizeRow& a, const SizeRow& b) { return a.lo < b.lo; });
  for (size_t i = 1; i < rows_.size(); ++i) {
    if (rows_[i].lo < rows_[i - 1].hi) {
      throw ConfigError("size-distribution ranges overlap");
    }
  }
}

SizeDistribution SizeDistribution::HeavyTailed() {
  return SizeDistribution({
      {0.50, 32, 1'000, SizeLaw::kLogUniform},
      {0.35, 1'000, 200'000, SizeLaw::kLogUniform},
      {0.15, 200'000, 3'000'000, SizeLaw::kLogUniform},
  });
}

SizeDistribution SizeDistribution::Uniform(double lo, double hi) {
  return SizeDistribution({{1.0, lo, hi, SizeLaw::kUniform}});
}

SizeDistribution SizeDistribution::Parse(std::string_view table) {
  std::vector<SizeRow> rows;
  std::stringstream ss{std::string(table)};
  std::string item;
  while (std::getline(ss, item, ';')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace),
               item.end());
    if (item.empty()) continue;
    std::stringstream fields(item);
    std::string mass, lo, hi, law;
    if (!std::getline(fields, mass, ':') || !std::getline(fields, lo, ':') ||
        !std::getline(fields, hi, ':')) {
      throw ConfigError("size row '" + item + "' is not mass:lo:hi[:law]");
    }
    std::getline(fields, law, ':');
    SizeRow row;
    try {
      row.mass = std::stod(mass);
      row.lo = std::stod(lo);
      row.hi = std::stod(hi);
    } catch (const std::exception&) {
      throw ConfigError("size row '" + item + "' has a non-numeric field");
    }
    if (law.empty() || law == "loguniform") {
      row.law = SizeLaw::kLogUniform;
    } else if (law == "uniform") {
      row.law = SizeLaw::kUniform;
    } else {
      throw ConfigError("unknown size law '" + law + "'");
    }
    rows.push_back(row);
  }
  return SizeDistribution(std::move(rows));
}

uint64_t SizeDistribution::Sample(Rng& rng) const {
  double u = rng.Uniform();
  const SizeRow* row = &rows_.back();
  for (const SizeRow& r : rows_) {
    if (u < r.mass) {
      row = &r;
      break;
    }
    u -= r.mass;
  }
  const double v = rng.Uniform();
  double x;
  if (row->law == SizeLaw::kUniform || row->lo == row->hi) {
    x = row->lo + v * (row->hi - row->lo);
  } else {
    x = row->lo * std::exp(v * std::log(row->hi / row->lo));
  }
  return std::max<uint64_t>(kMinFlowBytes,
                            static_cast<uint64_t>(std::ceil(x)));
}

double SizeDistribution::Mean() const {
  double mean = 0;
  for (const SizeRow& r : rows_) {
    double m;
    if (r.lo == r.hi) {
      m = r.lo;
    } else if (r.law == SizeLaw::kUniform) {
      m = 0.5 * (r.lo + r.hi);
    } else {
      m = (r.hi - r.lo) / std::log(r.hi / r.lo);
    }
    mean += r.mass * m;
  }
  return mean;
}

double SizeDistribution::Cdf(double x) const {
  double cdf = 0;
  for (const SizeRow& r : rows_) {
    if (x >= r.hi) {
      cdf += r.mass;
    } else if (x > r.lo) {
      const double frac = r.law == SizeLaw::kUniform
                              ? (x - r.lo) / (r.hi - r.lo)
                              : std::log(x / r.lo) / std::log(r.hi / r.lo);
      cdf += r.mass * frac;
    }
  }
  return std::min(1.0, cdf);
}

std::string SizeDistribution::ToString() const {
  std::ostringstream os;
  for (size_t i = 0; i < rows_.size(); ++i) {
    const SizeRow& r = rows_[i];
    if (i) os << ';';
    os << r.mass << ':' << r.lo << ':' << r.hi << ':'
       << (r.law == SizeLaw::kUniform ? "uniform" : "loguniform");
  }
  return os.str();
}

std::vector<FlowSpec> GenerateFlows(const SizeDistribution& dist, double load,
                                    uint32_t num_hosts,
                                    uint64_t host_bandwidth_bps, uint64_t seed,
                                    uint32_t count, OpMix mix) {
  if (!(load > 0 && load < 1)) {
    throw ConfigError("load must lie in (0, 1)");
  }
  if (num_hosts < 2) throw ConfigError("need at least two hosts");
  const double mix_total = mix.write + mix.read + mix.send;
  if (mix.write < 0 || mix.read < 0 || mix.send < 0 || !(mix_total > 0)) {
    throw ConfigError("operation mix must be non-negative and non-zero");
  }
  const double mean_bits = dist.Mean() * 8.0;
  // Flows per nanosecond at each host.
  const double rate = load * static_cast<double>(host_bandwidth_bps) /
                      mean_bits / 1e9;

  struct Pending {
    double time;
    uint32_t host;
    bool operator>(const Pending& o) const {
      return time != o.time ? time > o.time : host > o.host;
    }
  };
  std::vector<Rng> streams;
  streams.reserve(num_hosts);
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> next;
  for (uint32_t h = 0; h < num_hosts; ++h) {
    streams.emplace_back(seed, RngStream::kWorkload, h);
    next.push({streams[h].Exponential(rate), h});
  }

  std::vector<FlowSpec> flows;
  flows.reserve(count);
  while (flows.size() < count) {
    const Pending p = next.top();
    next.pop();
    Rng& rng = streams[p.host];
    FlowSpec f;
    f.id = static_cast<uint32_t>(flows.size());
    f.src = p.host;
    f.dst = static_cast<uint32_t>(rng.Below(num_hosts - 1));
    if (f.dst >= f.src) ++f.dst;
    f.size = dist.Sample(rng);
    f.arrival = static_cast<SimTime>(p.time);
    const double op = rng.Uniform() * mix_total;
    f.kind = op < mix.write              ? OpKind::kWrite
             : op < mix.write + mix.read ? OpKind::kRead
                                         : OpKind::kSend;
    flows.push_back(f);
    next.push({p.time + rng.Exponential(rate), p.host});
  }
  return flows;
}

std::vector<FlowSpec> GenerateIncast(uint32_t fan_in, uint64_t total_bytes,
                                     uint32_t num_hosts, uint64_t seed,
                                     SimTime at, std::optional<uint32_t> dst,
                                     int32_t group) {
  if (fan_in == 0 || fan_in >= num_hosts) {
    throw ConfigError("incast fan-in must lie in [1, hosts)");
  }
  if (total_bytes / fan_in < kMinFlowBytes) {
    throw ConfigError("incast flows would be smaller than 32 bytes");
  }
  Rng rng(seed, RngStream::kIncast);
  const uint32_t target =
      dst ? *dst : static_cast<uint32_t>(rng.Below(num_hosts));
  if (target >= num_hosts) throw ConfigError("incast destination out of range");
  std::vector<uint32_t> others;
  for (uint32_t h = 0; h < num_hosts; ++h) {
    if (h != target) others.push_back(h);
  }
  for (uint32_t i = 0; i < fan_in; ++i) {
    const uint32_t j = i + static_cast<uint32_t>(rng.Below(others.size() - i));
    std::swap(others[i], others[j]);
  }
  std::vector<FlowSpec> flows;
  const uint64_t share = total_bytes / fan_in;
  const uint64_t remainder = total_bytes % fan_in;
  for (uint32_t i = 0; i < fan_in; ++i) {
    FlowSpec f;
    f.id = i;
    f.src = others[i];
    f.dst = target;
    f.size = share + (i < remainder ? 1 : 0);
    f.arrival = at;
    f.incast_group = group;
    flows.push_back(f);
  }
  return flows;
}

std::vector<FlowSpec> MergeFlows(std::vector<FlowSpec> a,
                                 std::vector<FlowSpec> b) {
  std::vector<FlowSpec> merged;
  merged.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(),
             std::back_inserter(merged),
             [](const FlowSpec& x, const FlowSpec& y) {
               return x.arrival < y.arrival;
             });
  for (uint32_t i = 0; i < merged.size(); ++i) merged[i].id = i;
  return merged;
}

}  // namespace irn
