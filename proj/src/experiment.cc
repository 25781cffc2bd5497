#include "irn/experiment.h"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

namespace irn {

namespace fs = std::filesystem;
using nlohmann::json;

const KeyValues& DefaultKeyValues() {
  static const KeyValues kDefaults = {
      {"experiment.name", "experiment"},
      {"experiment.seeds", "1"},
      {"experiment.duration_us", "0"},
      {"experiment.time_limit_ms", "20000"},
      {"topology.arity", "4"},
      {"topology.bandwidth_gbps", "40"},
      {"topology.propagation_ns", "2000"},
      {"topology.buffer_bytes", "0"},
      {"topology.pfc", "false"},
      {"topology.pause_threshold_bytes", "0"},
      {"topology.resume_threshold_bytes", "0"},
      {"transport.protocol", "irn"},
      {"transport.bdp_fc", "auto"},
      {"transport.bdp_cap", "0"},
      {"transport.rto_low_us", "100"},
      {"transport.rto_high_us", "0"},
      {"transport.rto_high_scale", "1"},
      {"transport.n_small", "3"},
      {"transport.dual_timeout", "true"},
      {"transport.timeouts", "auto"},
      {"transport.retx_fetch_delay_ns", "0"},
      {"transport.header_overhead", "false"},
      {"transport.loss_backoff_us", "0"},
      {"transport.mtu", "1000"},
      {"transport.data_header_bytes", "0"},
      {"transport.ack_bytes", "64"},
      {"transport.read_request_bytes", "64"},
      {"cc.scheme", "none"},
      {"cc.slow_start", "false"},
      {"workload.distribution", "heavy_tailed"},
      {"workload.load", "0.7"},
      {"workload.flows", "10000"},
      {"workload.mix", "write:1,read:0,send:0"},
      {"workload.incast_fan_in", "0"},
      {"workload.incast_bytes", "150000000"},
      {"workload.incast_dst", "auto"},
      {"workload.incast_start_us", "0"},
      {"workload.drop_probability", "0"},
  };
  return kDefaults;
}

namespace {

const std::set<std::string> kSections = {"experiment", "topology", "transport",
                                         "cc", "workload"};

std::string Trim(std::string_view s) {
  const size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> SplitList(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    out.push_back(Trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void Bad(const std::string& key, const std::string& value,
                      const char* what) {
  throw ConfigError(key + ": " + what + " (got '" + value + "')");
}

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  const std::string& Str(const std::string& key) const { return kv_.at(key); }

  uint64_t U64(const std::string& key) const {
    const std::string& v = Str(key);
    uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      Bad(key, v, "expected a non-negative integer");
    }
    return out;
  }

  uint32_t U32(const std::string& key) const {
    const uint64_t v = U64(key);
    if (v > UINT32_MAX) Bad(key, Str(key), "value too large");
    return static_cast<uint32_t>(v);
  }

  double Real(const std::string& key) const {
    const std::string& v = Str(key);
    try {
      size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      Bad(key, v, "expected a number");
    }
  }

  double NonNegative(const std::string& key) const {
    const double d = Real(key);
    if (d < 0) Bad(key, Str(key), "must not be negative");
    return d;
  }

  bool Bool(const std::string& key) const {
    const std::string& v = Str(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    Bad(key, v, "expected true or false");
  }

  std::optional<bool> Tristate(const std::string& key) const {
    if (Str(key) == "auto") return std::nullopt;
    return Bool(key);
  }

  SimTime Micros(const std::string& key) const {
    return static_cast<SimTime>(std::llround(NonNegative(key) * 1e3));
  }

 private:
  const KeyValues& kv_;
};

SizeDistribution ParseDistribution(const std::string& v) {
  if (v == "heavy_tailed") return SizeDistribution::HeavyTailed();
  try {
    if (v.rfind("uniform:", 0) == 0) {
      const auto parts = SplitList(v, ':');
      if (parts.size() != 3) throw std::invalid_argument(v);
      return SizeDistribution::Uniform(std::stoull(parts[1]),
                                       std::stoull(parts[2]));
    }
    return SizeDistribution::Parse(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    Bad("workload.distribution", v,
        "expected heavy_tailed, uniform:LO:HI or a mass:lo:hi:law table");
  }
}

OpMix ParseMix(const std::string& v) {
  OpMix mix{0, 0, 0};
  std::set<std::string> seen;
  for (const std::string& item : SplitList(v)) {
    const auto kv = SplitList(item, ':');
    if (kv.size() != 2 || !seen.insert(kv[0]).second) {
      Bad("workload.mix", v, "expected write:W,read:R,send:S");
    }
    double w = 0;
    try {
      w = std::stod(kv[1]);
    } catch (const std::exception&) {
      Bad("workload.mix", v, "weights must be numbers");
    }
    if (kv[0] == "write") {
      mix.write = w;
    } else if (kv[0] == "read") {
      mix.read = w;
    } else if (kv[0] == "send") {
      mix.send = w;
    } else {
      Bad("workload.mix", v, "unknown operation");
    }
    if (!(w >= 0)) Bad("workload.mix", v, "weights must not be negative");
  }
  if (mix.write + mix.read + mix.send <= 0) {
    Bad("workload.mix", v, "at least one weight must be positive");
  }
  return mix;
}

std::vector<uint64_t> ParseSeeds(const std::string& v) {
  std::vector<uint64_t> seeds;
  for (const std::string& s : SplitList(v)) {
    uint64_t x = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size()) {
      Bad("experiment.seeds", v, "expected a comma-separated list of integers");
    }
    seeds.push_back(x);
  }
  return seeds;
}

void Validate(const KeyValues& values) {
  const RunConfig c = MakeRunConfig(values, 1);
  const Topology t = BuildTopology(c);
  Resolve(c, t);
}

std::string FileSafe(const std::string& s) {
  std::string out;
  for (char ch : s) {
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' ||
            ch == '=' || ch == '-' || ch == '_')
               ? ch
               : '_';
  }
  return out;
}

}  // namespace

RunConfig MakeRunConfig(const KeyValues& values, uint64_t seed) {
  const Reader r(values);
  RunConfig c;
  c.seed = seed;

  const uint64_t arity = r.U64("topology.arity");
  if (arity < 2 || arity % 2 != 0 || arity > 64) {
    Bad("topology.arity", r.Str("topology.arity"), "must be even, 2..64");
  }
  c.fabric.arity = static_cast<int>(arity);
  const double gbps = r.Real("topology.bandwidth_gbps");
  if (!(gbps > 0)) Bad("topology.bandwidth_gbps", r.Str("topology.bandwidth_gbps"), "must be positive");
  c.fabric.link.bandwidth_bps = static_cast<uint64_t>(std::llround(gbps * 1e9));
  c.fabric.link.propagation = static_cast<SimTime>(r.U64("topology.propagation_ns"));
  c.fabric.buffer_bytes = r.U64("topology.buffer_bytes");
  c.fabric.pfc = r.Bool("topology.pfc");
  c.fabric.pause_threshold = r.U64("topology.pause_threshold_bytes");
  c.fabric.resume_threshold = r.U64("topology.resume_threshold_bytes");

  TransportSettings& t = c.transport;
  const std::string& proto = r.Str("transport.protocol");
  if (proto == "irn") {
    t.protocol = Protocol::kIrn;
  } else if (proto == "gbn" || proto == "roce") {
    t.protocol = Protocol::kGbn;
  } else {
    Bad("transport.protocol", proto, "expected irn or gbn");
  }
  t.bdp_fc = r.Tristate("transport.bdp_fc");
  t.bdp_cap = r.U32("transport.bdp_cap");
  t.rto_low = r.Micros("transport.rto_low_us");
  t.rto_high = r.Micros("transport.rto_high_us");
  t.rto_high_scale = r.Real("transport.rto_high_scale");
  t.n_small = r.U32("transport.n_small");
  t.dual_timeout = r.Bool("transport.dual_timeout");
  t.timeouts = r.Tristate("transport.timeouts");
  t.retx_fetch_delay = static_cast<SimTime>(r.U64("transport.retx_fetch_delay_ns"));
  t.header_overhead = r.Bool("transport.header_overhead");
  t.loss_backoff = r.Micros("transport.loss_backoff_us");
  t.mtu = r.U32("transport.mtu");
  t.data_header_bytes = r.U32("transport.data_header_bytes");
  t.ack_bytes = r.U32("transport.ack_bytes");
  t.read_request_bytes = r.U32("transport.read_request_bytes");

  c.cc = r.Str("cc.scheme");
  c.cc_slow_start = r.Bool("cc.slow_start");

  WorkloadSettings& w = c.workload;
  w.sizes = ParseDistribution(r.Str("workload.distribution"));
  w.load = r.Real("workload.load");
  if (!(w.load > 0 && w.load <= 1)) {
    Bad("workload.load", r.Str("workload.load"), "must lie in (0, 1]");
  }
  w.flows = r.U32("workload.flows");
  w.mix = ParseMix(r.Str("workload.mix"));
  w.incast_fan_in = r.U32("workload.incast_fan_in");
  w.incast_bytes = r.U64("workload.incast_bytes");
  if (r.Str("workload.incast_dst") != "auto") {
    w.incast_dst = r.U32("workload.incast_dst");
  }
  w.incast_start = r.Micros("workload.incast_start_us");
  c.loss.data_drop_probability = r.NonNegative("workload.drop_probability");

  if (const SimTime d = r.Micros("experiment.duration_us"); d > 0) {
    c.duration = d;
  }
  c.time_limit = r.Micros("experiment.time_limit_ms") * 1000;
  if (c.time_limit <= 0) {
    Bad("experiment.time_limit_ms", r.Str("experiment.time_limit_ms"), "must be positive");
  }
  return c;
}

ExperimentConfig ParseExperiment(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.values = DefaultKeyValues();
  for (const auto& [section, body] : tree) {
    if (body.data().size() > 0 && body.empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    if (section == "sweep") {
      for (const auto& [key, value] : body) {
        if (!DefaultKeyValues().count(key) || key.rfind("experiment.", 0) == 0) {
          throw ConfigError("sweep: unknown or unsweepable key '" + key + "'");
        }
        SweepAxis axis{key, SplitList(value.data())};
        for (const std::string& v : axis.values) {
          if (v.empty()) throw ConfigError("sweep: empty value for '" + key + "'");
        }
        cfg.sweep.push_back(std::move(axis));
      }
      continue;
    }
    if (!kSections.count(section)) {
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!DefaultKeyValues().count(full)) {
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      }
      cfg.values[full] = Trim(value.data());
    }
  }
  cfg.name = cfg.values.at("experiment.name");
  cfg.seeds = ParseSeeds(cfg.values.at("experiment.seeds"));
  if (cfg.seeds.empty()) throw ConfigError("experiment.seeds is empty");
  for (const SweepPoint& p : ExpandSweep(cfg)) {
    try {
      Validate(p.values);
    } catch (const ConfigError& e) {
      throw ConfigError(p.name.empty() ? e.what()
                                       : "sweep point " + p.name + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig LoadExperiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return ParseExperiment(in);
}

std::vector<SweepPoint> ExpandSweep(const ExperimentConfig& config) {
  std::vector<SweepPoint> points{{"", config.values}};
  for (const SweepAxis& axis : config.sweep) {
    std::vector<SweepPoint> next;
    for (const SweepPoint& p : points) {
      for (const std::string& v : axis.values) {
        SweepPoint q = p;
        q.values[axis.key] = v;
        q.name += (q.name.empty() ? "" : "+") + FileSafe(axis.key + "=" + v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

std::string ScenarioSignature(const KeyValues& values,
                              const std::vector<uint64_t>& seeds) {
  std::string text;
  for (const auto& [k, v] : values) {
    const bool shared =
        k.rfind("workload.", 0) == 0 || k == "topology.arity" ||
        k == "topology.bandwidth_gbps" || k == "topology.propagation_ns" ||
        k == "topology.buffer_bytes" || k == "transport.mtu" ||
        k == "experiment.duration_us";
    if (shared) text += k + "=" + v + "\n";
  }
  text += "seeds=";
  for (uint64_t s : seeds) text += std::to_string(s) + ",";
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<Summary> MeanSummary(const std::vector<std::optional<Summary>>& in) {
  std::vector<const Summary*> s;
  for (const auto& x : in) {
    if (x) s.push_back(&*x);
  }
  if (s.empty()) return std::nullopt;
  const double n = static_cast<double>(s.size());
  Summary m;
  double p99 = 0;
  std::map<double, std::pair<double, int>> tail;
  std::map<int32_t, std::pair<double, int>> rct;
  for (const Summary* x : s) {
    m.flows += x->flows;
    m.single_packet_flows += x->single_packet_flows;
    m.avg_slowdown += x->avg_slowdown / n;
    m.avg_fct += x->avg_fct / n;
    p99 += static_cast<double>(x->p99_fct) / n;
    for (const auto& [p, v] : x->single_packet_tail) {
      tail[p].first += static_cast<double>(v);
      ++tail[p].second;
    }
    for (const auto& [g, v] : x->rct) {
      rct[g].first += static_cast<double>(v);
      ++rct[g].second;
    }
  }
  m.p99_fct = static_cast<SimTime>(std::llround(p99));
  for (const auto& [p, acc] : tail) {
    m.single_packet_tail.emplace_back(
        p, static_cast<SimTime>(std::llround(acc.first / acc.second)));
  }
  for (const auto& [g, acc] : rct) {
    m.rct[g] = static_cast<SimTime>(std::llround(acc.first / acc.second));
  }
  return m;
}

namespace {

json CountersJson(uint64_t seed, const RunResult& r) {
  const RunCounters& c = r.counters;
  const ResolvedParams& p = r.params;
  return json{
      {"seed", seed},
      {"completed", r.records.size()},
      {"incomplete", r.incomplete},
      {"end_time_ns", r.end_time},
      {"drops", c.drops},
      {"injected_drops", c.injected_drops},
      {"pause_frames", c.pause_frames},
      {"retransmissions", c.retransmissions},
      {"timeouts", c.timeouts},
      {"bdp_violations", c.bdp_violations},
      {"max_in_flight", c.max_in_flight},
      {"data_packets", c.data_packets},
      {"max_ingress_occupancy", c.max_ingress_occupancy},
      {"resolved",
       {{"bdp_bytes", p.bdp_bytes},
        {"bdp_cap", p.bdp_cap},
        {"bdp_fc", p.bdp_fc},
        {"buffer_bytes", p.buffer_bytes},
        {"headroom_bytes", p.headroom_bytes},
        {"pause_threshold", p.pause_threshold},
        {"resume_threshold", p.resume_threshold},
        {"rto_high_ns", p.rto_high},
        {"timeouts", p.timeouts}}},
  };
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<fs::path> RunExperiment(const ExperimentConfig& config,
                                    const RunOptions& options,
                                    std::ostream& log) {
  const std::vector<uint64_t> seeds =
      options.seed ? std::vector<uint64_t>{*options.seed} : config.seeds;
  const std::vector<SweepPoint> points = ExpandSweep(config);

  struct Task {
    size_t point;
    size_t seed_index;
  };
  std::vector<Task> tasks;
  for (size_t p = 0; p < points.size(); ++p) {
    for (size_t s = 0; s < seeds.size(); ++s) tasks.push_back({p, s});
  }
  std::vector<std::optional<Summary>> summaries(tasks.size());
  std::vector<json> counters(tasks.size());
  std::vector<fs::path> dirs;
  for (const SweepPoint& p : points) {
    dirs.push_back(p.name.empty() ? options.out : options.out / p.name);
    fs::create_directories(dirs.back());
  }

  std::atomic<size_t> next{0};
  std::mutex log_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const uint64_t seed = seeds[task.seed_index];
      try {
        const RunConfig rc = MakeRunConfig(points[task.point].values, seed);
        const RunResult r = Run(rc);
        const fs::path dir = dirs[task.point] / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);
        std::ostringstream flows, summary;
        WriteFlowCsv(flows, r.records);
        summaries[i] = Aggregate(r.records, rc.transport.mtu);
        WriteSummaryCsv(summary, summaries[i]);
        WriteFile(dir / "flows.csv", flows.str());
        WriteFile(dir / "summary.csv", summary.str());
        counters[i] = CountersJson(seed, r);
        std::lock_guard<std::mutex> lock(log_mu);
        log << (points[task.point].name.empty() ? config.name
                                                : points[task.point].name)
            << " seed " << seed << ": " << r.records.size() << " flows, "
            << r.incomplete << " incomplete, " << r.counters.drops
            << " drops\n";
      } catch (...) {
        std::lock_guard<std::mutex> lock(log_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, options.jobs);
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (size_t p = 0; p < points.size(); ++p) {
    std::vector<std::optional<Summary>> per_seed;
    json runs = json::array();
    for (size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].point != p) continue;
      per_seed.push_back(summaries[i]);
      runs.push_back(counters[i]);
    }
    std::ostringstream summary;
    WriteSummaryCsv(summary, MeanSummary(per_seed));
    WriteFile(dirs[p] / "summary.csv", summary.str());
    json values = json::object();
    for (const auto& [k, v] : points[p].values) values[k] = v;
    const json doc = {
        {"name", config.name},
        {"point", points[p].name},
        {"signature", ScenarioSignature(points[p].values, seeds)},
        {"seeds", seeds},
        {"config", values},
        {"runs", runs},
    };
    WriteFile(dirs[p] / "run.json", doc.dump(2) + "\n");
  }
  return dirs;
}

void CompareRuns(const fs::path& a, const fs::path& b, std::ostream& out) {
  auto load = [](const fs::path& dir) {
    std::ifstream meta(dir / "run.json");
    std::ifstream summary(dir / "summary.csv");
    if (!meta || !summary) {
      throw ConfigError("no completed run in " + dir.string());
    }
    json doc;
    try {
      doc = json::parse(meta);
    } catch (const json::exception& e) {
      throw ConfigError(dir.string() + "/run.json: " + e.what());
    }
    return std::make_pair(doc.at("signature").get<std::string>(),
                          ReadSummaryCsv(summary));
  };
  const auto [sig_a, sum_a] = load(a);
  const auto [sig_b, sum_b] = load(b);
  if (sig_a != sig_b) {
    throw ConfigError("scenario signatures differ: " + sig_a + " vs " + sig_b);
  }
  if (!sum_a || !sum_b) throw ConfigError("a run has no completed flows");
  WriteRatioCsv(out, RatioTable(*sum_a, *sum_b));
}

}  // namespace irn
