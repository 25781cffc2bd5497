#ifndef IRN_EXPERIMENT_H_
#define IRN_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irn/metrics.h"
#include "irn/simulator.h"

namespace irn {

// Flat "section.key" -> value assignments. Every key has a default, so a
// config file only lists what it changes.
using KeyValues = std::map<std::string, std::string>;

struct SweepAxis {
  std::string key;  // "section.key"
  std::vector<std::string> values;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<uint64_t> seeds{1};
  KeyValues values;  // full set after defaults
  std::vector<SweepAxis> sweep;
};

struct SweepPoint {
  std::string name;  // "" for the unswept base point
  KeyValues values;
};

// Key -> default value, for every accepted key.
const KeyValues& DefaultKeyValues();

// INI text with [experiment], [topology], [transport], [cc], [workload]
// and [sweep] sections. Unknown sections, unknown keys, malformed values
// and invalid parameter combinations throw ConfigError.
ExperimentConfig ParseExperiment(std::istream& is);
ExperimentConfig LoadExperiment(const std::filesystem::path& path);

std::vector<SweepPoint> ExpandSweep(const ExperimentConfig& config);
RunConfig MakeRunConfig(const KeyValues& values, uint64_t seed);

// Identifies what a pair of runs must share to be comparable: topology
// shape, link speeds, buffers, workload and seeds, but not the transport,
// PFC or congestion control under test.
std::string ScenarioSignature(const KeyValues& values,
                              const std::vector<uint64_t>& seeds);

// Per-seed summaries averaged metric by metric; flow counts are summed.
std::optional<Summary> MeanSummary(const std::vector<std::optional<Summary>>& s);

struct RunOptions {
  std::filesystem::path out;
  std::optional<uint64_t> seed;  // replaces the seed list
  unsigned jobs = 1;
};

// Writes, per sweep point, seed_<n>/flows.csv and seed_<n>/summary.csv, a
// seed-averaged summary.csv and run.json. Returns the point directories.
std::vector<std::filesystem::path> RunExperiment(const ExperimentConfig& config,
                                                 const RunOptions& options,
                                                 std::ostream& log);

// Writes metric,a,b,ratio for A over B. Throws ConfigError when either
// directory lacks results or the scenario signatures differ.
void CompareRuns(const std::filesystem::path& a, const std::filesystem::path& b,
                 std::ostream& out);

}  // namespace irn

#endif  // IRN_EXPERIMENT_H_
