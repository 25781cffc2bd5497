#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "irn/experiment.h"
#include "irn/verbs.h"

int main(int argc, char** argv) {
  CLI::App app{"Packet-level simulator for IRN and RoCE transports"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  unsigned jobs = 1;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("-c,--config", config_path, "INI experiment file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Output directory")->required();
  run->add_option("-s,--seed", seed, "Run only this seed");
  run->add_option("-j,--jobs", jobs, "Runs executed in parallel")
      ->check(CLI::Range(1u, 256u));

  auto* check = app.add_subcommand("check", "Validate a config without running");
  check->add_option("-c,--config", config_path, "INI experiment file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string dir_a, dir_b, ratio_out;
  auto* compare = app.add_subcommand("compare", "Ratio table of run A over run B");
  compare->add_option("a", dir_a, "Result directory A")->required();
  compare->add_option("b", dir_b, "Result directory B")->required();
  compare->add_option("-o,--out", ratio_out, "Write the table here instead of stdout");

  uint32_t width = 128;
  auto* overhead = app.add_subcommand("overhead", "Per-QP state accounting");
  overhead->add_option("-w,--bitmap-width", width, "Bitmap width in packets")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const irn::ExperimentConfig cfg = irn::LoadExperiment(config_path);
      irn::RunOptions opts{out_dir, seed, jobs};
      for (const auto& dir : irn::RunExperiment(cfg, opts, std::cerr)) {
        std::cout << dir.string() << "\n";
      }
    } else if (*check) {
      const irn::ExperimentConfig cfg = irn::LoadExperiment(config_path);
      for (const auto& p : irn::ExpandSweep(cfg)) {
        std::cout << (p.name.empty() ? cfg.name : p.name) << "\n";
      }
    } else if (*compare) {
      if (ratio_out.empty()) {
        irn::CompareRuns(dir_a, dir_b, std::cout);
      } else {
        std::ofstream out(ratio_out);
        if (!out) throw std::runtime_error("cannot write " + ratio_out);
        irn::CompareRuns(dir_a, dir_b, out);
      }
    } else if (*overhead) {
      const irn::StateOverhead s = irn::StateOverheadReport(width);
      std::cout << "sender_bits," << s.sender_bits << "\n"
                << "responder_bits," << s.responder_bits << "\n"
                << "read_tracking_bits," << s.read_tracking_bits << "\n"
                << "per_qp_bits," << s.per_qp_bits << "\n"
                << "bitmap_bits," << s.bitmap_bits << "\n"
                << "per_wqe_bytes," << s.per_wqe_bytes << "\n"
                << "shared_bytes," << s.shared_bytes << "\n";
    }
  } catch (const irn::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
