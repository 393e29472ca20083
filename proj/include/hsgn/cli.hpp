#pragma once

// Command-line front end: gen-coeffs, run <experiment>, calibrate.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "hsgn/config.hpp"
#include "hsgn/report.hpp"

namespace hsgn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssert = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;  // capacity, corrupted cache, unreadable input
inline constexpr int kExitSoftware = 70;

const std::vector<std::string>& experiment_names();

// Table limit an experiment needs at the configured X and h.
std::uint64_t required_table_limit(const std::string& experiment, const ExperimentConfig& cfg);

// Loads the table from cfg.cache_dir when a valid cache exists, otherwise
// builds it (and writes the cache when a directory is configured). A corrupted
// cache is refused with FormatError unless force is set.
std::shared_ptr<const PrimeEigenvalueTable> obtain_table(const ExperimentConfig& cfg, std::uint64_t P,
                                                         bool force = false, std::ostream* log = nullptr);

struct ExperimentOutcome {
  ExperimentReport report;
  std::string summary;
  std::vector<std::string> failed;  // violated acceptance checks
};

ExperimentOutcome run_experiment(const std::string& name, const ExperimentConfig& cfg, const Calibration& cal,
                                 bool force = false);

Calibration calibrate(const ExperimentConfig& cfg, std::ostream* log = nullptr);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsgn
