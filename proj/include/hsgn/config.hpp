#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "hsgn/coeffs.hpp"

namespace hsgn {

struct ExperimentConfig {
  FormSpec form = FormSpec::delta();
  bool unit_form = false;  // g = 1 identically, no prime table behind it
  std::string schedule;    // vanishing schedule; empty means random:<vanishing_density>
  std::uint64_t X = 1'000'000;
  double delta = 0.1;
  std::string gamma = "2^(-1/100)";
  double h = 50;
  double K = 10;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1000;
  std::uint64_t P = 0;  // table limit override, 0 = per experiment
  std::string output;
  std::string format = "json";
  std::string cache_dir;

  // Throws DomainError on violated invariants.
  void validate() const;
  std::string form_name() const;
};

// "delta", "cm", "satotate", "vanishing", "unit"
void set_form(ExperimentConfig& cfg, const std::string& name);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Constants the theory leaves unspecified, pinned by pilot runs.
struct Calibration {
  int schema_version = 1;
  std::string generated;  // SOURCE_DATE_EPOCH date or "unspecified"
  std::uint64_t pilot_seed = 0;
  std::uint64_t acceptance_seed = 0;
  std::vector<std::uint64_t> pilot_X;
  double margin = 1.25;

  double delta = 0.1;
  std::string gamma = "2^(-1/100)";
  double eta = 0.3;

  // interval scan
  double scan_h = 50, scan_K = 10;
  std::uint64_t scan_samples = 1000;
  double C = 0, c = 0;
  // moments of w', w
  double c1 = 0, c2 = 0, C2 = 0;
  // #{n <= X : lambda(n) != 0} / (X prod (1 - 1/p)) for the CM form
  double density_ratio_lo = 0, density_ratio_hi = 0;
  // variance / h
  double variance_c2 = 0;

  // fixed thresholds
  double halasz_C = 10;
  double sign_ratio_lo = 0.95, sign_ratio_hi = 1.05;
  double sign_change_density = 0.1;
  double sign_change_density_vanishing = 0.05;
  double chowla_fraction = 0.5;
  double shifted_exponent = 0.9;
  double diagonal_lo = 0.1, diagonal_hi = 10;
  double variance_factor = 4;
  double moment_factor = 3;
  double prime_moment_bound = 5;
  double cm_density_bound = 1.5;
  double st_bin_discrepancy = 0.01;
  double delta_negative_lo = 0.45, delta_negative_hi = 0.55;

  nlohmann::json pilot;  // raw pilot measurements
};

nlohmann::json to_json(const Calibration& c);
Calibration calibration_from_json(const nlohmann::json& j);
Calibration load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path, const Calibration& c);

// $HSGN_CALIBRATION, else the copy committed with the sources.
std::filesystem::path default_calibration_path();

// $HSGN_CACHE_DIR or empty.
std::string default_cache_dir();

// SOURCE_DATE_EPOCH as YYYY-MM-DD, or "unspecified".
std::string provenance_date();

}  // namespace hsgn
