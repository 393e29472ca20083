#include "hsgn/config.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>

#include "hsgn/error.hpp"
#include "hsgn/sieveweights.hpp"

#ifndef HSGN_SOURCE_CALIBRATION
#define HSGN_SOURCE_CALIBRATION "calibration/calibration.json"
#endif

namespace hsgn {

using nlohmann::json;

void ExperimentConfig::validate() const {
  form.validate();
  if (X < 10) throw DomainError("X must be >= 10");
  if (!(delta > 0 && delta < 0.5)) throw DomainError("delta must lie in (0, 0.5)");
  parse_log_gamma(gamma);
  if (!(h >= 1)) throw DomainError("h must be >= 1");
  if (!(K > 0)) throw DomainError("K must be positive");
  if (format != "json" && format != "csv") throw DomainError("format must be json or csv");
  if (!schedule.empty()) DensitySchedule::parse(schedule, seed);
}

std::string ExperimentConfig::form_name() const {
  return unit_form ? "unit" : std::string(form_kind_name(form.kind));
}

void set_form(ExperimentConfig& cfg, const std::string& name) {
  cfg.unit_form = false;
  const double density = cfg.form.vanishing_density;
  if (name == "delta") {
    cfg.form = FormSpec::delta();
  } else if (name == "cm") {
    cfg.form = FormSpec::cm_curve();
  } else if (name == "satotate") {
    cfg.form = FormSpec::satotate(cfg.seed);
  } else if (name == "vanishing") {
    cfg.form = FormSpec::vanishing(cfg.seed, density);
  } else if (name == "unit") {
    cfg.form = FormSpec::satotate(cfg.seed);
    cfg.unit_form = true;
  } else {
    throw DomainError("unknown form '" + name + "' (delta, cm, satotate, vanishing, unit)");
  }
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["form"] = cfg.form_name();
  j["weight"] = cfg.form.weight;
  j["vanishing_density"] = cfg.form.vanishing_density;
  j["schedule"] = cfg.schedule;
  j["X"] = cfg.X;
  j["delta"] = cfg.delta;
  j["gamma"] = cfg.gamma;
  j["h"] = cfg.h;
  j["K"] = cfg.K;
  j["seed"] = cfg.seed;
  j["samples"] = cfg.samples;
  j["P"] = cfg.P;
  j["output"] = cfg.output;
  j["format"] = cfg.format;
  j["cache_dir"] = cfg.cache_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.form.vanishing_density = j.at("vanishing_density").get<double>();
    set_form(cfg, j.at("form").get<std::string>());
    cfg.form.seed = cfg.seed;
    cfg.form.weight = j.at("weight").get<int>();
    cfg.schedule = j.at("schedule").get<std::string>();
    cfg.X = j.at("X").get<std::uint64_t>();
    cfg.delta = j.at("delta").get<double>();
    cfg.gamma = j.at("gamma").get<std::string>();
    cfg.h = j.at("h").get<double>();
    cfg.K = j.at("K").get<double>();
    cfg.samples = j.at("samples").get<std::uint64_t>();
    cfg.P = j.at("P").get<std::uint64_t>();
    cfg.output = j.at("output").get<std::string>();
    cfg.format = j.at("format").get<std::string>();
    cfg.cache_dir = j.at("cache_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const Calibration& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["provenance"] = {{"generated", c.generated},
                     {"pilot_seed", c.pilot_seed},
                     {"pilot_X", c.pilot_X},
                     {"margin", c.margin},
                     {"pilot", c.pilot}};
  j["acceptance_seed"] = c.acceptance_seed;
  j["parameters"] = {{"delta", c.delta}, {"gamma", c.gamma}, {"eta", c.eta}};
  j["scan"] = {{"h", c.scan_h}, {"K", c.scan_K}, {"samples", c.scan_samples}, {"C", c.C}, {"c", c.c}};
  j["moments"] = {{"c1", c.c1}, {"c2", c.c2}, {"C2", c.C2}};
  j["density_ratio_cm"] = {{"lo", c.density_ratio_lo}, {"hi", c.density_ratio_hi}};
  j["variance"] = {{"c2", c.variance_c2}};
  j["thresholds"] = {{"halasz_C", c.halasz_C},
                     {"sign_ratio_lo", c.sign_ratio_lo},
                     {"sign_ratio_hi", c.sign_ratio_hi},
                     {"sign_change_density", c.sign_change_density},
                     {"sign_change_density_vanishing", c.sign_change_density_vanishing},
                     {"chowla_fraction", c.chowla_fraction},
                     {"shifted_exponent", c.shifted_exponent},
                     {"diagonal_lo", c.diagonal_lo},
                     {"diagonal_hi", c.diagonal_hi},
                     {"variance_factor", c.variance_factor},
                     {"moment_factor", c.moment_factor},
                     {"prime_moment_bound", c.prime_moment_bound},
                     {"cm_density_bound", c.cm_density_bound},
                     {"st_bin_discrepancy", c.st_bin_discrepancy},
                     {"delta_negative_lo", c.delta_negative_lo},
                     {"delta_negative_hi", c.delta_negative_hi}};
  return j;
}

Calibration calibration_from_json(const json& j) {
  Calibration c;
  try {
    c.schema_version = j.at("schema_version").get<int>();
    const auto& prov = j.at("provenance");
    c.generated = prov.at("generated").get<std::string>();
    c.pilot_seed = prov.at("pilot_seed").get<std::uint64_t>();
    c.pilot_X = prov.at("pilot_X").get<std::vector<std::uint64_t>>();
    c.margin = prov.at("margin").get<double>();
    c.pilot = prov.value("pilot", json::object());
    c.acceptance_seed = j.at("acceptance_seed").get<std::uint64_t>();
    c.delta = j.at("parameters").at("delta").get<double>();
    c.gamma = j.at("parameters").at("gamma").get<std::string>();
    c.eta = j.at("parameters").at("eta").get<double>();
    const auto& s = j.at("scan");
    c.scan_h = s.at("h").get<double>();
    c.scan_K = s.at("K").get<double>();
    c.scan_samples = s.at("samples").get<std::uint64_t>();
    c.C = s.at("C").get<double>();
    c.c = s.at("c").get<double>();
    const auto& m = j.at("moments");
    c.c1 = m.at("c1").get<double>();
    c.c2 = m.at("c2").get<double>();
    c.C2 = m.at("C2").get<double>();
    c.density_ratio_lo = j.at("density_ratio_cm").at("lo").get<double>();
    c.density_ratio_hi = j.at("density_ratio_cm").at("hi").get<double>();
    c.variance_c2 = j.at("variance").at("c2").get<double>();
    const auto& t = j.at("thresholds");
    c.halasz_C = t.at("halasz_C").get<double>();
    c.sign_ratio_lo = t.at("sign_ratio_lo").get<double>();
    c.sign_ratio_hi = t.at("sign_ratio_hi").get<double>();
    c.sign_change_density = t.at("sign_change_density").get<double>();
    c.sign_change_density_vanishing = t.at("sign_change_density_vanishing").get<double>();
    c.chowla_fraction = t.at("chowla_fraction").get<double>();
    c.shifted_exponent = t.at("shifted_exponent").get<double>();
    c.diagonal_lo = t.at("diagonal_lo").get<double>();
    c.diagonal_hi = t.at("diagonal_hi").get<double>();
    c.variance_factor = t.at("variance_factor").get<double>();
    c.moment_factor = t.at("moment_factor").get<double>();
    c.prime_moment_bound = t.at("prime_moment_bound").get<double>();
    c.cm_density_bound = t.at("cm_density_bound").get<double>();
    c.st_bin_discrepancy = t.at("st_bin_discrepancy").get<double>();
    c.delta_negative_lo = t.at("delta_negative_lo").get<double>();
    c.delta_negative_hi = t.at("delta_negative_hi").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad calibration file: ") + e.what());
  }
  return c;
}

Calibration load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read calibration file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return calibration_from_json(j);
}

void save_calibration(const std::filesystem::path& path, const Calibration& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << to_json(c).dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::filesystem::path default_calibration_path() {
  if (const char* env = std::getenv("HSGN_CALIBRATION"); env && *env) return env;
  return HSGN_SOURCE_CALIBRATION;
}

std::string default_cache_dir() {
  if (const char* env = std::getenv("HSGN_CACHE_DIR"); env && *env) return env;
  return "";
}

std::string provenance_date() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env || !*env) return "unspecified";
  char* end = nullptr;
  const long long t = std::strtoll(env, &end, 10);
  if (*end != '\0') return "unspecified";
  const std::time_t tt = static_cast<std::time_t>(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

}  // namespace hsgn
