#include "hsgn/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hsgn/cache.hpp"
#include "hsgn/error.hpp"
#include "hsgn/multeval.hpp"
#include "hsgn/primes.hpp"
#include "hsgn/sieveweights.hpp"
#include "hsgn/stats.hpp"

namespace hsgn {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"sign-stats", "sign-changes", "chowla",       "weights",
                                                 "moments",    "scan",         "shifted-conv", "variance",
                                                 "prime-checks", "st-hist",    "cm-density",   "cor-check"};
  return names;
}

namespace {

bool known_experiment(const std::string& name) {
  const auto& v = experiment_names();
  return std::find(v.begin(), v.end(), name) != v.end();
}

// Crude ceiling for k(X) = prod (1 + 1/p) over vanishing p <= X, used only to size tables.
std::uint64_t interval_allowance(double h, std::uint64_t X) {
  return static_cast<std::uint64_t>(std::ceil(h * (2.0 + 1.2 * std::log(static_cast<double>(X))))) + 1;
}

std::optional<DensitySchedule> schedule_of(const ExperimentConfig& cfg) {
  if (cfg.form.kind != FormKind::VanishingModel || cfg.schedule.empty()) return std::nullopt;
  return DensitySchedule::parse(cfg.schedule, cfg.seed);
}

PrimeEigenvalueTable unit_table(std::uint64_t P) {
  PrimeEigenvalueTable t;
  t.kind = FormKind::SatoTateSynthetic;
  t.weight = 0;
  t.limit = P;
  t.primes = primes_up_to(P);
  t.lambda.assign(t.primes.size(), 1.0);
  return t;
}

struct Inputs {
  std::shared_ptr<const PrimeEigenvalueTable> table;
  MultiplicativeSpec spec;
};

Inputs inputs_for(const std::string& experiment, const ExperimentConfig& cfg, bool force) {
  const std::uint64_t P = cfg.P ? cfg.P : required_table_limit(experiment, cfg);
  Inputs in;
  if (cfg.unit_form) {
    in.table = std::make_shared<const PrimeEigenvalueTable>(unit_table(P));
    in.spec = constant_spec(1.0);
    in.spec.prime_limit = P;
  } else {
    in.table = obtain_table(cfg, P, force);
    in.spec = hecke_extend(in.table);
  }
  return in;
}

json config_parameters(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  j.erase("cache_dir");
  j.erase("format");
  return j;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

struct Checker {
  std::vector<std::string>& failed;
  void operator()(bool ok, const std::string& what) const {
    if (!ok) failed.push_back(what);
  }
};

SieveParams sieve_params(const ExperimentConfig& cfg) {
  return SieveParams::from_X(cfg.X, cfg.delta, parse_log_gamma(cfg.gamma));
}

void run_signs(const std::string& name, const ExperimentConfig& cfg, const Calibration& cal, ExperimentOutcome& o,
               bool force) {
  const Inputs in = inputs_for(name, cfg, force);
  const auto window = evaluate_window(in.spec, 1, cfg.X + 1);
  const SignReport r = sign_counts(window);
  const std::uint64_t nonzero = r.n_pos + r.n_neg;
  o.report.results = to_json(r);
  o.report.results["nonzero"] = nonzero;
  const double per_x = static_cast<double>(r.sign_changes) / static_cast<double>(r.X);
  const double per_nonzero = nonzero ? static_cast<double>(r.sign_changes) / static_cast<double>(nonzero) : 0.0;
  o.report.results["sign_changes_per_X"] = per_x;
  o.report.results["sign_changes_per_nonzero"] = per_nonzero;
  o.report.results["chowla_fraction"] = static_cast<double>(std::llabs(r.chowla_sum)) / static_cast<double>(r.X);
  const double ratio = r.n_neg ? static_cast<double>(r.n_pos) / static_cast<double>(r.n_neg) : INFINITY;

  Checker check{o.failed};
  std::ostringstream s;
  if (name == "sign-stats") {
    s << "n_pos=" << r.n_pos << " n_neg=" << r.n_neg << " n_zero=" << r.n_zero << " ratio=" << fmt(ratio);
    check(ratio >= cal.sign_ratio_lo && ratio <= cal.sign_ratio_hi,
          "n_pos/n_neg = " + fmt(ratio) + " outside [" + fmt(cal.sign_ratio_lo) + ", " + fmt(cal.sign_ratio_hi) + "]");
    if (cfg.form.kind == FormKind::Delta && !cfg.unit_form) check(r.n_zero == 0, "Delta has a vanishing coefficient");
  } else if (name == "sign-changes") {
    s << "changes=" << r.sign_changes << " per_X=" << fmt(per_x) << " per_nonzero=" << fmt(per_nonzero);
    if (r.n_zero == 0) {
      check(per_x >= cal.sign_change_density,
            "sign changes / X = " + fmt(per_x) + " below " + fmt(cal.sign_change_density));
    } else {
      check(per_nonzero >= cal.sign_change_density_vanishing,
            "sign changes / #nonzero = " + fmt(per_nonzero) + " below " + fmt(cal.sign_change_density_vanishing));
    }
  } else {
    s << "sum=" << r.chowla_sum;
    check(static_cast<double>(std::llabs(r.chowla_sum)) <= cal.chowla_fraction * static_cast<double>(r.X),
          "|chowla sum| exceeds " + fmt(cal.chowla_fraction) + " X");
  }
  o.summary = s.str();
}

void run_weights(const ExperimentConfig& cfg, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("weights", cfg, force);
  const SieveParams params = sieve_params(cfg);
  const std::uint64_t lo = cfg.X, hi = 2 * cfg.X + 1;
  const auto ww = weights_window(params, in.spec, lo, hi, true);
  std::uint64_t violations = 0, positive = 0;
  long double sw = 0, swp = 0, swpp = 0;
  for (std::size_t i = 0; i < ww.w.size(); ++i) {
    if (!sandwich_holds(ww.w[i], ww.w_prime[i], ww.w_doubleprime[i])) ++violations;
    positive += ww.w_prime[i] > 0;
    sw += ww.w[i];
    swp += ww.w_prime[i];
    swpp += ww.w_doubleprime[i];
  }
  json& r = o.report.results;
  r["sieve"] = to_json(params);
  if (params.y <= kDplusMaxY) r["dplus_size"] = enumerate_Dplus(params).size();
  r["window_lo"] = lo;
  r["window_hi"] = hi - 1;
  r["sum_w"] = static_cast<double>(sw);
  r["sum_w_prime"] = static_cast<double>(swp);
  r["sum_w_doubleprime"] = static_cast<double>(swpp);
  r["w_prime_positive"] = positive;
  r["sandwich_violations"] = violations;
  o.summary = "y=" + std::to_string(params.y) + " max_m=" + std::to_string(params.max_m) +
              " sandwich_violations=" + std::to_string(violations);
  Checker{o.failed}(violations == 0, std::to_string(violations) + " sandwich violations");
}

void run_moments(const ExperimentConfig& cfg, const Calibration& cal, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("moments", cfg, force);
  const SieveParams params = sieve_params(cfg);
  const MomentReport m = moment_report(params, in.spec, *in.table);
  o.report.results = to_json(m);
  o.report.results["sieve"] = to_json(params);
  o.summary = "m1_wprime=" + fmt(m.m1_wprime) + " m2_wprime=" + fmt(m.m2_wprime) + " m2_w=" + fmt(m.m2_w);
  Checker check{o.failed};
  check(m.m1_wprime >= cal.c1 && m.m1_wprime <= cal.c2,
        "m1_wprime = " + fmt(m.m1_wprime) + " outside [" + fmt(cal.c1) + ", " + fmt(cal.c2) + "]");
  check(m.m2_w <= cal.C2, "m2_w = " + fmt(m.m2_w) + " above " + fmt(cal.C2));
  check(m.m2_wprime <= m.m2_w * (1 + 1e-9), "m2_wprime exceeds m2_w");
}

void run_scan(const ExperimentConfig& cfg, const Calibration& cal, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("scan", cfg, force);
  const SieveParams params = sieve_params(cfg);
  const ScanContext ctx = prepare_scan(params, in.spec, *in.table, cfg.h);
  const auto r = interval_scan(ctx, cfg.K, cfg.samples, cfg.seed, cal.C, cal.c);
  o.report.results = to_json(r);
  o.report.results["k_X"] = ctx.k_X;
  o.report.results["sieve"] = to_json(params);
  o.summary = "S1_small=" + fmt(r.frac_S1_small) + " S2_large=" + fmt(r.frac_S2_large) +
              " certified=" + fmt(r.frac_certified_sign_change) + " unsound=" + std::to_string(r.soundness_failures);
  Checker check{o.failed};
  const double want = 1 - 1 / (cfg.K * cfg.K);
  check(r.frac_S1_small >= want, "frac_S1_small = " + fmt(r.frac_S1_small) + " below " + fmt(want));
  check(r.frac_certified_sign_change > 0, "no certified sign change");
  check(r.soundness_failures == 0, std::to_string(r.soundness_failures) + " certificates without a sign change");
}

void run_shifted(const ExperimentConfig& cfg, const Calibration& cal, const std::vector<std::int64_t>& shifts,
                 const std::array<std::uint64_t, 4>& abAB, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("shifted-conv", cfg, force);
  const auto [a, b, A, B] = abAB;
  const std::uint64_t top = 2 * cfg.X / std::min(a, b) + 1;
  if (top - 1 > in.spec.prime_limit) throw CapacityError("shifted-conv needs coefficients up to 2X/min(a, b)");
  const auto window = evaluate_window(in.spec, 1, top);
  json rows = json::array();
  Checker check{o.failed};
  const double X = static_cast<double>(cfg.X);
  std::ostringstream s;
  for (auto h : shifts) {
    const auto r = shifted_convolution(window, a, b, A, B, h, cfg.X);
    json row = to_json(r);
    row["h"] = h;
    rows.push_back(row);
    s << " h=" << h << ":" << fmt(r.sum);
    if (h == 0 && a * A == b * B && a == b) {
      check(r.sum >= cal.diagonal_lo * X && r.sum <= cal.diagonal_hi * X,
            "diagonal sum " + fmt(r.sum) + " outside [" + fmt(cal.diagonal_lo) + ", " + fmt(cal.diagonal_hi) + "] X");
    } else if (h != 0 && r.solvable) {
      check(std::fabs(r.sum) <= std::pow(X, cal.shifted_exponent),
            "|sum| at h=" + std::to_string(h) + " exceeds X^" + fmt(cal.shifted_exponent));
    }
  }
  o.report.parameters["shifts"] = shifts;
  o.report.parameters["a"] = a;
  o.report.parameters["b"] = b;
  o.report.parameters["A"] = A;
  o.report.parameters["B"] = B;
  o.report.results["shifts"] = rows;
  o.summary = s.str().substr(1);
}

void run_variance(const ExperimentConfig& cfg, const Calibration& cal, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("variance", cfg, force);
  const SieveParams params = sieve_params(cfg);
  ScanContext ctx = prepare_scan(params, in.spec, *in.table, 2 * cfg.h);
  const double v2 = variance_short(ctx, cal.eta);
  ctx.h = cfg.h;
  ctx.L = static_cast<std::uint64_t>(std::floor(cfg.h * ctx.k_X));
  const double v1 = variance_short(ctx, cal.eta);
  const double ratio = v1 > 0 ? v2 / v1 : INFINITY;
  json& r = o.report.results;
  r["sieve"] = to_json(params);
  r["eta"] = cal.eta;
  r["k_X"] = ctx.k_X;
  r["variance_over_h"] = v1;
  r["variance_over_2h"] = v2;
  r["doubling_ratio"] = ratio;
  o.summary = "var/h=" + fmt(v1) + " var/2h=" + fmt(v2) + " ratio=" + fmt(ratio);
  Checker check{o.failed};
  check(v1 <= cal.variance_c2, "variance/h = " + fmt(v1) + " above calibrated " + fmt(cal.variance_c2));
  check(ratio >= 1 / cal.variance_factor && ratio <= cal.variance_factor,
        "doubling ratio " + fmt(ratio) + " outside [1/" + fmt(cal.variance_factor) + ", " + fmt(cal.variance_factor) + "]");
}

void run_prime_checks(const ExperimentConfig& cfg, const Calibration& cal, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("prime-checks", cfg, force);
  const std::uint64_t P = in.table->limit;
  std::vector<std::uint64_t> ys;
  for (std::uint64_t y : {1'000ULL, 10'000ULL, 100'000ULL}) {
    if (2 * y <= P) ys.push_back(y);
  }
  std::vector<std::pair<std::uint64_t, std::uint64_t>> wz;
  if (P >= 100) wz.emplace_back(100, P);
  const auto r = prime_moment_checks(*in.table, ys, wz, 10'000);
  o.report.results = to_json(r);
  Checker check{o.failed};
  std::ostringstream s;
  for (const auto& l : r.large) {
    s << "y=" << l.y << ":" << (l.holds ? "ok" : "FAIL") << " ";
    check(l.holds, "large-value sum below y/(10 log y) at y=" + std::to_string(l.y));
  }
  for (const auto& w : r.windows) {
    s << "diff=" << fmt(w.diff) << " ";
    check(std::fabs(w.diff) <= cal.prime_moment_bound, "|sum lambda^2/p - sum 1/p| = " + fmt(w.diff) + " above " +
                                                            fmt(cal.prime_moment_bound));
  }
  s << "grid_violations=" << r.grid_violations;
  check(r.grid_violations == 0, "minorant polynomial inequality fails on the grid");
  o.summary = s.str();
}

void run_st_hist(const ExperimentConfig& cfg, const Calibration& cal, unsigned bins, ExperimentOutcome& o,
                 bool force) {
  const Inputs in = inputs_for("st-hist", cfg, force);
  const auto r = satotate_histogram(*in.table, in.table->limit, bins);
  o.report.parameters["bins"] = bins;
  o.report.results = to_json(r);
  o.summary = "count=" + std::to_string(r.count) + " max_discrepancy=" + fmt(r.max_discrepancy) +
              " negative_fraction=" + fmt(r.negative_fraction);
  Checker check{o.failed};
  check(std::fabs(r.total_mass - 1) <= 1e-9, "histogram mass is not 1");
  if (cfg.form.kind == FormKind::SatoTateSynthetic && !cfg.unit_form) {
    check(r.max_discrepancy <= cal.st_bin_discrepancy,
          "bin discrepancy " + fmt(r.max_discrepancy) + " above " + fmt(cal.st_bin_discrepancy));
  }
  if (cfg.form.kind == FormKind::Delta) {
    check(r.negative_fraction >= cal.delta_negative_lo && r.negative_fraction <= cal.delta_negative_hi,
          "negative fraction " + fmt(r.negative_fraction) + " outside [" + fmt(cal.delta_negative_lo) + ", " +
              fmt(cal.delta_negative_hi) + "]");
  }
}

double nonzero_density_ratio(const MultiplicativeSpec& spec, const PrimeEigenvalueTable& table, std::uint64_t X,
                             std::uint64_t* nonzero_out = nullptr) {
  const auto window = evaluate_window(spec, 1, X + 1);
  std::uint64_t nonzero = 0;
  for (auto s : window.signs) nonzero += s != 0;
  if (nonzero_out) *nonzero_out = nonzero;
  return static_cast<double>(nonzero) / (static_cast<double>(X) * density_nonzero(table, X).lower_product);
}

void run_cm_density(const ExperimentConfig& cfg, const Calibration& cal, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("cm-density", cfg, force);
  const auto r = serre_cm_density(*in.table, cfg.X);
  std::uint64_t nonzero = 0;
  const double ratio = nonzero_density_ratio(in.spec, *in.table, cfg.X, &nonzero);
  o.report.results = to_json(r);
  o.report.results["nonzero"] = nonzero;
  o.report.results["nonzero_density_ratio"] = ratio;
  const double diff = r.vanishing_sum - r.reference;
  o.summary = "vanishing_sum=" + fmt(r.vanishing_sum) + " reference=" + fmt(r.reference) + " diff=" + fmt(diff) +
              " density_ratio=" + fmt(ratio);
  Checker check{o.failed};
  check(std::fabs(diff) <= cal.cm_density_bound, "|difference| " + fmt(diff) + " above " + fmt(cal.cm_density_bound));
  if (cfg.form.kind == FormKind::CMCurve && !cfg.unit_form) {
    check(ratio >= cal.density_ratio_lo && ratio <= cal.density_ratio_hi,
          "nonzero density ratio " + fmt(ratio) + " outside [" + fmt(cal.density_ratio_lo) + ", " +
              fmt(cal.density_ratio_hi) + "]");
  }
}

void run_cor_check(const ExperimentConfig& cfg, ExperimentOutcome& o, bool force) {
  const Inputs in = inputs_for("cor-check", cfg, force);
  const auto window = evaluate_window(in.spec, 1, 2 * cfg.X + 3);
  const auto r = cor_proof_check(window, cfg.X);
  o.report.results = to_json(r);
  o.summary = r.trivial_branch ? std::string("trivial branch")
                               : "b=" + std::to_string(r.b) + " j=" + std::to_string(r.j) + " checked=" +
                                     std::to_string(r.checked) + " disjunction_failures=" +
                                     std::to_string(r.disjunction_failures);
  Checker check{o.failed};
  check(r.found_b || r.trivial_branch, "no even b with g(2^b) = 1 in range");
  check(r.multiplicativity_failures == 0, "multiplicativity fails in the residue class");
  check(r.disjunction_failures == 0, "three-pair disjunction fails");
}

struct RunExtras {
  std::vector<std::int64_t> shifts{0, 1, 2, 3};
  std::array<std::uint64_t, 4> abAB{1, 1, 1, 1};
  unsigned bins = 20;
};

ExperimentOutcome run_experiment_impl(const std::string& name, const ExperimentConfig& cfg, const Calibration& cal,
                                      bool force, const RunExtras& extras) {
  if (!known_experiment(name)) throw DomainError("unknown experiment '" + name + "'");
  cfg.validate();
  ExperimentOutcome o;
  o.report.experiment = name;
  o.report.parameters = config_parameters(cfg);
  if (name == "sign-stats" || name == "sign-changes" || name == "chowla") {
    run_signs(name, cfg, cal, o, force);
  } else if (name == "weights") {
    run_weights(cfg, o, force);
  } else if (name == "moments") {
    run_moments(cfg, cal, o, force);
  } else if (name == "scan") {
    run_scan(cfg, cal, o, force);
  } else if (name == "shifted-conv") {
    run_shifted(cfg, cal, extras.shifts, extras.abAB, o, force);
  } else if (name == "variance") {
    run_variance(cfg, cal, o, force);
  } else if (name == "prime-checks") {
    run_prime_checks(cfg, cal, o, force);
  } else if (name == "st-hist") {
    run_st_hist(cfg, cal, extras.bins, o, force);
  } else if (name == "cm-density") {
    run_cm_density(cfg, cal, o, force);
  } else {
    run_cor_check(cfg, o, force);
  }
  o.summary = name + " form=" + cfg.form_name() + " X=" + std::to_string(cfg.X) + ": " + o.summary;
  return o;
}

}  // namespace

std::uint64_t required_table_limit(const std::string& experiment, const ExperimentConfig& cfg) {
  const std::uint64_t X = cfg.X;
  if (experiment == "sign-stats" || experiment == "sign-changes" || experiment == "chowla" ||
      experiment == "cm-density" || experiment == "prime-checks" || experiment == "st-hist") {
    return X;
  }
  if (experiment == "weights" || experiment == "moments" || experiment == "shifted-conv") return 2 * X;
  if (experiment == "scan") return 2 * X + interval_allowance(cfg.h, X);
  if (experiment == "variance") return 2 * X + interval_allowance(2 * cfg.h, X);
  if (experiment == "cor-check") return 2 * X + 2;
  throw DomainError("unknown experiment '" + experiment + "'");
}

std::shared_ptr<const PrimeEigenvalueTable> obtain_table(const ExperimentConfig& cfg, std::uint64_t P, bool force,
                                                         std::ostream* log) {
  if (cfg.unit_form) throw DomainError("the unit form has no prime table to cache");
  const auto schedule = schedule_of(cfg);
  if (cfg.cache_dir.empty()) return std::make_shared<const PrimeEigenvalueTable>(build_table(cfg.form, P, schedule));
  const std::filesystem::path path =
      std::filesystem::path(cfg.cache_dir) / cache_file_name(cfg.form, P, schedule ? schedule->name() : "");
  if (std::filesystem::exists(path)) {
    try {
      return std::make_shared<const PrimeEigenvalueTable>(read_table(path, false));
    } catch (const FormatError& e) {
      if (!force) {
        throw FormatError("refusing corrupted cache " + path.string() + ": " + e.what() +
                          " (remove it or pass --force to rebuild)");
      }
      if (log) *log << "rebuilding corrupted cache " << path.string() << "\n";
    }
  }
  auto table = build_table(cfg.form, P, schedule);
  std::filesystem::create_directories(path.parent_path());
  write_table(path, table);
  if (log) *log << "wrote " << path.string() << " (" << table.size() << " primes)\n";
  table.drop_exact();
  return std::make_shared<const PrimeEigenvalueTable>(std::move(table));
}

ExperimentOutcome run_experiment(const std::string& name, const ExperimentConfig& cfg, const Calibration& cal,
                                 bool force) {
  return run_experiment_impl(name, cfg, cal, force, RunExtras{});
}

Calibration calibrate(const ExperimentConfig& base, std::ostream* log) {
  Calibration cal;
  cal.generated = provenance_date();
  cal.pilot_seed = base.seed;
  cal.acceptance_seed = base.seed + 1000;
  cal.delta = base.delta;
  cal.gamma = base.gamma;
  cal.scan_h = base.h;
  cal.scan_K = base.K;
  cal.scan_samples = std::max<std::uint64_t>(base.samples, 1000);
  cal.pilot_X = {10'000, 100'000, 1'000'000};

  ExperimentConfig cfg = base;
  set_form(cfg, "delta");
  json pilot = json::object();
  std::vector<double> Cs, cs, m1s, m2ws, dens, vars;
  for (auto X : cal.pilot_X) {
    cfg.X = X;
    const std::uint64_t P = required_table_limit("scan", cfg);
    auto table = obtain_table(cfg, P, false, log);
    const auto spec = hecke_extend(table);
    const SieveParams params = sieve_params(cfg);
    const ScanContext ctx = prepare_scan(params, spec, *table, cal.scan_h);
    const auto scan = interval_scan(ctx, cal.scan_K, cal.scan_samples, cal.pilot_seed, 1.0, 1.0);
    const auto mom = moment_report(params, spec, *table);
    Cs.push_back(scan.empirical_C);
    cs.push_back(scan.empirical_c);
    m1s.push_back(mom.m1_wprime);
    m2ws.push_back(mom.m2_w);

    ExperimentConfig cm = cfg;
    set_form(cm, "cm");
    auto cm_table = obtain_table(cm, X, false, log);
    const double ratio = nonzero_density_ratio(hecke_extend(cm_table), *cm_table, X);
    dens.push_back(ratio);

    const std::string key = std::to_string(X);
    pilot[key] = {{"empirical_C", scan.empirical_C},
                  {"empirical_c", scan.empirical_c},
                  {"m1_wprime", mom.m1_wprime},
                  {"m2_wprime", mom.m2_wprime},
                  {"m2_w", mom.m2_w},
                  {"cm_nonzero_density_ratio", ratio}};
    if (log) *log << "pilot X=" << X << " C*=" << scan.empirical_C << " c*=" << scan.empirical_c << "\n";
  }
  const double h_var = 10;
  for (std::uint64_t X : {100'000ULL, 500'000ULL}) {
    cfg.X = X;
    cfg.h = h_var;
    auto table = obtain_table(cfg, required_table_limit("variance", cfg), false, log);
    const auto spec = hecke_extend(table);
    const ScanContext ctx = prepare_scan(sieve_params(cfg), spec, *table, h_var);
    const double v = variance_short(ctx, cal.eta);
    vars.push_back(v);
    pilot["variance_h10_X" + std::to_string(X)] = v;
  }
  auto max_of = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
  auto min_of = [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); };
  cal.C = cal.margin * max_of(Cs);
  cal.c = 0.5 * min_of(cs);
  cal.c1 = 0.5 * min_of(m1s);
  cal.c2 = 2 * max_of(m1s);
  cal.C2 = 2 * max_of(m2ws);
  cal.density_ratio_lo = 0.5 * min_of(dens);
  cal.density_ratio_hi = 2 * max_of(dens);
  cal.variance_c2 = 2 * max_of(vars);
  cal.pilot = pilot;
  return cal;
}

namespace {

std::uint64_t parse_count(const std::string& text, const char* what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw DomainError(std::string(what) + ": not a number: " + text);
  }
  if (used != text.size() || !(v >= 0) || v > 1.8e19 || std::floor(v) != v) {
    throw DomainError(std::string(what) + ": expected a nonnegative integer, got " + text);
  }
  return static_cast<std::uint64_t>(v);
}

void write_output(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw CapacityError("cannot write " + path);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sign statistics of normalized Hecke eigenvalues"};
  app.name("hsgn");
  app.set_help_flag("--help", "print help and exit");  // -h would collide with --h
  app.require_subcommand(1);

  ExperimentConfig cfg;
  cfg.cache_dir = default_cache_dir();
  std::string form = "delta", X = "1000000", P = "0", samples = "1000";
  std::string experiment, calibration_path;
  bool assert_flag = false, force = false;
  RunExtras extras;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--form", form, "delta | cm | satotate | vanishing | unit")->capture_default_str();
    sub->add_option("--X", X, "scale X")->capture_default_str();
    sub->add_option("--delta", cfg.delta, "y = X^delta")->capture_default_str();
    sub->add_option("--gamma", cfg.gamma, "sieve ratio, decimal or 2^(-a/b)")->capture_default_str();
    sub->add_option("--h", cfg.h, "interval length factor")->capture_default_str();
    sub->add_option("--K", cfg.K, "scan bound factor K")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "seed for synthetic forms and sampling")->capture_default_str();
    sub->add_option("--samples", samples, "scan samples (0 = every x)")->capture_default_str();
    sub->add_option("--out", cfg.output, "output file (stdout when empty)");
    sub->add_option("--format", cfg.format, "json | csv")->capture_default_str();
    sub->add_option("--cache-dir", cfg.cache_dir, "coefficient cache directory (default $HSGN_CACHE_DIR)");
    sub->add_option("--P", P, "prime table limit (0 = what the experiment needs)");
    sub->add_option("--schedule", cfg.schedule, "vanishing schedule: none | 3mod4 | all | random:<rho>");
    sub->add_option("--density", cfg.form.vanishing_density, "vanishing density for the random schedule");
    sub->add_flag("--force", force, "rebuild a corrupted cache instead of refusing");
  };

  auto* gen = app.add_subcommand("gen-coeffs", "build the prime eigenvalue cache");
  common(gen);
  auto* run = app.add_subcommand("run", "run an experiment");
  common(run);
  run->add_option("experiment", experiment, "experiment name")->required();
  run->add_flag("--assert", assert_flag, "exit 2 when an acceptance threshold is violated");
  run->add_option("--calibration", calibration_path, "calibration file");
  run->add_option("--bins", extras.bins, "st-hist bins")->capture_default_str();
  run->add_option("--shift", extras.shifts, "shifted-conv shifts")->capture_default_str();
  run->add_option("--a", extras.abAB[0], "shifted-conv a")->capture_default_str();
  run->add_option("--b", extras.abAB[1], "shifted-conv b")->capture_default_str();
  run->add_option("--A", extras.abAB[2], "shifted-conv A")->capture_default_str();
  run->add_option("--B", extras.abAB[3], "shifted-conv B")->capture_default_str();
  auto* cal_cmd = app.add_subcommand("calibrate", "pilot sweeps fixing the unspecified constants");
  common(cal_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "hsgn: " << e.what() << "\n";
    if (auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) err << sub->help();
    return kExitUsage;
  }

  try {
    cfg.X = parse_count(X, "--X");
    cfg.P = parse_count(P, "--P");
    cfg.samples = parse_count(samples, "--samples");
    set_form(cfg, form);
    cfg.validate();

    if (gen->parsed()) {
      if (cfg.cache_dir.empty()) throw DomainError("gen-coeffs needs --cache-dir or HSGN_CACHE_DIR");
      const std::uint64_t limit = cfg.P ? cfg.P : cfg.X;
      const auto schedule = schedule_of(cfg);
      const auto path =
          std::filesystem::path(cfg.cache_dir) / cache_file_name(cfg.form, limit, schedule ? schedule->name() : "");
      if (cache_valid(path)) {
        out << "cache " << path.string() << " is up to date\n";
        return kExitOk;
      }
      obtain_table(cfg, limit, force, &out);
      return kExitOk;
    }

    if (cal_cmd->parsed()) {
      const std::filesystem::path target = cfg.output.empty() ? default_calibration_path() : std::filesystem::path(cfg.output);
      const Calibration cal = calibrate(cfg, &err);
      save_calibration(target, cal);
      out << "calibration written to " << target.string() << ": C=" << fmt(cal.C) << " c=" << fmt(cal.c)
          << " c1=" << fmt(cal.c1) << " c2=" << fmt(cal.c2) << " C2=" << fmt(cal.C2) << "\n";
      return kExitOk;
    }

    if (!known_experiment(experiment)) {
      std::string list;
      for (const auto& n : experiment_names()) list += " " + n;
      err << "hsgn: unknown experiment '" << experiment << "'; choose one of:" << list << "\n";
      return kExitUsage;
    }
    Calibration cal;
    const std::filesystem::path cal_path = calibration_path.empty() ? default_calibration_path() : std::filesystem::path(calibration_path);
    if (std::filesystem::exists(cal_path)) {
      cal = load_calibration(cal_path);
    } else if (experiment == "scan" || assert_flag) {
      throw FormatError("calibration file " + cal_path.string() + " not found (run `hsgn calibrate`)");
    }
    const auto outcome = run_experiment_impl(experiment, cfg, cal, force, extras);
    const std::string text = cfg.format == "csv" ? render_csv(outcome.report) : render_json(outcome.report);
    if (cfg.output.empty()) {
      out << text;
      err << outcome.summary << "\n";
    } else {
      write_output(cfg.output, text);
      out << outcome.summary << "\n";
    }
    if (assert_flag && !outcome.failed.empty()) {
      for (const auto& f : outcome.failed) err << "assert failed: " << f << "\n";
      return kExitAssert;
    }
    return kExitOk;
  } catch (const DomainError& e) {
    err << "hsgn: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CapacityError& e) {
    err << "hsgn: capacity: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    err << "hsgn: " << e.what() << "\n";
    return kExitData;
  } catch (const OverflowError& e) {
    err << "hsgn: overflow: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "hsgn: " << e.what() << "\n";
    return kExitData;
  } catch (const std::bad_alloc&) {
    err << "hsgn: out of memory\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "hsgn: internal error: " << e.what() << "\n";
    return kExitSoftware;
  }
}

}  // namespace hsgn
