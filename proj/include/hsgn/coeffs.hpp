#pragma once

// Normalized prime eigenvalues lambda(p) for the forms the experiments use:
// Ramanujan's Delta (weight 12), the CM newform of y^2 = x^3 - x (weight 2),
// a seeded Sato-Tate model, and vanishing-prime variants of any table.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsgn/tau.hpp"

namespace hsgn {

enum class FormKind : std::uint8_t { Delta = 0, CMCurve = 1, SatoTateSynthetic = 2, VanishingModel = 3 };

std::string_view form_kind_name(FormKind kind);

struct FormSpec {
  FormKind kind = FormKind::Delta;
  int weight = 12;
  std::uint64_t seed = 0;
  double vanishing_density = 0.0;

  static FormSpec delta() { return {FormKind::Delta, 12, 0, 0.0}; }
  static FormSpec cm_curve() { return {FormKind::CMCurve, 2, 0, 0.0}; }
  static FormSpec satotate(std::uint64_t seed) { return {FormKind::SatoTateSynthetic, 0, seed, 0.0}; }
  static FormSpec vanishing(std::uint64_t seed, double density) {
    return {FormKind::VanishingModel, 0, seed, density};
  }

  // Throws DomainError on a bad weight or density.
  void validate() const;
};

struct PrimeEigenvalueTable {
  FormKind kind = FormKind::Delta;
  int weight = 12;
  std::uint64_t limit = 0;
  std::vector<std::uint64_t> primes;
  std::vector<double> lambda;
  // a_p for every entry, or empty when the table has no integer backing.
  std::vector<BigInt> exact;
  // For integer-backed tables: the period z such that lambda(p^nu) = 0 exactly
  // when z divides nu + 1 (0 = never zero). Empty for synthetic tables.
  std::vector<std::uint8_t> zero_period;
  // Primes of bad reduction, where lambda(p^nu) = lambda(p)^nu.
  std::vector<std::uint64_t> bad_primes;

  std::size_t size() const { return primes.size(); }
  bool exact_provenance() const { return !zero_period.empty(); }
  std::optional<std::size_t> index_of(std::uint64_t p) const;
  double lambda_at(std::uint64_t p) const;  // std::out_of_range if p is not in the table
  bool is_bad(std::uint64_t p) const;
  bool vanishes_at(std::size_t i) const;
  void drop_exact() { exact.clear(); exact.shrink_to_fit(); }
};

inline constexpr double kSyntheticZeroThreshold = 1e-14;

// Random streams keyed by (seed, stream); the counter is the prime or sample index.
inline constexpr std::uint64_t kStreamSatoTate = 1;
inline constexpr std::uint64_t kStreamVanishing = 2;
inline constexpr std::uint64_t kStreamScan = 3;

// With j = a^2 / p^(weight-1), lambda(p^nu) = U_nu(lambda(p)/2) vanishes for some
// nu only when j is 0, 1, 2 or 3, with zeros at nu + 1 divisible by 2, 3, 4, 6.
std::uint8_t zero_period_for(const BigInt& a, std::uint64_t p, int weight);

PrimeEigenvalueTable delta_prime_table(std::uint64_t P, std::uint64_t series_limit = kDefaultSeriesLimit);

// a_p = p + 1 - #E(F_p) for y^2 = x^3 - x by counting points. p must be an odd prime.
std::int64_t cm_ap(std::uint64_t p);

// Same value through p = a^2 + b^2 (a odd, a + b = 1 mod 4), a_p = 2a.
std::int64_t cm_ap_gaussian(std::uint64_t p);

PrimeEigenvalueTable cm_prime_table(std::uint64_t P);

// lambda_p = 2u with (u, v) uniform in the unit disc, i.e. semicircle distributed.
PrimeEigenvalueTable satotate_sample(std::uint64_t seed, std::uint64_t P);

struct DensitySchedule {
  enum class Kind { None, ThreeMod4, All, Random };
  Kind kind = Kind::None;
  double rho = 0.0;
  std::uint64_t seed = 0;

  bool zeroes(std::uint64_t p) const;
  std::string name() const;
  // "none", "3mod4", "all", "random:<rho>"
  static DensitySchedule parse(std::string_view text, std::uint64_t seed);
};

PrimeEigenvalueTable vanishing_model(const PrimeEigenvalueTable& base, const DensitySchedule& schedule);

// random:<vanishing_density> keyed by the form's seed.
DensitySchedule schedule_for(const FormSpec& form);

// Table for a form spec. VanishingModel uses satotate_sample(seed) as its base
// and the given schedule, or schedule_for(form) when none is given.
PrimeEigenvalueTable build_table(const FormSpec& form, std::uint64_t P,
                                 const std::optional<DensitySchedule>& schedule = std::nullopt);

}  // namespace hsgn
