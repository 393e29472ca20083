#include "hsgn/coeffs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "hsgn/error.hpp"
#include "hsgn/philox.hpp"
#include "hsgn/primes.hpp"

namespace hsgn {

std::string_view form_kind_name(FormKind kind) {
  switch (kind) {
    case FormKind::Delta:
      return "delta";
    case FormKind::CMCurve:
      return "cm";
    case FormKind::SatoTateSynthetic:
      return "satotate";
    case FormKind::VanishingModel:
      return "vanishing";
  }
  return "unknown";
}

void FormSpec::validate() const {
  if (kind == FormKind::Delta && weight != 12) throw DomainError("Delta has weight 12");
  if (kind == FormKind::CMCurve && weight != 2) throw DomainError("the CM curve form has weight 2");
  if (!(vanishing_density >= 0.0 && vanishing_density <= 1.0)) {
    throw DomainError("vanishing_density must lie in [0, 1]");
  }
}

std::optional<std::size_t> PrimeEigenvalueTable::index_of(std::uint64_t p) const {
  auto it = std::lower_bound(primes.begin(), primes.end(), p);
  if (it == primes.end() || *it != p) return std::nullopt;
  return static_cast<std::size_t>(it - primes.begin());
}

double PrimeEigenvalueTable::lambda_at(std::uint64_t p) const {
  if (p > limit) {
    throw std::out_of_range("prime " + std::to_string(p) + " beyond table limit " + std::to_string(limit));
  }
  const auto i = index_of(p);
  if (!i) throw std::out_of_range(std::to_string(p) + " is not a prime in the table");
  return lambda[*i];
}

bool PrimeEigenvalueTable::is_bad(std::uint64_t p) const {
  return std::find(bad_primes.begin(), bad_primes.end(), p) != bad_primes.end();
}

bool PrimeEigenvalueTable::vanishes_at(std::size_t i) const {
  if (exact_provenance()) return zero_period[i] == 2;
  return std::fabs(lambda[i]) < kSyntheticZeroThreshold;
}

std::uint8_t zero_period_for(const BigInt& a, std::uint64_t p, int weight) {
  if (sgn(a) == 0) return 2;
  BigInt q;
  mpz_ui_pow_ui(q.get_mpz_t(), p, static_cast<unsigned long>(weight - 1));
  const BigInt a2 = a * a;
  if (a2 == q) return 3;
  if (a2 == 2 * q) return 4;
  if (a2 == 3 * q) return 6;
  return 0;
}

namespace {

void check_deligne(const PrimeEigenvalueTable& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(std::fabs(t.lambda[i]) <= 2.0)) {
      throw std::logic_error("|lambda(" + std::to_string(t.primes[i]) + ")| > 2 in " +
                             std::string(form_kind_name(t.kind)) + " table");
    }
  }
}

void fill_zero_periods(PrimeEigenvalueTable& t) {
  t.zero_period.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) t.zero_period[i] = zero_period_for(t.exact[i], t.primes[i], t.weight);
}

}  // namespace

PrimeEigenvalueTable delta_prime_table(std::uint64_t P, std::uint64_t series_limit) {
  if (P < 2) throw DomainError("delta_prime_table needs P >= 2");
  auto tp = tau_at_primes(P, series_limit);
  PrimeEigenvalueTable t;
  t.kind = FormKind::Delta;
  t.weight = 12;
  t.limit = P;
  t.primes = std::move(tp.primes);
  t.exact = std::move(tp.tau);
  t.lambda.resize(t.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(t.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    t.lambda[k] = normalize_coefficient(t.exact[k], t.primes[k], 12);
  }
  fill_zero_periods(t);
  check_deligne(t);
  return t;
}

std::int64_t cm_ap(std::uint64_t p) {
  if (p == 2) throw DomainError("p = 2 is a bad prime for y^2 = x^3 - x (conductor 32)");
  if (p < 2 || !is_prime(p)) throw DomainError("cm_ap needs an odd prime, got " + std::to_string(p));
  std::vector<std::int8_t> chi(p, -1);
  chi[0] = 0;
  for (std::uint64_t x = 1; x <= p / 2; ++x) chi[x * x % p] = 1;
  std::int64_t points = 1;  // point at infinity
  for (std::uint64_t x = 0; x < p; ++x) {
    const std::uint64_t f = (mulmod64(mulmod64(x, x, p), x, p) + p - x) % p;
    points += 1 + chi[f];
  }
  return static_cast<std::int64_t>(p) + 1 - points;
}

std::int64_t cm_ap_gaussian(std::uint64_t p) {
  if (p == 2) throw DomainError("p = 2 is a bad prime for y^2 = x^3 - x (conductor 32)");
  if (p % 4 == 3) return 0;
  // r^2 = -1 mod p from a quadratic non-residue, then Cornacchia's descent.
  std::uint64_t r = 0;
  for (std::uint64_t c = 2;; ++c) {
    if (powmod64(c, (p - 1) / 2, p) == p - 1) {
      r = powmod64(c, (p - 1) / 4, p);
      break;
    }
  }
  std::uint64_t x = p, yv = r;
  const std::uint64_t bound = isqrt(p);
  while (yv > bound) {
    const std::uint64_t t = x % yv;
    x = yv;
    yv = t;
  }
  std::int64_t a = static_cast<std::int64_t>(yv);
  std::int64_t b = static_cast<std::int64_t>(isqrt(p - yv * yv));
  if (a % 2 == 0) std::swap(a, b);
  if (((a + b) % 4 + 4) % 4 != 1) a = -a;
  return 2 * a;
}

PrimeEigenvalueTable cm_prime_table(std::uint64_t P) {
  if (P < 2) throw DomainError("cm_prime_table needs P >= 2");
  PrimeEigenvalueTable t;
  t.kind = FormKind::CMCurve;
  t.weight = 2;
  t.limit = P;
  t.primes = primes_up_to(P);
  t.bad_primes = {2};
  const std::size_t n = t.size();
  std::vector<std::int64_t> ap(n, 0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto p = t.primes[static_cast<std::size_t>(i)];
    ap[static_cast<std::size_t>(i)] = p == 2 ? 0 : cm_ap_gaussian(p);
  }
  t.exact.resize(n);
  t.lambda.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.exact[i] = static_cast<long>(ap[i]);
    t.lambda[i] = normalize_coefficient(t.exact[i], t.primes[i], 2);
  }
  fill_zero_periods(t);
  check_deligne(t);
  return t;
}

PrimeEigenvalueTable satotate_sample(std::uint64_t seed, std::uint64_t P) {
  if (P < 2) throw DomainError("satotate_sample needs P >= 2");
  PrimeEigenvalueTable t;
  t.kind = FormKind::SatoTateSynthetic;
  t.weight = 0;
  t.limit = P;
  t.primes = primes_up_to(P);
  t.lambda.resize(t.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(t.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    PhiloxStream rng(seed, kStreamSatoTate, t.primes[k]);
    double u, v;
    do {
      u = 2.0 * rng.next_unit() - 1.0;
      v = 2.0 * rng.next_unit() - 1.0;
    } while (u * u + v * v >= 1.0);
    t.lambda[k] = 2.0 * u;
  }
  return t;
}

bool DensitySchedule::zeroes(std::uint64_t p) const {
  switch (kind) {
    case Kind::None:
      return false;
    case Kind::ThreeMod4:
      return p % 4 == 3;
    case Kind::All:
      return true;
    case Kind::Random:
      return PhiloxStream(seed, kStreamVanishing, p).next_unit() < rho;
  }
  return false;
}

std::string DensitySchedule::name() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::ThreeMod4:
      return "3mod4";
    case Kind::All:
      return "all";
    case Kind::Random: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, rho);
      return "random:" + std::string(buf, res.ptr);
    }
  }
  return "none";
}

DensitySchedule DensitySchedule::parse(std::string_view text, std::uint64_t seed) {
  DensitySchedule s;
  s.seed = seed;
  if (text == "none") return s;
  if (text == "3mod4") {
    s.kind = Kind::ThreeMod4;
    return s;
  }
  if (text == "all") {
    s.kind = Kind::All;
    return s;
  }
  if (text.substr(0, 7) == "random:") {
    const auto num = text.substr(7);
    double rho = -1;
    auto res = std::from_chars(num.data(), num.data() + num.size(), rho);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size() || !(rho >= 0 && rho <= 1)) {
      throw DomainError("bad random schedule density: " + std::string(num));
    }
    s.kind = Kind::Random;
    s.rho = rho;
    return s;
  }
  throw DomainError("unknown vanishing schedule '" + std::string(text) + "' (none, 3mod4, all, random:<rho>)");
}

PrimeEigenvalueTable vanishing_model(const PrimeEigenvalueTable& base, const DensitySchedule& schedule) {
  PrimeEigenvalueTable t = base;
  t.kind = FormKind::VanishingModel;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!schedule.zeroes(t.primes[i])) continue;
    t.lambda[i] = 0.0;
    if (!t.exact.empty()) t.exact[i] = 0;
    if (t.exact_provenance()) t.zero_period[i] = 2;
  }
  return t;
}

DensitySchedule schedule_for(const FormSpec& form) {
  DensitySchedule s;
  s.kind = DensitySchedule::Kind::Random;
  s.rho = form.vanishing_density;
  s.seed = form.seed;
  return s;
}

PrimeEigenvalueTable build_table(const FormSpec& form, std::uint64_t P, const std::optional<DensitySchedule>& schedule) {
  form.validate();
  switch (form.kind) {
    case FormKind::Delta:
      return delta_prime_table(P);
    case FormKind::CMCurve:
      return cm_prime_table(P);
    case FormKind::SatoTateSynthetic:
      return satotate_sample(form.seed, P);
    case FormKind::VanishingModel:
      return vanishing_model(satotate_sample(form.seed, P), schedule ? *schedule : schedule_for(form));
  }
  throw DomainError("unknown form kind");
}

}  // namespace hsgn
