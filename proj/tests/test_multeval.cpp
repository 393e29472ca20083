#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "hsgn/coeffs.hpp"
#include "hsgn/error.hpp"
#include "hsgn/multeval.hpp"
#include "oracles.hpp"

using namespace hsgn;

namespace {

std::shared_ptr<const PrimeEigenvalueTable> shared(PrimeEigenvalueTable t) {
  return std::make_shared<const PrimeEigenvalueTable>(std::move(t));
}

void check_against_oracle(const MultiplicativeSpec& spec, const PrimeEigenvalueTable& table, std::uint64_t lo,
                          std::uint64_t hi) {
  const auto w = evaluate_window(spec, lo, hi);
  REQUIRE(w.size() == hi - lo);
  auto lp = [&](std::uint64_t p) { return table.lambda_at(p); };
  for (std::uint64_t n = lo; n < hi; ++n) {
    bool bad = false;
    for (auto [p, e] : oracle::factor(n)) bad |= table.is_bad(p) && e > 0;
    if (bad) continue;  // bad primes follow lambda(p)^nu, checked separately
    const double ref = oracle::hecke(n, lp);
    CHECK(w.value(n) == doctest::Approx(ref).epsilon(1e-9).scale(1.0));
  }
}

}  // namespace

TEST_CASE("spf table matches trial division") {
  const auto spf = spf_table(200'000);
  for (std::uint64_t n = 2; n <= 200'000; ++n) CHECK(spf[n] == oracle::smallest_prime_factor(n));
}

TEST_CASE("window factorizer covers every n") {
  WindowFactorizer f(1'000'100);
  f.factor(1'000'000, 1'000'100);
  for (std::uint64_t n = 1'000'000; n < 1'000'100; ++n) {
    std::uint64_t prod = 1;
    for (unsigned i = 0; i < f.count(n); ++i) {
      const auto& fac = f.factors(n)[i];
      for (unsigned e = 0; e < fac.nu; ++e) prod *= fac.p;
    }
    CHECK(prod == n);
  }
}

TEST_CASE("Delta windows agree with the Hecke oracle on both routes") {
  auto table = shared(delta_prime_table(300'000));
  const auto spec = hecke_extend(table);
  check_against_oracle(spec, *table, 1, 20'000);
  check_against_oracle(spec, *table, 250'000, 260'000);
  const auto a = evaluate_window(spec, 100'000, 140'000);
  const auto b = reference::evaluate_window(spec, 100'000, 140'000);
  const auto c = evaluate_window_segmented(spec, 100'000, 140'000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12).scale(1.0));
    CHECK(a.values[i] == c.values[i]);
    CHECK(a.signs[i] == b.signs[i]);
  }
  // Hecke relation and multiplicativity on the window
  const auto w = evaluate_window(spec, 1, 10'001);
  CHECK(w.value(4) == doctest::Approx(w.value(2) * w.value(2) - 1).epsilon(1e-12));
  for (std::uint64_t m = 1; m <= 100; ++m) {
    for (std::uint64_t n = 1; n <= 100; ++n) {
      if (std::gcd(m, n) == 1) CHECK(w.value(m * n) == doctest::Approx(w.value(m) * w.value(n)).epsilon(1e-10));
    }
  }
  for (auto s : w.signs) CHECK(s != 0);
}

TEST_CASE("CM windows: exact zeros and the bad prime") {
  auto table = shared(cm_prime_table(100'000));
  const auto spec = hecke_extend(table);
  check_against_oracle(spec, *table, 1, 30'000);
  const auto w = evaluate_window(spec, 1, 30'001);
  for (std::uint64_t n = 2; n <= 30'000; n += 2) CHECK(w.value(n) == 0.0);
  for (std::uint64_t p : {3ULL, 7ULL, 11ULL, 19ULL}) {
    CHECK(w.value(p) == 0.0);
    CHECK(w.value(p * p) != 0.0);  // lambda(p^2) = -1
    CHECK(w.value(p * p * p) == 0.0);
  }
  CHECK(w.sign(1) == 1);
}

TEST_CASE("synthetic and vanishing windows") {
  auto base = satotate_sample(11, 50'000);
  auto table = shared(vanishing_model(base, DensitySchedule::parse("3mod4", 0)));
  const auto spec = hecke_extend(table);
  CHECK(spec.zero_threshold == kSyntheticZeroThreshold);
  check_against_oracle(spec, *table, 1, 20'000);
  check_against_oracle(spec, *table, 30'000, 50'000);
}

TEST_CASE("window results do not depend on the thread count") {
  auto table = shared(delta_prime_table(200'000));
  const auto spec = hecke_extend(table);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = evaluate_window(spec, 1, 200'001);
  const auto c = evaluate_window(spec, 100'000, 200'001);
  omp_set_num_threads(4);
  const auto b = evaluate_window(spec, 1, 200'001);
  const auto d = evaluate_window(spec, 100'000, 200'001);
  omp_set_num_threads(saved);
  CHECK(a.values == b.values);
  CHECK(c.values == d.values);
}

TEST_CASE("capacity and domain errors") {
  auto table = shared(delta_prime_table(1000));
  const auto spec = hecke_extend(table);
  CHECK_THROWS_AS(evaluate_window(spec, 1, 1002), CapacityError);
  CHECK_THROWS_AS(spec(1009, 1), std::out_of_range);
  CHECK_THROWS_AS(spec(4, 1), std::out_of_range);
  CHECK_THROWS_AS(halasz_bound(constant_spec(1.5), 100), DomainError);
}

TEST_CASE("simple specs") {
  const auto one = evaluate_window(constant_spec(1.0), 1, 1001);
  for (double v : one.values) CHECK(v == 1.0);
  const auto mu2 = evaluate_window(mu_squared_spec(), 1, 1001);
  for (std::uint64_t n = 1; n <= 1000; ++n) CHECK(mu2.value(n) == (oracle::Sieve::mu(n) != 0 ? 1.0 : 0.0));
  auto table = shared(delta_prime_table(1000));
  const auto s = evaluate_window(sign_spec(hecke_extend(table)), 1, 1001);
  const auto l = evaluate_window(hecke_extend(table), 1, 1001);
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 997ULL}) CHECK(s.value(p) == (l.value(p) > 0 ? 1.0 : -1.0));
}

TEST_CASE("Euler product of mu^2 tends to 1/zeta(2)") {
  const auto e = euler_product_M(mu_squared_spec(), 1'000'000);
  CHECK(e.M == doctest::Approx(6 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-6));
  const auto one = euler_product_M(constant_spec(1.0), 1000);
  CHECK(one.M == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Halasz bound") {
  CHECK(halasz_bound(constant_spec(1.0), 1000) == doctest::Approx(1000.0));
  const double b = halasz_bound(constant_spec(-1.0), 100'000);
  double s = 0;
  for (std::uint64_t p = 2; p <= 100'000; ++p) {
    if (oracle::is_prime(p)) s += 2.0 / static_cast<double>(p);
  }
  CHECK(b == doctest::Approx(100'000 * std::exp(-s / 4)).epsilon(1e-9));
}

TEST_CASE("density of nonzero values") {
  const auto t = cm_prime_table(10'000);
  const auto d = density_nonzero(t, 10'000);
  double lower = 1, k = 1;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.lambda[i] != 0) continue;
    const double p = static_cast<double>(t.primes[i]);
    lower *= 1 - 1 / p;
    k *= 1 + 1 / p;
  }
  CHECK(d.lower_product == doctest::Approx(lower).epsilon(1e-12));
  CHECK(d.k == doctest::Approx(k).epsilon(1e-12));
  CHECK(d.upper_product == doctest::Approx(1 / k).epsilon(1e-12));
  const auto none = density_nonzero(delta_prime_table(1000), 1000);
  CHECK(none.k == 1.0);
}
