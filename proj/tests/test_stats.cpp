#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <numbers>

#include "hsgn/coeffs.hpp"
#include "hsgn/error.hpp"
#include "hsgn/philox.hpp"
#include "hsgn/stats.hpp"
#include "oracles.hpp"

using namespace hsgn;

namespace {

std::shared_ptr<const PrimeEigenvalueTable> shared(PrimeEigenvalueTable t) {
  return std::make_shared<const PrimeEigenvalueTable>(std::move(t));
}

CoefficientWindow from_signs(const std::vector<std::int8_t>& s) {
  CoefficientWindow w;
  w.lo = 1;
  w.hi = 1 + s.size();
  w.signs = s;
  w.values.assign(s.begin(), s.end());
  return w;
}

struct DeltaFixture {
  std::shared_ptr<const PrimeEigenvalueTable> table = shared(delta_prime_table(500'000));
  MultiplicativeSpec spec = hecke_extend(table);
};

}  // namespace

TEST_CASE("sign changes skip zeros") {
  CHECK(sign_changes(std::vector<std::int8_t>{1, 0, 1, -1}) == 1);
  CHECK(sign_changes(std::vector<std::int8_t>{1, 1, 1, 1}) == 0);
  CHECK(sign_changes(std::vector<std::int8_t>{0, 0, 0}) == 0);
  CHECK(sign_changes(std::vector<std::int8_t>{-1, 0, 0, 1, 0, -1}) == 2);
  CHECK(sign_changes(std::vector<std::int8_t>{}) == 0);
}

TEST_CASE("sign changes: chunked count equals explicit subsequence construction") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    PhiloxStream rng(seed, 99, 0);
    std::vector<std::int8_t> s(1'000'000);
    for (auto& v : s) v = static_cast<std::int8_t>(static_cast<int>(rng.next_u64() % 3) - 1);
    // oracle: materialize the zero-free subsequence and count
    std::vector<std::int8_t> nz;
    for (auto v : s) {
      if (v) nz.push_back(v);
    }
    std::uint64_t brute = 0;
    for (std::size_t i = 1; i < nz.size(); ++i) brute += nz[i] != nz[i - 1];
    CHECK(sign_changes(s) == brute);
    CHECK(reference::sign_changes(s) == brute);
  }
  DeltaFixture f;
  const auto w = evaluate_window(f.spec, 1, 500'001);
  CHECK(sign_changes(w) == reference::sign_changes(w.signs));
}

TEST_CASE("sign counts and Chowla sums") {
  const auto one = evaluate_window(constant_spec(1.0), 1, 1001);
  const auto r = sign_counts(one);
  CHECK(r.X == 1000);
  CHECK(r.n_pos == 1000);
  CHECK(r.n_neg == 0);
  CHECK(r.n_zero == 0);
  CHECK(r.chowla_sum == 999);
  CHECK(chowla_correlation(one) == 999);

  std::vector<std::int8_t> alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1 : 1;
  CHECK(chowla_correlation(from_signs(alt)) == -999);

  auto cm = shared(cm_prime_table(100'000));
  const auto w = evaluate_window(hecke_extend(cm), 1, 100'001);
  const auto s = sign_counts(w);
  CHECK(s.n_pos + s.n_neg + s.n_zero == s.X);
  CHECK(std::llabs(s.chowla_sum) <= static_cast<long long>(s.X));
  std::int64_t brute = 0;
  for (std::uint64_t n = 1; n < 100'000; ++n) brute += w.sign(n) * w.sign(n + 1);
  CHECK(s.chowla_sum == brute);
  CHECK_THROWS_AS(sign_counts(evaluate_window(constant_spec(1.0), 5, 10)), DomainError);
}

TEST_CASE("interval scan: sums, soundness, determinism") {
  DeltaFixture f;
  const auto params = SieveParams::from_X(100'000, 0.45, parse_log_gamma("0.5"));
  const auto ctx = prepare_scan(params, f.spec, *f.table, 20);
  CHECK(ctx.k_X == 1.0);
  CHECK(ctx.L == 20);
  for (std::uint64_t x : {100'000ULL, 150'000ULL, 200'000ULL}) {
    double s1 = 0, s2 = 0;
    for (std::uint64_t n = x; n <= x + 20; ++n) {
      const auto i = n - ctx.lambda.lo;
      s1 += ctx.lambda.sign(n) * ctx.weights.w[i];
      if (ctx.lambda.sign(n) != 0) s2 += ctx.weights.w_prime[i];
    }
    const auto s = scan_sums(ctx, x);
    CHECK(s.s1 == doctest::Approx(s1).epsilon(1e-12));
    CHECK(s.s2 == doctest::Approx(s2).epsilon(1e-12));
  }

  const auto full = interval_scan(ctx, 10, 0, 0, 1.0, 0.5);
  CHECK(full.exhaustive);
  CHECK(full.samples == 100'001);
  CHECK(full.soundness_failures == 0);
  CHECK(full.certified > 0);
  for (double fr : {full.frac_S1_small, full.frac_S2_large, full.frac_certified_sign_change}) {
    CHECK(fr >= 0);
    CHECK(fr <= 1);
  }
  // every certificate is backed by a visible sign change
  std::uint64_t certified = 0;
  for (std::uint64_t x = 100'000; x <= 200'000; ++x) {
    const auto s = scan_sums(ctx, x);
    if (std::fabs(s.s1) >= s.s2) continue;
    ++certified;
    bool pos = false, neg = false;
    for (std::uint64_t n = x; n <= x + ctx.L; ++n) {
      pos |= ctx.lambda.sign(n) > 0;
      neg |= ctx.lambda.sign(n) < 0;
    }
    CHECK((pos && neg));
  }
  CHECK(certified == full.certified);

  const auto a = interval_scan(ctx, 10, 2000, 77, 1.0, 0.5);
  const auto b = interval_scan(ctx, 10, 2000, 77, 1.0, 0.5);
  const auto c = interval_scan(ctx, 10, 2000, 78, 1.0, 0.5);
  CHECK(a.frac_S1_small == b.frac_S1_small);
  CHECK(a.empirical_C == b.empirical_C);
  CHECK(a.certified == b.certified);
  CHECK(a.samples == 2000);
  CHECK((a.empirical_C != c.empirical_C || a.certified != c.certified));

  // the calibrated-C rule: C = empirical_C puts at least 1 - 1/K^2 of the samples under the bound
  const auto t = interval_scan(ctx, 10, 2000, 77, a.empirical_C, 0.5);
  CHECK(t.frac_S1_small >= 0.99);
  CHECK_THROWS_AS(prepare_scan(params, f.spec, *f.table, 0.5), DomainError);
  const auto far = SieveParams::from_X(300'000, 0.45, parse_log_gamma("0.5"));
  CHECK_THROWS_AS(prepare_scan(far, f.spec, *f.table, 20), CapacityError);
}

TEST_CASE("scans with vanishing primes stretch the interval by k(X)") {
  auto cm = shared(cm_prime_table(300'000));
  const auto spec = hecke_extend(cm);
  const auto params = SieveParams::from_X(100'000, 0.3, parse_log_gamma("0.5"));
  const auto ctx = prepare_scan(params, spec, *cm, 10);
  const double k = density_nonzero(*cm, 100'000).k;
  CHECK(ctx.k_X == k);
  CHECK(ctx.L == static_cast<std::uint64_t>(std::floor(10 * k)));
  const auto r = interval_scan(ctx, 10, 0, 0, 1.0, 0.5);
  CHECK(r.soundness_failures == 0);
}

TEST_CASE("moment report") {
  DeltaFixture f;
  const auto params = SieveParams::from_X(100'000, 0.45, parse_log_gamma("0.5"));
  const auto m = moment_report(params, f.spec, *f.table);
  CHECK(m.normalizer == 100'000.0);
  CHECK(m.m1_wprime > 0);
  CHECK(m.m2_wprime >= 0);
  CHECK(m.m2_wprime <= m.m2_w * (1 + 1e-9));
  const auto ww = weights_window(params, f.spec, 100'000, 200'001);
  long double s = 0;
  for (double v : ww.w_prime) s += v;
  CHECK(m.m1_wprime == doctest::Approx(static_cast<double>(s / 100'000)).epsilon(1e-12));

  auto cm = shared(cm_prime_table(200'000));
  const auto mc = moment_report(params, hecke_extend(cm), *cm);
  CHECK(mc.normalizer == doctest::Approx(100'000 * density_nonzero(*cm, 100'000).lower_product));
  CHECK(mc.m2_wprime <= mc.m2_w * (1 + 1e-9));
}

TEST_CASE("shifted convolution against a double loop") {
  DeltaFixture f;
  const std::uint64_t X = 20'000;
  const auto w = evaluate_window(f.spec, 1, 2 * X + 1);
  struct Case {
    std::uint64_t a, b, A, B;
    std::int64_t h;
  };
  for (auto c : {Case{1, 1, 1, 1, 1}, Case{1, 1, 1, 1, 0}, Case{2, 3, 1, 1, 5}, Case{1, 2, 3, 1, -7},
                 Case{2, 1, 1, 2, 4}, Case{3, 5, 2, 1, 1}}) {
    const auto r = shifted_convolution(w, c.a, c.b, c.A, c.B, c.h, X);
    long double brute = 0;
    std::uint64_t terms = 0;
    for (std::uint64_t m = 1; c.a * c.A * m <= 2 * X; ++m) {
      const auto lhs = static_cast<std::int64_t>(c.a * c.A * m);
      if (lhs < static_cast<std::int64_t>(X)) continue;
      const std::int64_t rhs = lhs - c.h;
      if (rhs < static_cast<std::int64_t>(X) || rhs > static_cast<std::int64_t>(2 * X)) continue;
      if (rhs % static_cast<std::int64_t>(c.b * c.B)) continue;
      const auto n = static_cast<std::uint64_t>(rhs) / (c.b * c.B);
      brute += static_cast<long double>(w.value(c.A * m)) * w.value(c.B * n);
      ++terms;
    }
    CHECK(r.terms == terms);
    CHECK(r.sum == doctest::Approx(static_cast<double>(brute)).epsilon(1e-10).scale(1e-9));
  }
  const auto none = shifted_convolution(w, 2, 2, 1, 1, 3, X);
  CHECK(!none.solvable);
  CHECK(none.sum == 0.0);
  const auto diag = shifted_convolution(w, 1, 1, 1, 1, 0, X);
  CHECK(diag.sum >= 0);
  CHECK(diag.terms == X + 1);
}

TEST_CASE("variance over short intervals") {
  DeltaFixture f;
  const auto params = SieveParams::from_X(20'000, 0.3, parse_log_gamma("0.5"));
  const auto ctx = prepare_scan(params, f.spec, *f.table, 8);
  const double v = variance_short(ctx, 0.3);
  long double brute = 0;
  for (std::uint64_t x = 20'000; x <= 40'000; ++x) {
    const double s = scan_sums(ctx, x).s1;
    brute += s * s;
  }
  CHECK(v == doctest::Approx(static_cast<double>(brute / 20'000 / 8)).epsilon(1e-12));
  CHECK_THROWS_AS(variance_short(ctx, 0.1), DomainError);

  // every prime vanishes: only squares survive, and an interval holds at most one
  auto zero = shared(vanishing_model(satotate_sample(1, 100'000), DensitySchedule::parse("all", 0)));
  const auto zp = SieveParams::from_X(10'000, 0.3, parse_log_gamma("0.5"));
  const auto zctx = prepare_scan(zp, hecke_extend(zero), *zero, 2);
  long double zb = 0;
  for (std::uint64_t x = 10'000; x <= 20'000; ++x) {
    const double s = scan_sums(zctx, x).s1;
    zb += s * s;
  }
  CHECK(variance_short(zctx, 0.3) == doctest::Approx(static_cast<double>(zb / 10'000 / 2)).epsilon(1e-12));
}

TEST_CASE("prime moment checks and the minorant polynomial") {
  CHECK(minorant_polynomial(0.0) == -0.125);
  CHECK(minorant_polynomial(1.0) == doctest::Approx(0.25));
  CHECK(minorant_polynomial(2.0) == doctest::Approx(-0.125));
  const auto t = delta_prime_table(20'000);
  const auto r = prime_moment_checks(t, {1000}, {{100, 20'000}}, 10'001);
  CHECK(r.grid_violations == 0);
  CHECK(r.grid_max_slack <= 0);
  REQUIRE(r.large.size() == 1);
  long double s = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.primes[i] >= 1000 && t.primes[i] <= 2000 && std::fabs(t.lambda[i]) >= 0.5) s += std::fabs(t.lambda[i]);
  }
  CHECK(r.large[0].sum == doctest::Approx(static_cast<double>(s)));
  CHECK(r.large[0].threshold == doctest::Approx(1000 / (10 * std::log(1000.0))));
  CHECK_THROWS_AS(prime_moment_checks(t, {20'000}, {}, 0), CapacityError);
}

TEST_CASE("Sato-Tate histogram") {
  CHECK(semicircle_cdf(-2) == 0.0);
  CHECK(semicircle_cdf(2) == 1.0);
  CHECK(semicircle_cdf(0) == doctest::Approx(0.5));
  // numerical integral of the density
  double integral = 0;
  const int steps = 200'000;
  for (int i = 0; i < steps; ++i) {
    const double t = -2 + 3.0 * (i + 0.5) / steps;
    integral += std::sqrt(4 - t * t) / (2 * std::numbers::pi) * 3.0 / steps;
  }
  CHECK(semicircle_cdf(1.0) == doctest::Approx(integral).epsilon(1e-6));

  const auto t = satotate_sample(42, 1'000'000);
  const auto h = satotate_histogram(t, 1'000'000, 20);
  CHECK(h.total_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(h.max_discrepancy <= 0.01);
  CHECK(h.edges.size() == 21);
}

TEST_CASE("Serre density") {
  const auto d = delta_prime_table(10'000);
  const auto r = serre_cm_density(d, 10'000);
  CHECK(r.vanishing_sum == 0.0);
  CHECK(r.reference == doctest::Approx(0.5 * std::log(std::log(10'000.0))));
  const auto none = vanishing_model(satotate_sample(1, 10'000), DensitySchedule::parse("none", 0));
  CHECK(serre_cm_density(none, 10'000).vanishing_sum == 0.0);
  const auto cm = cm_prime_table(10'000);
  double s = 0.5;  // p = 2 is bad and vanishes
  for (std::uint64_t p = 3; p <= 10'000; ++p) {
    if (oracle::is_prime(p) && p % 4 == 3) s += 1.0 / static_cast<double>(p);
  }
  CHECK(serre_cm_density(cm, 10'000).vanishing_sum == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("cor-proof check") {
  const auto one = evaluate_window(constant_spec(1.0), 1, 2003);
  const auto r1 = cor_proof_check(one, 1000);
  CHECK(r1.found_b);
  CHECK(r1.b == 2);
  CHECK(r1.j == 1);
  CHECK(r1.disjunction_failures == 0);

  DeltaFixture f;
  const auto w = evaluate_window(f.spec, 1, 200'003);
  const auto r = cor_proof_check(w, 100'000);
  CHECK(r.g2 == -1);
  CHECK(r.found_b);
  CHECK(r.b == 4);
  CHECK(r.j == 2);
  CHECK(r.checked == 12'500);
  CHECK(r.multiplicativity_failures == 0);
  CHECK(r.disjunction_failures == 0);
  CHECK_THROWS_AS(cor_proof_check(w, 100'001), CapacityError);

  auto cm = shared(cm_prime_table(10'000));
  const auto wc = evaluate_window(hecke_extend(cm), 1, 2003);
  CHECK(cor_proof_check(wc, 1000).trivial_branch);
}

TEST_CASE("scan results do not depend on the thread count") {
  DeltaFixture f;
  const auto params = SieveParams::from_X(50'000, 0.45, parse_log_gamma("0.5"));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto c1 = prepare_scan(params, f.spec, *f.table, 10);
  const auto a = interval_scan(c1, 10, 0, 0, 1.0, 0.5);
  const double v1 = variance_short(c1, 0.3);
  omp_set_num_threads(3);
  const auto c2 = prepare_scan(params, f.spec, *f.table, 10);
  const auto b = interval_scan(c2, 10, 0, 0, 1.0, 0.5);
  const double v2 = variance_short(c2, 0.3);
  omp_set_num_threads(saved);
  CHECK(a.empirical_C == b.empirical_C);
  CHECK(a.certified == b.certified);
  CHECK(v1 == v2);
}
