#include <doctest.h>
#include <mpfr.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <unistd.h>

#include "hsgn/cache.hpp"
#include "hsgn/coeffs.hpp"
#include "hsgn/error.hpp"
#include "hsgn/ntt.hpp"
#include "hsgn/philox.hpp"
#include "hsgn/primes.hpp"
#include "hsgn/tau.hpp"
#include "oracles.hpp"

using namespace hsgn;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hsgn-test-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir / name;
}

// a / p^((k-1)/2) at 256 bits, rounded once to double.
double normalize_mpfr(const BigInt& a, std::uint64_t p, int k) {
  mpfr_t x, d;
  mpfr_inits2(256, x, d, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_z(x, a.get_mpz_t(), MPFR_RNDN);
  mpfr_set_ui(d, static_cast<unsigned long>(p), MPFR_RNDN);
  mpfr_rec_sqrt(d, d, MPFR_RNDN);
  mpfr_pow_ui(d, d, static_cast<unsigned long>(k - 1), MPFR_RNDN);
  mpfr_mul(x, x, d, MPFR_RNDN);
  const double r = mpfr_get_d(x, MPFR_RNDN);
  mpfr_clears(x, d, static_cast<mpfr_ptr>(nullptr));
  return r;
}

}  // namespace

TEST_CASE("philox4x64-10 known-answer vectors") {
  using C = Philox4x64::Counter;
  CHECK(Philox4x64::block({0, 0, 0, 0}, {0, 0}) ==
        C{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL});
  CHECK(Philox4x64::block({~0ULL, ~0ULL, ~0ULL, ~0ULL}, {~0ULL, ~0ULL}) ==
        C{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL, 0xa09caebf594f0ba0ULL});
  CHECK(Philox4x64::block({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                          {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
        C{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("philox streams are positional and independent") {
  PhiloxStream a(7, 1, 101), b(7, 1, 101), c(7, 2, 101);
  for (int i = 0; i < 10; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  CHECK(to_unit(~0ULL) < 1.0);
  CHECK(to_unit(0) == 0.0);
}

TEST_CASE("primes and factorization") {
  const auto ps = primes_up_to(10'000);
  std::size_t k = 0;
  for (std::uint64_t n = 0; n <= 10'000; ++n) {
    const bool prime = oracle::is_prime(n);
    CHECK(is_prime(n) == prime);
    if (prime) {
      REQUIRE(k < ps.size());
      CHECK(ps[k++] == n);
    }
  }
  CHECK(k == ps.size());
  CHECK(is_prime(1'000'000'007ULL));
  CHECK(!is_prime(1'000'000'007ULL * 3));
  CHECK(is_prime(18446744073709551557ULL));
  for (std::uint64_t n : {1ULL, 2ULL, 360ULL, 999'983ULL * 2ULL, 600'851'475'143ULL}) {
    CHECK(factorize(n) == oracle::factor(n));
  }
  CHECK(isqrt(0) == 0);
  CHECK(isqrt(99) == 9);
  CHECK(isqrt(~0ULL) == 4294967295ULL);
}

TEST_CASE("NTT round trip and convolution") {
  for (auto prime : ntt::kPrimes) {
    ntt::Transform t(prime, 10);
    std::vector<std::uint32_t> a(1024), b(1024), direct(1024, 0);
    for (std::size_t i = 0; i < 300; ++i) {
      a[i] = static_cast<std::uint32_t>((i * 7919 + 3) % prime);
      b[i] = static_cast<std::uint32_t>((i * i + 11) % prime);
    }
    for (std::size_t i = 0; i < 300; ++i) {
      for (std::size_t j = 0; j < 300; ++j) {
        direct[i + j] = static_cast<std::uint32_t>(
            (direct[i + j] + static_cast<std::uint64_t>(a[i]) * b[j]) % prime);
      }
    }
    auto fa = a, fb = b;
    t.forward(fa);
    t.forward(fb);
    t.pointwise(fa, fb, t.field().inverse(1024));
    t.inverse(fa);
    CHECK(fa == direct);
  }
}

TEST_CASE("tau anchors from the convolution oracle") {
  const auto oracle_tau = oracle::tau_schoolbook(400);
  const auto tau = tau_series(399);
  CHECK(oracle_tau[1] == 1);
  CHECK(oracle_tau[2] == -24);
  CHECK(oracle_tau[3] == 252);
  CHECK(oracle_tau[4] == -1472);
  CHECK(oracle_tau[5] == 4830);
  for (std::size_t n = 1; n <= 399; ++n) CHECK(tau[n - 1] == oracle_tau[n]);
  const auto t128 = tau_series_i128(399);
  for (std::size_t n = 1; n <= 399; ++n) CHECK(mpz_class(static_cast<long>(t128[n - 1])) == oracle_tau[n]);
}

TEST_CASE("tau congruence mod 691 and Hecke relations") {
  const std::size_t N = 5000;
  const auto tau = tau_series(N);
  auto t = [&](std::uint64_t n) -> const mpz_class& { return tau[n - 1]; };
  for (std::uint64_t n = 1; n <= N; ++n) {
    mpz_class r = t(n) % 691;
    if (r < 0) r += 691;
    CHECK(r.get_ui() == oracle::sigma_mod(n, 11, 691));
  }
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL, 41ULL, 43ULL,
                          47ULL, 53ULL, 59ULL, 61ULL, 67ULL, 70ULL}) {
    if (!oracle::is_prime(p)) continue;
    mpz_class p11;
    mpz_ui_pow_ui(p11.get_mpz_t(), p, 11);
    CHECK(t(p * p) == t(p) * t(p) - p11);
  }
  for (std::uint64_t m = 1; m <= 70; ++m) {
    for (std::uint64_t n = 1; n <= 70; ++n) {
      if (std::gcd(m, n) == 1) CHECK(t(m * n) == t(m) * t(n));
    }
  }
}

TEST_CASE("tau at primes agrees with the full series") {
  const auto full = tau_series(60'000);
  const auto at = tau_at_primes(60'000);
  REQUIRE(at.primes == primes_up_to(60'000));
  for (std::size_t i = 0; i < at.primes.size(); ++i) CHECK(at.tau[i] == full[at.primes[i] - 1]);
  CHECK_THROWS_AS(tau_at_primes(1000, 500), CapacityError);
}

TEST_CASE("normalization agrees with MPFR to 1 ulp") {
  const auto at = tau_at_primes(20'000);
  for (std::size_t i = 0; i < at.primes.size(); i += 37) {
    const double mine = normalize_coefficient(at.tau[i], at.primes[i], 12);
    const double ref = normalize_mpfr(at.tau[i], at.primes[i], 12);
    CHECK(std::fabs(mine - ref) <= std::nextafter(std::fabs(ref), INFINITY) - std::fabs(ref));
  }
  CHECK(normalize_coefficient(-24, 2, 12) == doctest::Approx(-24 / std::pow(2.0, 5.5)).epsilon(1e-15));
}

TEST_CASE("Delta prime table obeys the Deligne bound") {
  const auto t = delta_prime_table(100'000);
  CHECK(t.kind == FormKind::Delta);
  CHECK(t.limit == 100'000);
  CHECK(t.primes == primes_up_to(100'000));
  REQUIRE(t.exact.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::fabs(t.lambda[i]) <= 2.0);
    CHECK(t.zero_period[i] == 0);
  }
  CHECK(t.lambda_at(2) == doctest::Approx(-24 / std::pow(2.0, 5.5)));
  CHECK_THROWS_AS(t.lambda_at(4), std::out_of_range);
  CHECK_THROWS_AS(t.lambda_at(100'003), std::out_of_range);
}

TEST_CASE("CM curve traces: point counts, Gaussian route, supersingular primes") {
  for (std::uint64_t p = 3; p < 400; ++p) {
    if (!oracle::is_prime(p)) continue;
    const auto brute = oracle::cm_ap_bruteforce(static_cast<std::int64_t>(p));
    CHECK(cm_ap(p) == brute);
    CHECK(cm_ap_gaussian(p) == brute);
  }
  for (auto p : primes_up_to(200'000)) {
    if (p == 2) continue;
    const auto a = cm_ap_gaussian(p);
    if (p % 4 == 3) CHECK(a == 0);
    if (p % 4 == 1) {
      CHECK(a != 0);
      CHECK(a * a <= static_cast<std::int64_t>(4 * p));
      CHECK(a % 2 == 0);
    }
    if (p < 20'000) CHECK(cm_ap(p) == a);
  }
  CHECK_THROWS_AS(cm_ap(2), DomainError);
  const auto t = cm_prime_table(1000);
  CHECK(t.is_bad(2));
  CHECK(t.lambda_at(2) == 0.0);
  CHECK(t.lambda_at(3) == 0.0);
  CHECK(t.lambda_at(5) == doctest::Approx(static_cast<double>(cm_ap_gaussian(5)) / std::sqrt(5.0)));
}

TEST_CASE("zero periods match the integer recurrence") {
  // A(p^{nu+1}) = a A(p^nu) - p^{k-1} A(p^{nu-1}); zero iff the period divides nu + 1.
  struct Case {
    long a;
    std::uint64_t p;
    int k;
    unsigned period;
  };
  for (auto c : {Case{0, 7, 2, 2}, Case{3, 3, 2, 6}, Case{-3, 3, 2, 6}, Case{2, 2, 2, 4}, Case{5, 5, 3, 3},
                 Case{1, 5, 2, 0}, Case{4, 5, 2, 0}, Case{-24, 2, 12, 0}}) {
    CHECK(zero_period_for(BigInt(c.a), c.p, c.k) == c.period);
    mpz_class pk;
    mpz_ui_pow_ui(pk.get_mpz_t(), c.p, static_cast<unsigned long>(c.k - 1));
    mpz_class prev = 1, cur = c.a;
    for (unsigned nu = 1; nu <= 30; ++nu) {
      const bool zero = cur == 0;
      CHECK(zero == (c.period != 0 && (nu + 1) % c.period == 0));
      mpz_class next = c.a * cur - pk * prev;
      prev = cur;
      cur = next;
    }
  }
}

TEST_CASE("Sato-Tate model: deterministic, bounded, semicircle moments") {
  const auto a = satotate_sample(42, 1'000'000);
  const auto b = satotate_sample(42, 1'000'000);
  const auto c = satotate_sample(43, 1'000'000);
  CHECK(a.lambda == b.lambda);
  CHECK(a.lambda != c.lambda);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double v : a.lambda) {
    CHECK(std::fabs(v) <= 2.0);
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  const double n = static_cast<double>(a.size());
  CHECK(std::fabs(m1 / n) < 0.02);
  CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m4 / n == doctest::Approx(2.0).epsilon(0.03));
  // a prefix is a prefix: the value at p does not depend on P
  const auto small = satotate_sample(42, 1000);
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(small.lambda[i] == a.lambda[i]);
}

TEST_CASE("vanishing schedules") {
  const auto base = satotate_sample(5, 100'000);
  CHECK(DensitySchedule::parse("none", 1).name() == "none");
  CHECK(DensitySchedule::parse("3mod4", 1).name() == "3mod4");
  CHECK_THROWS_AS(DensitySchedule::parse("random:1.5", 1), DomainError);
  CHECK_THROWS_AS(DensitySchedule::parse("bogus", 1), DomainError);

  const auto none = vanishing_model(base, DensitySchedule::parse("none", 1));
  for (std::size_t i = 0; i < none.size(); ++i) CHECK(!none.vanishes_at(i));

  const auto m34 = vanishing_model(base, DensitySchedule::parse("3mod4", 1));
  for (std::size_t i = 0; i < m34.size(); ++i) CHECK(m34.vanishes_at(i) == (m34.primes[i] % 4 == 3));

  const auto all = vanishing_model(base, DensitySchedule::parse("all", 1));
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all.lambda[i] == 0.0);

  const auto half = vanishing_model(base, DensitySchedule::parse("random:0.5", 9));
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < half.size(); ++i) zeros += half.vanishes_at(i);
  CHECK(static_cast<double>(zeros) / static_cast<double>(half.size()) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("cache round trip and integrity") {
  const auto path = scratch("delta.hsgn");
  const auto t = delta_prime_table(100'000);
  write_table(path, t);
  CHECK(cache_valid(path));
  const auto r = read_table(path);
  CHECK(r.primes == t.primes);
  CHECK(r.lambda == t.lambda);
  CHECK(r.exact == t.exact);
  CHECK(r.zero_period == t.zero_period);
  CHECK(r.lambda_at(2) == -24 / std::pow(2.0, 5.5));
  const auto lean = read_table(path, false);
  CHECK(lean.exact.empty());
  CHECK(lean.exact_provenance());

  const auto cm_path = scratch("cm.hsgn");
  write_table(cm_path, cm_prime_table(5000));
  const auto cm = read_table(cm_path);
  CHECK(cm.is_bad(2));
  CHECK(cm.vanishes_at(*cm.index_of(3)));

  const auto st_path = scratch("st.hsgn");
  const auto st = satotate_sample(3, 5000);
  write_table(st_path, st);
  const auto st2 = read_table(st_path);
  CHECK(st2.lambda == st.lambda);
  CHECK(!st2.exact_provenance());

  const auto size = std::filesystem::file_size(path);
  SUBCASE("truncated") {
    std::filesystem::resize_file(path, size / 2);
    CHECK(!cache_valid(path));
    CHECK_THROWS_AS(read_table(path), FormatError);
  }
  SUBCASE("bit flip") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(size / 3));
    char ch = 0;
    f.get(ch);
    f.seekp(static_cast<std::streamoff>(size / 3));
    f.put(static_cast<char>(ch ^ 0x10));
    f.close();
    CHECK_THROWS_AS(read_table(path), FormatError);
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(read_table(path), FormatError);
  }
  SUBCASE("missing") { CHECK_THROWS_AS(read_table(scratch("absent.hsgn")), FormatError); }

  CHECK(cache_file_name(FormSpec::delta(), 1'000'000) == "delta-w12-P1000000.hsgn");
  CHECK(cache_file_name(FormSpec::satotate(42), 100'000) != cache_file_name(FormSpec::satotate(43), 100'000));
}

TEST_CASE("build_table dispatch") {
  CHECK(build_table(FormSpec::delta(), 1000).kind == FormKind::Delta);
  CHECK(build_table(FormSpec::cm_curve(), 1000).kind == FormKind::CMCurve);
  const auto v = build_table(FormSpec::vanishing(3, 1.0), 1000);
  for (double l : v.lambda) CHECK(l == 0.0);
  CHECK_THROWS_AS(FormSpec::vanishing(3, 2.0).validate(), DomainError);
  FormSpec bad = FormSpec::delta();
  bad.weight = 10;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
