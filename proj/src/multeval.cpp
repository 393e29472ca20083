#include "hsgn/multeval.hpp"

#include <algorithm>
#include <cmath>
#include <new>
#include <stdexcept>

#include "hsgn/error.hpp"
#include "hsgn/primes.hpp"

namespace hsgn {
namespace {

constexpr std::uint64_t kChunk = std::uint64_t{1} << 15;

void check_window(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi) {
  if (lo < 1 || hi <= lo) throw DomainError("window needs hi > lo >= 1");
  if (hi - 1 > spec.prime_limit) {
    throw CapacityError("window [" + std::to_string(lo) + ", " + std::to_string(hi) + ") exceeds the prime table (limit " +
                        std::to_string(spec.prime_limit) + ")");
  }
}

void fill_signs(CoefficientWindow& w) {
  w.signs.resize(w.values.size());
  for (std::size_t i = 0; i < w.values.size(); ++i) w.signs[i] = sign_of(w.values[i], w.zero_threshold);
}

CoefficientWindow evaluate_spf(const MultiplicativeSpec& spec, std::uint64_t hi) {
  const auto spf = spf_table(hi - 1);
  CoefficientWindow w;
  w.lo = 1;
  w.hi = hi;
  w.zero_threshold = spec.zero_threshold;
  w.values.assign(hi - 1, 0.0);
  w.values[0] = 1.0;
  // n/p^nu <= n/2, so each dyadic block depends only on earlier blocks.
  for (std::uint64_t start = 2; start < hi; start *= 2) {
    const std::uint64_t stop = std::min(hi, 2 * start);
#pragma omp parallel for schedule(static, 4096)
    for (std::int64_t s = static_cast<std::int64_t>(start); s < static_cast<std::int64_t>(stop); ++s) {
      const auto n = static_cast<std::uint64_t>(s);
      const std::uint32_t p = spf[n];
      std::uint64_t m = n / p;
      unsigned nu = 1;
      while (spf[m] == p) {
        m /= p;
        ++nu;
      }
      w.values[n - 1] = spec(p, nu) * w.values[m - 1];
    }
  }
  fill_signs(w);
  return w;
}

}  // namespace

std::vector<std::uint32_t> spf_table(std::uint64_t N) {
  if (N > 0xffffffffULL) throw CapacityError("spf_table supports N < 2^32 (4 bytes per entry)");
  try {
    std::vector<std::uint32_t> spf(N + 1, 0);
    std::vector<std::uint32_t> primes;
    for (std::uint64_t i = 2; i <= N; ++i) {
      if (spf[i] == 0) {
        spf[i] = static_cast<std::uint32_t>(i);
        primes.push_back(static_cast<std::uint32_t>(i));
      }
      const std::uint32_t s = spf[i];
      for (std::uint32_t p : primes) {
        if (p > s || i * p > N) break;
        spf[i * p] = p;
      }
    }
    return spf;
  } catch (const std::bad_alloc&) {
    throw CapacityError("spf_table(" + std::to_string(N) + "): allocation failed");
  }
}

MultiplicativeSpec hecke_extend(std::shared_ptr<const PrimeEigenvalueTable> table) {
  MultiplicativeSpec s;
  s.description = "hecke(" + std::string(form_kind_name(table->kind)) + ", P=" + std::to_string(table->limit) + ")";
  s.zero_threshold = table->exact_provenance() ? 0.0 : kSyntheticZeroThreshold;
  s.prime_limit = table->limit;
  s.prime_power_value = [t = std::move(table)](std::uint64_t p, unsigned nu) -> double {
    if (p > t->limit) {
      throw std::out_of_range("prime " + std::to_string(p) + " beyond table limit " + std::to_string(t->limit));
    }
    const auto idx = t->index_of(p);
    if (!idx) throw std::out_of_range(std::to_string(p) + " is not prime");
    const double lam = t->lambda[*idx];
    if (nu == 0) return 1.0;
    if (t->is_bad(p)) return std::pow(lam, static_cast<double>(nu));
    if (t->exact_provenance()) {
      const unsigned z = t->zero_period[*idx];
      if (z != 0 && (nu + 1) % z == 0) return 0.0;
    }
    double prev = 1.0, cur = lam;
    for (unsigned k = 1; k < nu; ++k) {
      const double next = lam * cur - prev;
      prev = cur;
      cur = next;
    }
    return cur;
  };
  return s;
}

MultiplicativeSpec constant_spec(double c) {
  MultiplicativeSpec s;
  s.description = "constant(" + std::to_string(c) + ")";
  s.prime_power_value = [c](std::uint64_t, unsigned) { return c; };
  return s;
}

MultiplicativeSpec mu_squared_spec() {
  MultiplicativeSpec s;
  s.description = "mu^2";
  s.prime_power_value = [](std::uint64_t, unsigned nu) { return nu == 1 ? 1.0 : 0.0; };
  return s;
}

MultiplicativeSpec sign_spec(const MultiplicativeSpec& base) {
  MultiplicativeSpec s;
  s.description = "sgn(" + base.description + ")";
  s.prime_limit = base.prime_limit;
  s.prime_power_value = [base](std::uint64_t p, unsigned nu) {
    return static_cast<double>(sign_of(base(p, nu), base.zero_threshold));
  };
  return s;
}

MultiplicativeSpec nonzero_indicator_spec(const MultiplicativeSpec& base) {
  MultiplicativeSpec s;
  s.description = "1[" + base.description + " != 0]";
  s.prime_limit = base.prime_limit;
  s.prime_power_value = [base](std::uint64_t p, unsigned nu) { return base.is_zero(base(p, nu)) ? 0.0 : 1.0; };
  return s;
}

WindowFactorizer::WindowFactorizer(std::uint64_t hi)
    : small_(std::make_shared<const std::vector<std::uint64_t>>(primes_up_to(isqrt(hi > 0 ? hi - 1 : 0)))) {}

WindowFactorizer::WindowFactorizer(std::shared_ptr<const std::vector<std::uint64_t>> small_primes)
    : small_(std::move(small_primes)) {}

void WindowFactorizer::factor(std::uint64_t a, std::uint64_t b) {
  a_ = a;
  b_ = b;
  const std::size_t n = b - a;
  rem_.resize(n);
  cnt_.assign(n, 0);
  fac_.resize(n * kMaxFactors);
  for (std::size_t j = 0; j < n; ++j) rem_[j] = a + j;
  const auto& sp = *small_;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const std::uint64_t p = sp[i];
    for (std::uint64_t m = (a + p - 1) / p * p; m < b; m += p) {
      const std::size_t j = m - a;
      std::uint64_t r = rem_[j] / p;
      std::uint32_t nu = 1;
      while (r % p == 0) {
        r /= p;
        ++nu;
      }
      rem_[j] = r;
      fac_[j * kMaxFactors + cnt_[j]++] = {p, nu, static_cast<std::uint32_t>(i)};
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (rem_[j] > 1) fac_[j * kMaxFactors + cnt_[j]++] = {rem_[j], 1, kLarge};
  }
}

CoefficientWindow evaluate_window_segmented(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi) {
  check_window(spec, lo, hi);
  CoefficientWindow w;
  w.lo = lo;
  w.hi = hi;
  w.zero_threshold = spec.zero_threshold;
  w.values.assign(hi - lo, 1.0);

  const WindowFactorizer proto(hi);
  const auto& sp = proto.small_primes();
  // lambda(p^nu) for the sieving primes, nu up to log_p(hi).
  std::vector<std::vector<double>> pv(sp.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(sp.size()); ++i) {
    const std::uint64_t p = sp[static_cast<std::size_t>(i)];
    auto& row = pv[static_cast<std::size_t>(i)];
    row.push_back(1.0);
    for (std::uint64_t q = p; q < hi; q *= p) {
      row.push_back(spec(p, static_cast<unsigned>(row.size())));
      if (q > (hi - 1) / p) break;
    }
  }

  const std::uint64_t chunks = (hi - lo + kChunk - 1) / kChunk;
#pragma omp parallel
  {
    WindowFactorizer f(proto.shared_small_primes());
#pragma omp for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
      const std::uint64_t a = lo + static_cast<std::uint64_t>(c) * kChunk;
      const std::uint64_t b = std::min(hi, a + kChunk);
      f.factor(a, b);
      for (std::uint64_t n = a; n < b; ++n) {
        const auto* fs = f.factors(n);
        double v = 1.0;
        for (unsigned k = 0; k < f.count(n); ++k) {
          v *= fs[k].small_index == WindowFactorizer::kLarge ? spec(fs[k].p, 1) : pv[fs[k].small_index][fs[k].nu];
        }
        w.values[n - lo] = v;
      }
    }
  }
  fill_signs(w);
  return w;
}

CoefficientWindow evaluate_window(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi) {
  check_window(spec, lo, hi);
  if (lo == 1 && hi - 1 <= 0xffffffffULL) return evaluate_spf(spec, hi);
  return evaluate_window_segmented(spec, lo, hi);
}

namespace reference {

CoefficientWindow evaluate_window(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi) {
  check_window(spec, lo, hi);
  CoefficientWindow w;
  w.lo = lo;
  w.hi = hi;
  w.zero_threshold = spec.zero_threshold;
  w.values.reserve(hi - lo);
  for (std::uint64_t n = lo; n < hi; ++n) {
    double v = 1.0;
    for (auto [p, nu] : factorize(n)) v *= spec(p, nu);
    w.values.push_back(v);
  }
  fill_signs(w);
  return w;
}

}  // namespace reference

double halasz_bound(const MultiplicativeSpec& g, std::uint64_t x) {
  if (x < 1) throw DomainError("halasz_bound needs x >= 1");
  if (x > g.prime_limit) throw CapacityError("halasz_bound: x beyond the spec's prime range");
  long double sum = 0;
  for (std::uint64_t p : primes_up_to(x)) {
    const double v = g(p, 1);
    if (!(v >= -1.0 && v <= 1.0)) {
      throw DomainError("halasz_bound needs g(p) in [-1, 1]; g(" + std::to_string(p) + ") = " + std::to_string(v));
    }
    sum += (1.0L - v) / static_cast<long double>(p);
  }
  return static_cast<double>(static_cast<long double>(x) * std::exp(-sum / 4));
}

EulerProduct euler_product_M(const MultiplicativeSpec& g, std::uint64_t P_trunc) {
  if (P_trunc > g.prime_limit) throw CapacityError("euler_product_M: P_trunc beyond the spec's prime range");
  // |g| <= 1, so stopping once p^nu > 1e15 drops less than 2e-15 per factor.
  constexpr long double kPowerCap = 1e15L;
  long double log_m = 0;
  for (std::uint64_t p : primes_up_to(P_trunc)) {
    const long double pl = static_cast<long double>(p);
    long double local = 1, pw = pl;
    for (unsigned nu = 1; pw <= kPowerCap; ++nu, pw *= pl) local += g(p, nu) / pw;
    log_m += std::log1p(-1.0L / pl) + std::log(local);
  }
  EulerProduct out;
  out.M = static_cast<double>(std::exp(log_m));
  if (g.prime_limit != std::numeric_limits<std::uint64_t>::max() && g.prime_limit > P_trunc) {
    long double tail = 0;
    for (std::uint64_t p : primes_up_to(g.prime_limit)) {
      if (p <= P_trunc) continue;
      tail += std::fabs(g(p, 1) - 1.0) / static_cast<long double>(p);
    }
    out.tail_log_bound = static_cast<double>(tail);
  }
  return out;
}

DensityNonzero density_nonzero(const PrimeEigenvalueTable& table, std::uint64_t X) {
  if (X > table.limit) throw CapacityError("density_nonzero: X beyond the table limit");
  long double lower = 1, upper = 1;
  for (std::size_t i = 0; i < table.size() && table.primes[i] <= X; ++i) {
    if (!table.vanishes_at(i)) continue;
    const long double p = static_cast<long double>(table.primes[i]);
    lower *= 1 - 1 / p;
    upper *= 1 + 1 / p;
  }
  return {static_cast<double>(lower), static_cast<double>(1 / upper), static_cast<double>(upper)};
}

}  // namespace hsgn
