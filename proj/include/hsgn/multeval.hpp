#pragma once

// Multiplicative extension of prime data and the mean-value quantities built on it.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hsgn/coeffs.hpp"

namespace hsgn {

struct MultiplicativeSpec {
  std::function<double(std::uint64_t p, unsigned nu)> prime_power_value;
  std::string description;
  // |value| below this counts as zero; 0 means only an exact 0.0 does.
  double zero_threshold = 0.0;
  // Largest prime the spec can be queried at.
  std::uint64_t prime_limit = std::numeric_limits<std::uint64_t>::max();

  double operator()(std::uint64_t p, unsigned nu) const { return prime_power_value(p, nu); }
  bool is_zero(double v) const { return v == 0.0 || std::abs(v) < zero_threshold; }
};

inline std::int8_t sign_of(double v, double zero_threshold) {
  if (v == 0.0 || std::abs(v) < zero_threshold) return 0;
  return v > 0 ? 1 : -1;
}

// spf[n] for 0 <= n <= N (spf[0] = spf[1] = 0), linear sieve.
std::vector<std::uint32_t> spf_table(std::uint64_t N);

// lambda(p^nu) by the Hecke recurrence from the table's lambda(p). Bad primes
// use lambda(p)^nu; integer-backed tables return an exact 0.0 where the zero
// period says lambda(p^nu) vanishes.
MultiplicativeSpec hecke_extend(std::shared_ptr<const PrimeEigenvalueTable> table);

MultiplicativeSpec constant_spec(double c);  // g(p^nu) = c
MultiplicativeSpec mu_squared_spec();        // 1 on p, 0 on higher powers
MultiplicativeSpec sign_spec(const MultiplicativeSpec& base);
MultiplicativeSpec nonzero_indicator_spec(const MultiplicativeSpec& base);

struct CoefficientWindow {
  std::uint64_t lo = 0, hi = 0;
  std::vector<double> values;
  std::vector<std::int8_t> signs;
  double zero_threshold = 0.0;

  std::size_t size() const { return values.size(); }
  double value(std::uint64_t n) const { return values[n - lo]; }
  std::int8_t sign(std::uint64_t n) const { return signs[n - lo]; }
  bool covers(std::uint64_t a, std::uint64_t b) const { return a >= lo && b <= hi; }
};

// Windows starting at 1 go through the smallest-prime-factor table; others
// through a segmented sieve that strikes prime powers p <= sqrt(hi) and reads
// the remaining cofactor prime from the spec. Parallel over fixed chunks.
CoefficientWindow evaluate_window(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi);

// Segmented route for any window (used for lo = 1 comparisons and benchmarks).
CoefficientWindow evaluate_window_segmented(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi);

namespace reference {
// Serial, trial division per n.
CoefficientWindow evaluate_window(const MultiplicativeSpec& spec, std::uint64_t lo, std::uint64_t hi);
}  // namespace reference

// x * exp(-(1/4) sum_{p <= x} (1 - g(p))/p)
double halasz_bound(const MultiplicativeSpec& g, std::uint64_t x);

struct EulerProduct {
  double M = 1.0;
  // sum_{P_trunc < p <= prime_limit} |g(p) - 1|/p when the spec has a finite prime range.
  std::optional<double> tail_log_bound;
};

// prod_{p <= P_trunc} (1 - 1/p)(1 + g(p)/p + g(p^2)/p^2 + ...)
EulerProduct euler_product_M(const MultiplicativeSpec& g, std::uint64_t P_trunc);

struct DensityNonzero {
  double lower_product = 1.0;  // prod (1 - 1/p)
  double upper_product = 1.0;  // prod (1 + 1/p)^-1
  double k = 1.0;              // prod (1 + 1/p)
};

// Products over p <= X with lambda(p) = 0.
DensityNonzero density_nonzero(const PrimeEigenvalueTable& table, std::uint64_t X);

// Factorizations of every n in [lo, hi), computed one chunk at a time.
class WindowFactorizer {
 public:
  static constexpr unsigned kMaxFactors = 15;  // omega(n) <= 15 for n < 6.1e17

  static constexpr std::uint32_t kLarge = 0xffffffffu;

  struct Factor {
    std::uint64_t p;
    std::uint32_t nu;
    std::uint32_t small_index;  // index into small_primes(), or kLarge for the cofactor prime
  };

  // Sieving primes are those <= sqrt(hi - 1).
  explicit WindowFactorizer(std::uint64_t hi);
  WindowFactorizer(std::shared_ptr<const std::vector<std::uint64_t>> small_primes);

  // Fills offsets/counts for [a, b); factors of n are factors(n) in ascending p.
  void factor(std::uint64_t a, std::uint64_t b);
  std::uint64_t begin() const { return a_; }
  std::uint64_t end() const { return b_; }
  const Factor* factors(std::uint64_t n) const { return &fac_[(n - a_) * kMaxFactors]; }
  unsigned count(std::uint64_t n) const { return cnt_[n - a_]; }
  const std::vector<std::uint64_t>& small_primes() const { return *small_; }
  std::shared_ptr<const std::vector<std::uint64_t>> shared_small_primes() const { return small_; }

 private:
  std::shared_ptr<const std::vector<std::uint64_t>> small_;
  std::uint64_t a_ = 0, b_ = 0;
  std::vector<std::uint64_t> rem_;
  std::vector<Factor> fac_;
  std::vector<std::uint8_t> cnt_;
};

}  // namespace hsgn
