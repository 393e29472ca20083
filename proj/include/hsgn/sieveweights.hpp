#pragma once

// Brun's upper-bound sieve support D+, the weights rho+, and the mollified
// weights w, w' built from them, with the w'' majorant diagnostics.

#include <cstdint>
#include <string_view>
#include <vector>

#include "hsgn/multeval.hpp"

namespace hsgn {

// log(2^(-1/100)), kept as a logarithm so y_m is reproducible.
long double default_log_gamma();

// Accepts a decimal in (0, 1) or a power of two written 2^(-a/b) or 2^-a/b.
long double parse_log_gamma(std::string_view text);

struct SieveParams {
  std::uint64_t X = 0;
  double delta = 0.1;
  std::uint64_t y = 1;
  long double log_gamma = default_log_gamma();
  int max_m = 0;  // largest m with y_m >= 2 (0 when y_1 < 2)
  std::vector<long double> ym;  // ym[m - 1] = y_m for m = 1 .. max_m

  // y = floor(X^delta).
  static SieveParams from_X(std::uint64_t X, double delta, long double log_gamma = default_log_gamma());
  // Explicit y (X and delta are informational only).
  static SieveParams from_y(std::uint64_t y, long double log_gamma = default_log_gamma());

  double gamma() const;
};

// y^((1/2)(1 - gamma^2) gamma^(m-1)) for any m >= 1.
long double ym_value(const SieveParams& params, int m);

// Same, restricted to 1 <= m <= max_m; std::out_of_range otherwise.
double ym_schedule(const SieveParams& params, int m);

// d = p_1 ... p_r squarefree with p_1 > ... > p_r and p_m <= y_m for odd m.
bool in_Dplus(std::uint64_t d, const SieveParams& params);

// Same test on prime factors already sorted in decreasing order.
bool in_Dplus_sorted(const std::uint64_t* desc_primes, std::size_t r, const SieveParams& params);

struct DplusEntry {
  std::uint64_t d;
  int mu;
};

inline constexpr std::uint64_t kDplusMaxY = 10'000'000;

// Ascending, with Moebius signs. CapacityError above kDplusMaxY.
std::vector<DplusEntry> enumerate_Dplus(const SieveParams& params);

// rho+(n) for n in [lo, hi) by scattering mu(d) over multiples of each d in D+.
std::vector<std::int32_t> rho_plus_window(const SieveParams& params, std::uint64_t lo, std::uint64_t hi);

namespace reference {
std::vector<std::int32_t> rho_plus_window(const SieveParams& params, std::uint64_t lo, std::uint64_t hi);
}  // namespace reference

struct WeightWindow {
  std::uint64_t lo = 0, hi = 0;
  std::vector<double> w;
  std::vector<double> w_prime;
  std::vector<double> w_doubleprime;  // empty unless diagnostics were requested
};

WeightWindow weights_window(const SieveParams& params, const MultiplicativeSpec& spec, std::uint64_t lo,
                            std::uint64_t hi, bool diagnostics = false);

struct MajorantDiagnostics {
  WeightWindow weights;
  // Terms r = 0 .. r_tail - 1 use y_{2r+1} >= 2; r >= r_tail all share the
  // unconstrained term, summed in closed form. s[r] and G[r] hold the r-th
  // summand of w'' (without the 4^-r factor) and its multiplicative majorant
  // G_r, for r = 0 .. r_tail.
  int r_tail = 0;
  std::vector<std::vector<double>> s;
  std::vector<std::vector<double>> G;
  std::uint64_t sandwich_violations = 0;    // w' <= w <= w' + w'' fails
  std::uint64_t domination_violations = 0;  // s[r] <= G[r] fails
  double max_relative_excess = 0.0;
};

inline constexpr std::uint64_t kMajorantMaxWidth = 1'000'000;

// 0 <= w' <= w <= w' + w'', up to a relative 1e-12 for rounding in the sums.
inline bool sandwich_holds(double w, double wp, double wpp) {
  constexpr double kRel = 1e-12;
  return wp >= 0 && wp <= w * (1 + kRel) + 1e-300 && w <= (wp + wpp) * (1 + kRel);
}

MajorantDiagnostics wpp_majorant(const SieveParams& params, const MultiplicativeSpec& spec, std::uint64_t lo,
                                 std::uint64_t hi);

}  // namespace hsgn
