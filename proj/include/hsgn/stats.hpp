#pragma once

// Sign statistics, short-interval scans, moments and the other experiments.

#include <cstdint>
#include <memory>
#include <vector>

#include "hsgn/multeval.hpp"
#include "hsgn/sieveweights.hpp"

namespace hsgn {

struct SignReport {
  std::uint64_t X = 0;
  std::uint64_t n_pos = 0, n_neg = 0, n_zero = 0;
  std::uint64_t sign_changes = 0;
  std::int64_t chowla_sum = 0;
};

// Window must start at 1; counts over n <= X = hi - 1.
SignReport sign_counts(const CoefficientWindow& window);

// Changes between consecutive nonzero signs (zeros skipped).
std::uint64_t sign_changes(const CoefficientWindow& window);
std::uint64_t sign_changes(const std::vector<std::int8_t>& signs);

namespace reference {
// Builds the zero-free subsequence explicitly, then counts.
std::uint64_t sign_changes(const std::vector<std::int8_t>& signs);
}  // namespace reference

// sum_{n <= X - 1} sgn(lambda(n)) sgn(lambda(n+1)) over a window starting at 1.
std::int64_t chowla_correlation(const CoefficientWindow& window);

// Everything a short-interval experiment at scale X needs: the interval length
// L = floor(h k(X)) and lambda, w, w' on [X, 2X + L].
struct ScanContext {
  SieveParams params;
  double h = 1;
  double k_X = 1;
  std::uint64_t L = 0;
  CoefficientWindow lambda;
  WeightWindow weights;
};

ScanContext prepare_scan(const SieveParams& params, const MultiplicativeSpec& spec, const PrimeEigenvalueTable& table,
                         double h);

struct IntervalScanReport {
  std::uint64_t X = 0;
  double h = 0, K = 0;
  std::uint64_t L = 0;
  std::uint64_t samples = 0;
  bool exhaustive = false;
  double C = 0, c = 0;
  double frac_S1_small = 0;
  double frac_S2_large = 0;
  double frac_certified_sign_change = 0;
  std::uint64_t certified = 0;
  std::uint64_t soundness_failures = 0;  // certified intervals without an actual sign change
  double empirical_C = 0;                // (1 - 1/K^2)-quantile of |S1| / (K sqrt h)
  double empirical_c = 0;                // median of S2 / h
};

struct ScanSums {
  double s1 = 0, s2 = 0;
};

// S1(x) = sum sgn(lambda(n)) w_n, S2(x) = sum_{lambda(n) != 0} w'_n over x <= n <= x + L.
ScanSums scan_sums(const ScanContext& ctx, std::uint64_t x);

// samples = 0 scans every x in [X, 2X]; otherwise x is drawn uniformly with Philox.
IntervalScanReport interval_scan(const ScanContext& ctx, double K, std::uint64_t samples, std::uint64_t seed, double C,
                                 double c);

struct MomentReport {
  std::uint64_t X = 0;
  double m1_wprime = 0, m2_wprime = 0, m2_w = 0;  // divided by the normalizer
  double normalizer = 0;                          // X prod_{p <= X, lambda(p) = 0} (1 - 1/p)
};

// Sums over X <= n <= 2X.
MomentReport moment_report(const SieveParams& params, const MultiplicativeSpec& spec, const PrimeEigenvalueTable& table);

struct ShiftedConvolution {
  double sum = 0;
  double exponent = 0;  // log|sum| / log X
  std::uint64_t terms = 0;
  bool solvable = true;  // false when gcd(aA, bB) does not divide h
};

// sum lambda(Am) lambda(Bn) over X <= aAm, bBn <= 2X with aAm - bBn = h.
// The window must start at 1 and cover 2X/a and 2X/b.
ShiftedConvolution shifted_convolution(const CoefficientWindow& lambda, std::uint64_t a, std::uint64_t b,
                                       std::uint64_t A, std::uint64_t B, std::int64_t h, std::uint64_t X);

// (1/X) sum_{x=X}^{2X} |S1(x)|^2 / h, with L from ctx. Requires h <= X^eta.
double variance_short(const ScanContext& ctx, double eta);

struct PrimeMomentReport {
  struct Window {
    std::uint64_t w, z;
    double diff;  // sum |lambda(p)|^2/p - sum 1/p over w <= p <= z
  };
  struct Large {
    std::uint64_t y;
    double sum;        // sum_{y <= p <= 2y, |lambda(p)| >= 1/2} |lambda(p)|
    double threshold;  // y / (10 log y)
    bool holds;
  };
  std::vector<Window> windows;
  std::vector<Large> large;
  std::uint64_t grid_points = 0;
  std::uint64_t grid_violations = 0;
  double grid_max_slack = 0;  // max over the grid of LHS - RHS (<= 0 when it holds)
};

double minorant_polynomial(double x);  // (1/8)(1 + (x^2 - 1) - (x^4 - 3x^2 + 1))

PrimeMomentReport prime_moment_checks(const PrimeEigenvalueTable& table, const std::vector<std::uint64_t>& ys,
                                      const std::vector<std::pair<std::uint64_t, std::uint64_t>>& wz,
                                      std::uint64_t grid_points);

struct SatoTateHistogram {
  std::uint64_t P = 0, count = 0;
  std::vector<double> edges;        // bins + 1 points on [-2, 2]
  std::vector<double> empirical;    // mass per bin
  std::vector<double> theoretical;  // semicircle mass per bin
  double max_discrepancy = 0;
  double total_mass = 0;
  double negative_fraction = 0;
};

double semicircle_cdf(double t);

SatoTateHistogram satotate_histogram(const PrimeEigenvalueTable& table, std::uint64_t P, unsigned bins);

struct SerreDensity {
  double vanishing_sum = 0;  // sum_{p <= P, lambda(p) = 0} 1/p
  double reference = 0;      // (1/2) log log P
};

SerreDensity serre_cm_density(const PrimeEigenvalueTable& table, std::uint64_t P);

struct CorProofReport {
  bool found_b = false;
  bool trivial_branch = false;  // some g(2^j) = 0 with j <= b
  int b = -1;
  int j = -1;
  int g2 = 0;
  std::uint64_t X = 0;
  std::uint64_t checked = 0;
  std::uint64_t multiplicativity_failures = 0;
  std::uint64_t disjunction_failures = 0;
};

// The window must start at 1 and reach 2X + 2.
CorProofReport cor_proof_check(const CoefficientWindow& window, std::uint64_t X);

}  // namespace hsgn
