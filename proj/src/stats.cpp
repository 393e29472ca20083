#include "hsgn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hsgn/error.hpp"
#include "hsgn/philox.hpp"

namespace hsgn {
namespace {

constexpr std::size_t kChunk = std::size_t{1} << 16;

void require_origin(const CoefficientWindow& w, const char* what) {
  if (w.lo != 1) throw DomainError(std::string(what) + " needs a window starting at 1");
}

}  // namespace

SignReport sign_counts(const CoefficientWindow& window) {
  require_origin(window, "sign_counts");
  SignReport r;
  r.X = window.hi - 1;
  for (auto s : window.signs) {
    if (s > 0) {
      ++r.n_pos;
    } else if (s < 0) {
      ++r.n_neg;
    } else {
      ++r.n_zero;
    }
  }
  r.sign_changes = sign_changes(window);
  r.chowla_sum = chowla_correlation(window);
  return r;
}

std::uint64_t sign_changes(const std::vector<std::int8_t>& signs) {
  struct Part {
    std::int8_t first = 0, last = 0;
    std::uint64_t changes = 0;
  };
  const std::size_t n = signs.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Part> parts(chunks);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    Part& part = parts[static_cast<std::size_t>(c)];
    const std::size_t a = static_cast<std::size_t>(c) * kChunk;
    const std::size_t b = std::min(n, a + kChunk);
    for (std::size_t i = a; i < b; ++i) {
      const std::int8_t s = signs[i];
      if (s == 0) continue;
      if (part.first == 0) part.first = s;
      if (part.last != 0 && part.last != s) ++part.changes;
      part.last = s;
    }
  }
  std::uint64_t total = 0;
  std::int8_t last = 0;
  for (const auto& part : parts) {
    if (part.first == 0) continue;
    if (last != 0 && last != part.first) ++total;
    total += part.changes;
    last = part.last;
  }
  return total;
}

std::uint64_t sign_changes(const CoefficientWindow& window) { return sign_changes(window.signs); }

namespace reference {

std::uint64_t sign_changes(const std::vector<std::int8_t>& signs) {
  std::vector<std::int8_t> nonzero;
  for (auto s : signs) {
    if (s != 0) nonzero.push_back(s);
  }
  std::uint64_t changes = 0;
  for (std::size_t i = 1; i < nonzero.size(); ++i) changes += nonzero[i] != nonzero[i - 1];
  return changes;
}

}  // namespace reference

std::int64_t chowla_correlation(const CoefficientWindow& window) {
  require_origin(window, "chowla_correlation");
  const auto& s = window.signs;
  std::int64_t sum = 0;
  const std::int64_t pairs = static_cast<std::int64_t>(s.size()) - 1;
#pragma omp parallel for reduction(+ : sum) schedule(static)
  for (std::int64_t i = 0; i < pairs; ++i) {
    sum += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i) + 1];
  }
  return sum;
}

ScanContext prepare_scan(const SieveParams& params, const MultiplicativeSpec& spec, const PrimeEigenvalueTable& table,
                         double h) {
  if (!(h >= 1)) throw DomainError("interval scans need h >= 1");
  ScanContext ctx;
  ctx.params = params;
  ctx.h = h;
  ctx.k_X = density_nonzero(table, params.X).k;
  ctx.L = static_cast<std::uint64_t>(std::floor(h * ctx.k_X));
  const std::uint64_t lo = params.X, hi = 2 * params.X + ctx.L + 1;
  if (hi - 1 > spec.prime_limit) {
    throw CapacityError("scan window [X, 2X + h k(X)] reaches " + std::to_string(hi - 1) +
                        ", beyond the coefficient table limit " + std::to_string(spec.prime_limit));
  }
  ctx.lambda = evaluate_window(spec, lo, hi);
  ctx.weights = weights_window(params, spec, lo, hi);
  return ctx;
}

ScanSums scan_sums(const ScanContext& ctx, std::uint64_t x) {
  ScanSums s;
  const std::size_t a = x - ctx.lambda.lo;
  for (std::size_t i = a; i <= a + ctx.L; ++i) {
    const std::int8_t g = ctx.lambda.signs[i];
    s.s1 += g * ctx.weights.w[i];
    if (g != 0) s.s2 += ctx.weights.w_prime[i];
  }
  return s;
}

namespace {

bool has_sign_change(const ScanContext& ctx, std::uint64_t x) {
  bool pos = false, neg = false;
  const std::size_t a = x - ctx.lambda.lo;
  for (std::size_t i = a; i <= a + ctx.L; ++i) {
    pos |= ctx.lambda.signs[i] > 0;
    neg |= ctx.lambda.signs[i] < 0;
  }
  return pos && neg;
}

}  // namespace

IntervalScanReport interval_scan(const ScanContext& ctx, double K, std::uint64_t samples, std::uint64_t seed, double C,
                                 double c) {
  if (!(K > 0)) throw DomainError("K must be positive");
  const std::uint64_t X = ctx.params.X;
  IntervalScanReport r;
  r.X = X;
  r.h = ctx.h;
  r.K = K;
  r.L = ctx.L;
  r.C = C;
  r.c = c;
  r.exhaustive = samples == 0;

  std::vector<std::uint64_t> xs;
  if (r.exhaustive) {
    xs.resize(X + 1);
    std::iota(xs.begin(), xs.end(), X);
  } else {
    PhiloxStream rng(seed, kStreamScan, 0);
    xs.resize(samples);
    for (auto& x : xs) x = X + static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng.next_u64()) * (X + 1)) >> 64);
  }
  r.samples = xs.size();

  std::vector<ScanSums> sums(xs.size());
  std::vector<std::uint8_t> sound(xs.size(), 1);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(xs.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    sums[k] = scan_sums(ctx, xs[k]);
    if (std::fabs(sums[k].s1) < sums[k].s2) sound[k] = has_sign_change(ctx, xs[k]) ? 1 : 0;
  }

  const double sqrt_h = std::sqrt(ctx.h);
  std::uint64_t small = 0, large = 0;
  std::vector<double> c_ratio(xs.size()), s_ratio(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double a1 = std::fabs(sums[i].s1);
    small += a1 <= C * K * sqrt_h;
    large += sums[i].s2 >= c * ctx.h;
    if (a1 < sums[i].s2) {
      ++r.certified;
      r.soundness_failures += sound[i] == 0;
    }
    c_ratio[i] = a1 / (K * sqrt_h);
    s_ratio[i] = sums[i].s2 / ctx.h;
  }
  const double n = static_cast<double>(xs.size());
  r.frac_S1_small = static_cast<double>(small) / n;
  r.frac_S2_large = static_cast<double>(large) / n;
  r.frac_certified_sign_change = static_cast<double>(r.certified) / n;

  std::sort(c_ratio.begin(), c_ratio.end());
  std::sort(s_ratio.begin(), s_ratio.end());
  const double q = 1.0 - 1.0 / (K * K);
  auto idx = static_cast<std::size_t>(std::ceil(q * n));
  idx = std::clamp<std::size_t>(idx, 1, xs.size()) - 1;
  r.empirical_C = c_ratio[idx];
  r.empirical_c = s_ratio[(xs.size() - 1) / 2];
  return r;
}

MomentReport moment_report(const SieveParams& params, const MultiplicativeSpec& spec, const PrimeEigenvalueTable& table) {
  const std::uint64_t X = params.X;
  const auto ww = weights_window(params, spec, X, 2 * X + 1);
  long double m1 = 0, m2p = 0, m2 = 0;
  for (std::size_t i = 0; i < ww.w.size(); ++i) {
    m1 += ww.w_prime[i];
    m2p += static_cast<long double>(ww.w_prime[i]) * ww.w_prime[i];
    m2 += static_cast<long double>(ww.w[i]) * ww.w[i];
  }
  MomentReport r;
  r.X = X;
  r.normalizer = static_cast<double>(X) * density_nonzero(table, X).lower_product;
  r.m1_wprime = static_cast<double>(m1 / r.normalizer);
  r.m2_wprime = static_cast<double>(m2p / r.normalizer);
  r.m2_w = static_cast<double>(m2 / r.normalizer);
  return r;
}

namespace {

// x with a x = 1 mod m, for gcd(a, m) = 1.
__int128 mod_inverse(__int128 a, __int128 m) {
  __int128 g = m, x = 0, x1 = 1, aa = a % m;
  if (aa < 0) aa += m;
  while (aa != 0) {
    const __int128 q = g / aa;
    __int128 t = g - q * aa;
    g = aa;
    aa = t;
    t = x - q * x1;
    x = x1;
    x1 = t;
  }
  x %= m;
  return x < 0 ? x + m : x;
}

}  // namespace

ShiftedConvolution shifted_convolution(const CoefficientWindow& lambda, std::uint64_t a, std::uint64_t b,
                                       std::uint64_t A, std::uint64_t B, std::int64_t h, std::uint64_t X) {
  require_origin(lambda, "shifted_convolution");
  if (a < 1 || b < 1 || A < 1 || B < 1) throw DomainError("a, b, A, B must be >= 1");
  ShiftedConvolution out;
  const __int128 alpha = static_cast<__int128>(a) * A, beta = static_cast<__int128>(b) * B;
  const __int128 g = std::gcd(static_cast<std::uint64_t>(alpha), static_cast<std::uint64_t>(beta));
  if (h % static_cast<std::int64_t>(g) != 0) {
    out.solvable = false;
    return out;
  }
  const __int128 step = beta / g;
  __int128 m0 = 0;
  if (step > 1) {
    __int128 hg = (h / static_cast<std::int64_t>(g)) % step;
    if (hg < 0) hg += step;
    m0 = hg * mod_inverse(alpha / g % step, step) % step;
  }
  const __int128 mlo = (static_cast<__int128>(X) + alpha - 1) / alpha;
  const __int128 mhi = static_cast<__int128>(2 * X) / alpha;
  const std::uint64_t need = std::max<std::uint64_t>(static_cast<std::uint64_t>(mhi) * A,
                                                     static_cast<std::uint64_t>(2 * X / beta) * B);
  if (need >= lambda.hi) throw CapacityError("shifted_convolution: window too short for 2X/a and 2X/b");

  __int128 m = mlo + ((m0 - mlo) % step + step) % step;
  long double sum = 0;
  for (; m <= mhi; m += step) {
    const __int128 bn = alpha * m - h;
    if (bn < static_cast<__int128>(X) || bn > static_cast<__int128>(2 * X)) continue;
    const __int128 n = bn / beta;
    if (n < 1) continue;
    sum += static_cast<long double>(lambda.value(static_cast<std::uint64_t>(A * m))) *
           lambda.value(static_cast<std::uint64_t>(B * n));
    ++out.terms;
  }
  out.sum = static_cast<double>(sum);
  out.exponent = out.sum == 0 ? 0.0 : std::log(std::fabs(out.sum)) / std::log(static_cast<double>(X));
  return out;
}

double variance_short(const ScanContext& ctx, double eta) {
  const std::uint64_t X = ctx.params.X;
  if (ctx.h > std::pow(static_cast<double>(X), eta)) {
    throw DomainError("variance_short needs h <= X^eta (h = " + std::to_string(ctx.h) +
                      ", eta = " + std::to_string(eta) + ")");
  }
  std::vector<double> sq(X + 1);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i <= static_cast<std::int64_t>(X); ++i) {
    const double s1 = scan_sums(ctx, X + static_cast<std::uint64_t>(i)).s1;
    sq[static_cast<std::size_t>(i)] = s1 * s1;
  }
  long double total = 0;
  for (double v : sq) total += v;
  return static_cast<double>(total / X / ctx.h);
}

double minorant_polynomial(double x) {
  const double x2 = x * x;
  return (1 + (x2 - 1) - (x2 * x2 - 3 * x2 + 1)) / 8;
}

PrimeMomentReport prime_moment_checks(const PrimeEigenvalueTable& table, const std::vector<std::uint64_t>& ys,
                                      const std::vector<std::pair<std::uint64_t, std::uint64_t>>& wz,
                                      std::uint64_t grid_points) {
  PrimeMomentReport r;
  for (auto [w, z] : wz) {
    if (z > table.limit) throw CapacityError("prime_moment_checks: z beyond the table limit");
    long double diff = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto p = table.primes[i];
      if (p < w || p > z) continue;
      diff += (static_cast<long double>(table.lambda[i]) * table.lambda[i] - 1) / p;
    }
    r.windows.push_back({w, z, static_cast<double>(diff)});
  }
  for (auto y : ys) {
    if (2 * y > table.limit) throw CapacityError("prime_moment_checks needs 2y <= table limit");
    long double sum = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const auto p = table.primes[i];
      if (p < y || p > 2 * y) continue;
      const double a = std::fabs(table.lambda[i]);
      if (a >= 0.5) sum += a;
    }
    const double threshold = static_cast<double>(y) / (10 * std::log(static_cast<double>(y)));
    r.large.push_back({y, static_cast<double>(sum), threshold, static_cast<double>(sum) >= threshold});
  }
  r.grid_points = grid_points;
  r.grid_max_slack = -INFINITY;
  for (std::uint64_t i = 0; i < grid_points; ++i) {
    const double x = grid_points == 1 ? 0.0 : -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const double rhs = std::fabs(x) > 0.5 ? 0.5 : 0.0;
    const double slack = minorant_polynomial(x) - rhs;
    r.grid_max_slack = std::max(r.grid_max_slack, slack);
    if (slack > 0) ++r.grid_violations;
  }
  return r;
}

double semicircle_cdf(double t) {
  if (t <= -2) return 0;
  if (t >= 2) return 1;
  return 0.5 + t * std::sqrt(4 - t * t) / (4 * std::numbers::pi) + std::asin(t / 2) / std::numbers::pi;
}

SatoTateHistogram satotate_histogram(const PrimeEigenvalueTable& table, std::uint64_t P, unsigned bins) {
  if (P > table.limit) throw CapacityError("satotate_histogram: P beyond the table limit");
  if (bins == 0) throw DomainError("need at least one bin");
  SatoTateHistogram h;
  h.P = P;
  h.edges.resize(bins + 1);
  for (unsigned i = 0; i <= bins; ++i) h.edges[i] = -2.0 + 4.0 * i / bins;
  std::vector<std::uint64_t> counts(bins, 0);
  std::uint64_t negative = 0;
  for (std::size_t i = 0; i < table.size() && table.primes[i] <= P; ++i) {
    const double v = table.lambda[i];
    auto b = static_cast<long>(std::floor((v + 2.0) / 4.0 * bins));
    b = std::clamp<long>(b, 0, static_cast<long>(bins) - 1);
    ++counts[static_cast<std::size_t>(b)];
    negative += v < 0;
    ++h.count;
  }
  h.empirical.resize(bins);
  h.theoretical.resize(bins);
  for (unsigned i = 0; i < bins; ++i) {
    h.empirical[i] = h.count ? static_cast<double>(counts[i]) / static_cast<double>(h.count) : 0.0;
    h.theoretical[i] = semicircle_cdf(h.edges[i + 1]) - semicircle_cdf(h.edges[i]);
    h.max_discrepancy = std::max(h.max_discrepancy, std::fabs(h.empirical[i] - h.theoretical[i]));
    h.total_mass += h.empirical[i];
  }
  h.negative_fraction = h.count ? static_cast<double>(negative) / static_cast<double>(h.count) : 0.0;
  return h;
}

SerreDensity serre_cm_density(const PrimeEigenvalueTable& table, std::uint64_t P) {
  if (P > table.limit) throw CapacityError("serre_cm_density: P beyond the table limit");
  if (P < 3) throw DomainError("serre_cm_density needs P >= 3");
  long double sum = 0;
  for (std::size_t i = 0; i < table.size() && table.primes[i] <= P; ++i) {
    if (table.vanishes_at(i)) sum += 1.0L / table.primes[i];
  }
  return {static_cast<double>(sum), 0.5 * std::log(std::log(static_cast<double>(P)))};
}

CorProofReport cor_proof_check(const CoefficientWindow& window, std::uint64_t X) {
  require_origin(window, "cor_proof_check");
  if (2 * X + 2 >= window.hi) throw CapacityError("cor_proof_check needs signs up to 2X + 2");
  CorProofReport r;
  r.X = X;
  auto g = [&](std::uint64_t n) { return static_cast<int>(window.sign(n)); };
  if (window.hi <= 2) return r;
  r.g2 = g(2);
  for (int e = 1; (std::uint64_t{1} << e) < window.hi && e < 63; ++e) {
    const int v = g(std::uint64_t{1} << e);
    if (v == 0) {
      r.trivial_branch = true;
      return r;
    }
    if (e % 2 == 0 && v == 1) {
      r.found_b = true;
      r.b = e;
      break;
    }
  }
  if (!r.found_b) return r;
  // j = 0 always satisfies g(2) = g(2) g(1) but gives even n, where g(2n) = g(2) g(n) fails.
  for (int j = 1; j < r.b; ++j) {
    if (g(std::uint64_t{1} << (j + 1)) == r.g2 * g(std::uint64_t{1} << j)) {
      r.j = j;
      break;
    }
  }
  if (r.j < 0) return r;
  const std::uint64_t mod = std::uint64_t{1} << (r.j + 1);
  for (std::uint64_t n = (std::uint64_t{1} << r.j) - 1; n <= X; n += mod) {
    ++r.checked;
    if (g(2 * n) != r.g2 * g(n) || g(2 * n + 2) != r.g2 * g(n + 1)) ++r.multiplicativity_failures;
    const bool any = g(n) * g(n + 1) >= 0 || g(2 * n) * g(2 * n + 1) >= 0 || g(2 * n + 1) * g(2 * n + 2) >= 0;
    if (!any) ++r.disjunction_failures;
  }
  return r;
}

}  // namespace hsgn
