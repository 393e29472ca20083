#include "hsgn/sieveweights.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hsgn/error.hpp"
#include "hsgn/primes.hpp"

namespace hsgn {
namespace {

constexpr std::uint64_t kChunk = std::uint64_t{1} << 14;

void finish_schedule(SieveParams& s) {
  if (!(s.log_gamma < 0)) throw DomainError("gamma must lie in (0, 1)");
  s.ym.clear();
  for (int m = 1;; ++m) {
    const long double v = ym_value(s, m);
    if (v < 2) break;
    s.ym.push_back(v);
  }
  s.max_m = static_cast<int>(s.ym.size());
}

double parse_double(std::string_view t) {
  double v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DomainError("cannot parse number '" + std::string(t) + "'");
  }
  return v;
}

}  // namespace

long double default_log_gamma() { return -std::log(2.0L) / 100; }

long double parse_log_gamma(std::string_view text) {
  if (text.substr(0, 2) == "2^") {
    std::string e(text.substr(2));
    e.erase(std::remove(e.begin(), e.end(), '('), e.end());
    e.erase(std::remove(e.begin(), e.end(), ')'), e.end());
    const auto slash = e.find('/');
    const long double num = parse_double(e.substr(0, slash));
    const long double den = slash == std::string::npos ? 1.0L : parse_double(std::string_view(e).substr(slash + 1));
    const long double lg = num / den * std::log(2.0L);
    if (!(lg < 0)) throw DomainError("gamma must lie in (0, 1)");
    return lg;
  }
  const double g = parse_double(text);
  if (!(g > 0 && g < 1)) throw DomainError("gamma must lie in (0, 1)");
  return std::log(static_cast<long double>(g));
}

SieveParams SieveParams::from_X(std::uint64_t X, double delta, long double log_gamma) {
  if (X < 2) throw DomainError("sieve parameters need X >= 2");
  if (!(delta > 0 && delta < 0.5)) throw DomainError("delta must lie in (0, 1/2)");
  SieveParams s;
  s.X = X;
  s.delta = delta;
  s.log_gamma = log_gamma;
  const long double target = std::log(static_cast<long double>(X)) * delta;
  auto y = static_cast<std::uint64_t>(std::floor(std::exp(target)));
  while (y > 1 && std::log(static_cast<long double>(y)) > target + 1e-15L) --y;
  while (std::log(static_cast<long double>(y + 1)) <= target + 1e-15L) ++y;
  s.y = std::max<std::uint64_t>(y, 1);
  finish_schedule(s);
  return s;
}

SieveParams SieveParams::from_y(std::uint64_t y, long double log_gamma) {
  if (y < 1) throw DomainError("y must be >= 1");
  SieveParams s;
  s.X = y;
  s.delta = 0;
  s.y = y;
  s.log_gamma = log_gamma;
  finish_schedule(s);
  return s;
}

double SieveParams::gamma() const { return static_cast<double>(std::exp(log_gamma)); }

long double ym_value(const SieveParams& params, int m) {
  if (m < 1) throw std::out_of_range("y_m needs m >= 1");
  const long double g2 = std::exp(2 * params.log_gamma);
  const long double expo = 0.5L * (1 - g2) * std::exp((m - 1) * params.log_gamma);
  return std::exp(expo * std::log(static_cast<long double>(params.y)));
}

double ym_schedule(const SieveParams& params, int m) {
  if (m < 1 || m > params.max_m) {
    throw std::out_of_range("m = " + std::to_string(m) + " outside 1.." + std::to_string(params.max_m));
  }
  return static_cast<double>(params.ym[static_cast<std::size_t>(m - 1)]);
}

bool in_Dplus_sorted(const std::uint64_t* desc, std::size_t r, const SieveParams& params) {
  for (std::size_t i = 0; i < r; i += 2) {
    // index m = i + 1 is odd
    if (i >= params.ym.size()) return false;
    if (static_cast<long double>(desc[i]) > params.ym[i]) return false;
  }
  return true;
}

bool in_Dplus(std::uint64_t d, const SieveParams& params) {
  if (d == 0) throw DomainError("in_Dplus needs d >= 1");
  if (d == 1) return true;
  std::vector<std::uint64_t> ps;
  for (auto [p, e] : factorize(d)) {
    if (e > 1) return false;
    ps.push_back(p);
  }
  std::reverse(ps.begin(), ps.end());
  return in_Dplus_sorted(ps.data(), ps.size(), params);
}

std::vector<DplusEntry> enumerate_Dplus(const SieveParams& params) {
  if (params.y > kDplusMaxY) {
    throw CapacityError("enumerate_Dplus: y = " + std::to_string(params.y) + " above the guard " +
                        std::to_string(kDplusMaxY));
  }
  std::vector<DplusEntry> out{{1, 1}};
  if (params.max_m == 0) return out;
  const auto primes = primes_up_to(static_cast<std::uint64_t>(std::floor(params.ym[0])));
  // extend(prod, bound, m): choose p_m < bound (and p_m <= y_m when m is odd)
  auto extend = [&](auto&& self, std::uint64_t prod, std::size_t bound, int m, int mu) -> void {
    std::size_t cap = bound;
    if (m % 2 == 1) {
      if (m > params.max_m) return;
      const long double ymv = params.ym[static_cast<std::size_t>(m - 1)];
      cap = static_cast<std::size_t>(std::upper_bound(primes.begin(), primes.begin() + static_cast<std::ptrdiff_t>(bound),
                                                      static_cast<std::uint64_t>(std::floor(ymv))) -
                                     primes.begin());
    }
    for (std::size_t i = 0; i < cap; ++i) {
      const std::uint64_t d = prod * primes[i];
      out.push_back({d, -mu});
      self(self, d, i, m + 1, -mu);
    }
  };
  extend(extend, 1, primes.size(), 1, 1);
  std::sort(out.begin(), out.end(), [](const DplusEntry& a, const DplusEntry& b) { return a.d < b.d; });
  return out;
}

std::vector<std::int32_t> rho_plus_window(const SieveParams& params, std::uint64_t lo, std::uint64_t hi) {
  if (lo < 1 || hi <= lo) throw DomainError("window needs hi > lo >= 1");
  const auto dplus = enumerate_Dplus(params);
  std::vector<std::int32_t> rho(hi - lo, 0);
  const std::uint64_t chunk = std::uint64_t{1} << 16;
  const std::uint64_t chunks = (hi - lo + chunk - 1) / chunk;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const std::uint64_t a = lo + static_cast<std::uint64_t>(c) * chunk;
    const std::uint64_t b = std::min(hi, a + chunk);
    for (const auto& e : dplus) {
      for (std::uint64_t m = (a + e.d - 1) / e.d * e.d; m < b; m += e.d) rho[m - lo] += e.mu;
    }
  }
  return rho;
}

namespace reference {

std::vector<std::int32_t> rho_plus_window(const SieveParams& params, std::uint64_t lo, std::uint64_t hi) {
  if (lo < 1 || hi <= lo) throw DomainError("window needs hi > lo >= 1");
  std::vector<std::int32_t> rho(hi - lo, 0);
  for (const auto& e : enumerate_Dplus(params)) {
    for (std::uint64_t m = (lo + e.d - 1) / e.d * e.d; m < hi; m += e.d) rho[m - lo] += e.mu;
  }
  return rho;
}

}  // namespace reference

namespace {

struct WeightKernel {
  const SieveParams& params;
  const MultiplicativeSpec& spec;
  bool diagnostics;
  int r_tail;
  std::vector<long double> y_odd;  // y_{2r+1}, r < r_tail
  long double y1;

  WeightKernel(const SieveParams& p, const MultiplicativeSpec& s, bool diag)
      : params(p), spec(s), diagnostics(diag), r_tail((p.max_m + 1) / 2), y1(p.ym.empty() ? 1.0L : p.ym[0]) {
    for (int r = 0; r < r_tail; ++r) y_odd.push_back(p.ym[static_cast<std::size_t>(2 * r)]);
  }

  // rho+ of the number whose distinct primes are given ascending; only primes <= y_1 matter.
  int rho_plus(const std::uint64_t* asc, std::size_t k) const {
    std::uint64_t small[WindowFactorizer::kMaxFactors];
    std::size_t s = 0;
    for (std::size_t i = k; i-- > 0;) {
      if (static_cast<long double>(asc[i]) <= y1) small[s++] = asc[i];
    }
    int total = 0;
    std::uint64_t desc[WindowFactorizer::kMaxFactors];
    for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
      std::size_t r = 0;
      for (std::size_t i = 0; i < s; ++i) {
        if (mask >> i & 1) desc[r++] = small[i];
      }
      if (in_Dplus_sorted(desc, r, params)) total += (r % 2 == 0) ? 1 : -1;
    }
    return total;
  }

  struct Out {
    double w = 0, wp = 0, wpp = 0;
    std::vector<double> s, G;  // size r_tail + 1 when diagnostics
  };

  void run(const WindowFactorizer::Factor* fs, unsigned k, Out& out) const {
    double absval[WindowFactorizer::kMaxFactors];
    bool nonzero_p[WindowFactorizer::kMaxFactors];
    std::uint32_t cand[WindowFactorizer::kMaxFactors];
    unsigned nc = 0;
    bool smooth_ok = true;  // the y-smooth part is squarefree with lambda != 0
    std::uint64_t smooth = 1;
    for (unsigned i = 0; i < k; ++i) {
      const double v = spec(fs[i].p, fs[i].nu);
      absval[i] = std::fabs(v);
      nonzero_p[i] = !spec.is_zero(fs[i].nu == 1 ? v : spec(fs[i].p, 1));
      const bool small = fs[i].p <= params.y;
      if (fs[i].nu == 1 && small && nonzero_p[i]) cand[nc++] = i;
      if (small) {
        if (fs[i].nu != 1 || !nonzero_p[i]) smooth_ok = false;
        if (smooth <= params.y) smooth *= fs[i].p;
      }
    }

    out.w = 0;
    out.wp = 0;
    out.wpp = 0;
    if (diagnostics) {
      out.s.assign(static_cast<std::size_t>(r_tail) + 1, 0.0);
      out.G.assign(static_cast<std::size_t>(r_tail) + 1, 0.0);
    }

    // w': a is the whole y-smooth part.
    if (smooth_ok && smooth <= params.y) {
      double lb = 1;
      for (unsigned i = 0; i < k; ++i) {
        if (fs[i].p > params.y) lb *= absval[i];
      }
      out.wp = lb;
    }

    std::uint64_t bprimes[WindowFactorizer::kMaxFactors];
    for (std::uint32_t mask = 0; mask < (1u << nc); ++mask) {
      std::uint64_t a = 1;
      bool ok = true;
      std::uint32_t in_a = 0;
      for (unsigned j = 0; j < nc && ok; ++j) {
        if (!(mask >> j & 1)) continue;
        a *= fs[cand[j]].p;
        in_a |= 1u << cand[j];
        if (a > params.y) ok = false;
      }
      if (!ok) continue;
      double lb = 1;
      std::size_t nb = 0;
      for (unsigned i = 0; i < k; ++i) {
        if (in_a >> i & 1) continue;
        lb *= absval[i];
        bprimes[nb++] = fs[i].p;
      }
      out.w += rho_plus(bprimes, nb) * lb;
      if (diagnostics) {
        const double term = lb * std::pow(4.0, static_cast<double>(nb));
        const long double pmin = nb == 0 ? INFINITY : static_cast<long double>(bprimes[0]);
        for (int r = 0; r < r_tail; ++r) {
          if (pmin > y_odd[static_cast<std::size_t>(r)]) out.s[static_cast<std::size_t>(r)] += term;
        }
        out.s[static_cast<std::size_t>(r_tail)] += term;
      }
    }

    if (!diagnostics) return;
    long double wpp = 0, scale = 1;
    for (int r = 0; r < r_tail; ++r, scale /= 4) wpp += scale * out.s[static_cast<std::size_t>(r)];
    wpp += scale * 4 / 3 * out.s[static_cast<std::size_t>(r_tail)];
    out.wpp = static_cast<double>(wpp);

    for (int r = 0; r <= r_tail; ++r) {
      const long double Y = r < r_tail ? y_odd[static_cast<std::size_t>(r)] : 1.0L;
      double G = 1;
      for (unsigned i = 0; i < k && G != 0; ++i) {
        const auto p = static_cast<long double>(fs[i].p);
        if (p <= Y) {
          G *= (fs[i].nu == 1 && nonzero_p[i]) ? 1.0 : 0.0;
        } else if (fs[i].nu == 1) {
          G *= 1 + 4 * absval[i];
        } else {
          G *= 4 * absval[i] + 4 * std::fabs(spec(fs[i].p, fs[i].nu - 1));
        }
      }
      out.G[static_cast<std::size_t>(r)] = G;
    }
  }
};

}  // namespace

WeightWindow weights_window(const SieveParams& params, const MultiplicativeSpec& spec, std::uint64_t lo,
                            std::uint64_t hi, bool diagnostics) {
  if (lo < 1 || hi <= lo) throw DomainError("window needs hi > lo >= 1");
  if (hi - 1 > spec.prime_limit) throw CapacityError("weights window exceeds the prime table");
  WeightWindow ww;
  ww.lo = lo;
  ww.hi = hi;
  ww.w.assign(hi - lo, 0.0);
  ww.w_prime.assign(hi - lo, 0.0);
  if (diagnostics) ww.w_doubleprime.assign(hi - lo, 0.0);
  const WeightKernel kernel(params, spec, diagnostics);
  const WindowFactorizer proto(hi);
  const std::uint64_t chunks = (hi - lo + kChunk - 1) / kChunk;
#pragma omp parallel
  {
    WindowFactorizer f(proto.shared_small_primes());
    WeightKernel::Out out;
#pragma omp for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
      const std::uint64_t a = lo + static_cast<std::uint64_t>(c) * kChunk;
      const std::uint64_t b = std::min(hi, a + kChunk);
      f.factor(a, b);
      for (std::uint64_t n = a; n < b; ++n) {
        kernel.run(f.factors(n), f.count(n), out);
        ww.w[n - lo] = out.w;
        ww.w_prime[n - lo] = out.wp;
        if (diagnostics) ww.w_doubleprime[n - lo] = out.wpp;
      }
    }
  }
  return ww;
}

MajorantDiagnostics wpp_majorant(const SieveParams& params, const MultiplicativeSpec& spec, std::uint64_t lo,
                                 std::uint64_t hi) {
  if (lo < 1 || hi <= lo) throw DomainError("window needs hi > lo >= 1");
  if (hi - lo > kMajorantMaxWidth) throw CapacityError("wpp_majorant window wider than 10^6");
  if (hi - 1 > spec.prime_limit) throw CapacityError("majorant window exceeds the prime table");
  MajorantDiagnostics d;
  const WeightKernel kernel(params, spec, true);
  d.r_tail = kernel.r_tail;
  const std::size_t len = hi - lo;
  d.weights.lo = lo;
  d.weights.hi = hi;
  d.weights.w.assign(len, 0.0);
  d.weights.w_prime.assign(len, 0.0);
  d.weights.w_doubleprime.assign(len, 0.0);
  d.s.assign(static_cast<std::size_t>(d.r_tail) + 1, std::vector<double>(len, 0.0));
  d.G.assign(static_cast<std::size_t>(d.r_tail) + 1, std::vector<double>(len, 0.0));

  WindowFactorizer f(hi);
  WeightKernel::Out out;
  constexpr double kRel = 1e-12;
  for (std::uint64_t a = lo; a < hi; a += kChunk) {
    const std::uint64_t b = std::min(hi, a + kChunk);
    f.factor(a, b);
    for (std::uint64_t n = a; n < b; ++n) {
      const std::size_t i = n - lo;
      kernel.run(f.factors(n), f.count(n), out);
      d.weights.w[i] = out.w;
      d.weights.w_prime[i] = out.wp;
      d.weights.w_doubleprime[i] = out.wpp;
      const double upper = out.wp + out.wpp;
      if (!sandwich_holds(out.w, out.wp, out.wpp)) ++d.sandwich_violations;
      if (upper > 0) d.max_relative_excess = std::max(d.max_relative_excess, (out.w - upper) / upper);
      for (std::size_t r = 0; r < out.s.size(); ++r) {
        d.s[r][i] = out.s[r];
        d.G[r][i] = out.G[r];
        if (out.s[r] > out.G[r] * (1 + kRel)) ++d.domination_violations;
      }
    }
  }
  return d;
}

}  // namespace hsgn
