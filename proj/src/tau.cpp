#include "hsgn/tau.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "hsgn/error.hpp"
#include "hsgn/ntt.hpp"
#include "hsgn/primes.hpp"

namespace hsgn {
namespace {

// Garner mixed-radix reconstruction into the symmetric range (-M/2, M/2].
class Crt {
 public:
  explicit Crt(std::size_t count) : mods_(ntt::kPrimes.begin(), ntt::kPrimes.begin() + count) {
    inv_.assign(count * count, 0);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        inv_[i * count + j] = static_cast<std::uint32_t>(powmod64(mods_[j] % mods_[i], mods_[i] - 2, mods_[i]));
      }
    }
    modulus_ = 1;
    for (auto m : mods_) modulus_ *= static_cast<unsigned long>(m);
    half_ = modulus_ / 2;
  }

  // residues r[0], r[stride], r[2*stride], ...
  BigInt reconstruct(const std::uint32_t* r, std::size_t stride) const {
    const std::size_t k = mods_.size();
    std::uint64_t digits[ntt::kPrimes.size()];
    for (std::size_t i = 0; i < k; ++i) {
      const std::uint64_t mi = mods_[i];
      std::uint64_t x = r[i * stride] % mi;
      for (std::size_t j = 0; j < i; ++j) {
        x = (x + mi - digits[j] % mi) % mi;
        x = x * inv_[i * k + j] % mi;
      }
      digits[i] = x;
    }
    BigInt v = static_cast<unsigned long>(digits[k - 1]);
    for (std::size_t i = k - 1; i-- > 0;) {
      v *= static_cast<unsigned long>(mods_[i]);
      v += static_cast<unsigned long>(digits[i]);
    }
    if (v > half_) v -= modulus_;
    return v;
  }

 private:
  std::vector<std::uint32_t> mods_;
  std::vector<std::uint32_t> inv_;
  BigInt modulus_, half_;
};

// Smallest number of NTT primes whose product exceeds 2^bits.
std::size_t moduli_for_bits(double bits, const std::string& what) {
  double acc = 0;
  for (std::size_t i = 0; i < ntt::kPrimes.size(); ++i) {
    acc += std::log2(static_cast<double>(ntt::kPrimes[i]));
    if (acc > bits + 1.0) return i + 1;
  }
  throw CapacityError(what + " needs " + std::to_string(static_cast<int>(bits)) +
                      " bits; CRT capacity is about 157 bits");
}

std::vector<std::uint32_t> pentagonal_series_mod(std::size_t n, std::uint32_t prime) {
  std::vector<std::uint32_t> e(n, 0);
  if (n == 0) return e;
  e[0] = 1;
  for (std::uint64_t k = 1;; ++k) {
    const std::uint64_t a = k * (3 * k - 1) / 2;
    const std::uint64_t b = k * (3 * k + 1) / 2;
    if (a >= n) break;
    const std::uint32_t v = (k & 1) ? prime - 1 : 1;
    e[a] = v;
    if (b < n) e[b] = v;
  }
  return e;
}

std::vector<std::uint32_t> power_truncated(std::vector<std::uint32_t> base, unsigned e, std::size_t n,
                                           std::uint32_t prime) {
  std::vector<std::uint32_t> acc;
  bool have = false;
  while (e) {
    if (e & 1) {
      acc = have ? ntt::multiply_truncated(acc, base, n, prime) : base;
      have = true;
    }
    e >>= 1;
    if (e) base = ntt::multiply_truncated(base, base, n, prime);
  }
  if (!have) {
    acc.assign(n, 0);
    if (n) acc[0] = 1;
  }
  return acc;
}

// buf[0..n) <- (prod (1-q^k)^3)^2 mod x^n mod prime, using Jacobi's identity
// prod (1-q^k)^3 = sum_{j>=0} (-1)^j (2j+1) q^{j(j+1)/2}.
void jacobi_square_mod(std::vector<std::uint32_t>& buf, std::size_t n, std::uint32_t prime) {
  std::vector<std::uint64_t> t;
  std::vector<std::int64_t> c;
  for (std::uint64_t j = 0; j * (j + 1) / 2 < n; ++j) {
    t.push_back(j * (j + 1) / 2);
    c.push_back((j & 1) ? -static_cast<std::int64_t>(2 * j + 1) : static_cast<std::int64_t>(2 * j + 1));
  }
  constexpr std::size_t kOut = std::size_t{1} << 18;
  const auto nblocks = static_cast<std::int64_t>((n + kOut - 1) / kOut);
  const auto p = static_cast<std::int64_t>(prime);
#pragma omp parallel
  {
    std::vector<std::int64_t> acc(kOut);
#pragma omp for schedule(dynamic)
    for (std::int64_t blk = 0; blk < nblocks; ++blk) {
      const std::uint64_t s0 = static_cast<std::uint64_t>(blk) * kOut;
      const std::uint64_t s1 = std::min<std::uint64_t>(s0 + kOut, n);
      std::fill(acc.begin(), acc.end(), 0);
      for (std::size_t i = 0; i < t.size() && 2 * t[i] < s1; ++i) {
        // pairs i <= j with t_i + t_j in [s0, s1)
        const std::uint64_t lo = s0 > t[i] ? s0 - t[i] : 0;
        auto it = std::lower_bound(t.begin() + static_cast<std::ptrdiff_t>(i), t.end(), lo);
        for (auto j = static_cast<std::size_t>(it - t.begin()); j < t.size(); ++j) {
          const std::uint64_t s = t[i] + t[j];
          if (s >= s1) break;
          acc[s - s0] += (i == j ? 1 : 2) * c[i] * c[j];
        }
      }
      for (std::uint64_t s = s0; s < s1; ++s) {
        std::int64_t r = acc[s - s0] % p;
        if (r < 0) r += p;
        buf[s] = static_cast<std::uint32_t>(r);
      }
    }
  }
}

}  // namespace

std::vector<std::uint32_t> delta_series_mod(std::size_t n, std::uint32_t prime) {
  return power_truncated(pentagonal_series_mod(n, prime), 24, n, prime);
}

std::vector<BigInt> tau_series(std::size_t n) {
  if (n == 0) return {};
  // |tau(k)| <= d(k) k^{11/2} <= 2 k^6
  const double bits = 2.0 + 6.0 * std::log2(static_cast<double>(n));
  const std::size_t k = moduli_for_bits(bits, "tau_series(" + std::to_string(n) + ")");
  std::vector<std::vector<std::uint32_t>> residues(k);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(k); ++i) {
    residues[static_cast<std::size_t>(i)] = delta_series_mod(n, ntt::kPrimes[static_cast<std::size_t>(i)]);
  }
  std::vector<std::uint32_t> interleaved(n * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) interleaved[j * k + i] = residues[i][j];
  }
  residues.clear();
  const Crt crt(k);
  std::vector<BigInt> out(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(n); ++j) {
    out[static_cast<std::size_t>(j)] = crt.reconstruct(&interleaved[static_cast<std::size_t>(j) * k], 1);
  }
  return out;
}

std::vector<__int128> tau_series_i128(std::size_t n) {
  const auto big = tau_series(n);
  std::vector<__int128> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const BigInt& v = big[i];
    if (mpz_sizeinbase(v.get_mpz_t(), 2) > 126) {
      throw OverflowError("tau(" + std::to_string(i + 1) +
                          ") exceeds the 128-bit fixed-width range; use the arbitrary-precision tau_series");
    }
    BigInt mag = abs(v);
    BigInt hi = mag >> 64;
    BigInt lo = mag - (hi << 64);
    unsigned __int128 u = (static_cast<unsigned __int128>(mpz_get_ui(hi.get_mpz_t())) << 64) |
                          mpz_get_ui(lo.get_mpz_t());
    out[i] = sgn(v) < 0 ? -static_cast<__int128>(u) : static_cast<__int128>(u);
  }
  return out;
}

TauAtPrimes tau_at_primes(std::uint64_t limit, std::uint64_t series_limit) {
  if (limit > series_limit) {
    throw CapacityError("Delta prime table limit " + std::to_string(limit) + " exceeds the series limit " +
                        std::to_string(series_limit));
  }
  TauAtPrimes out;
  out.primes = primes_up_to(limit);
  if (out.primes.empty()) return out;
  const std::size_t n = static_cast<std::size_t>(limit);
  const std::size_t len = std::bit_ceil(n);
  const auto lg = static_cast<unsigned>(std::countr_zero(len));
  if (lg > ntt::kMaxLog) {
    throw CapacityError("Delta prime table limit " + std::to_string(limit) + " exceeds NTT capacity 2^" +
                        std::to_string(ntt::kMaxLog));
  }
  // Deligne: |tau(p)| <= 2 p^{11/2}
  const double bits = 2.0 + 5.5 * std::log2(static_cast<double>(limit));
  const std::size_t k = moduli_for_bits(bits, "tau_at_primes(" + std::to_string(limit) + ")");
  const std::size_t np = out.primes.size();
  std::vector<std::uint32_t> residues(np * k);
  {
    std::vector<std::uint32_t> buf(len), scratch(len);
    for (std::size_t m = 0; m < k; ++m) {
      const ntt::Transform tr(ntt::kPrimes[m], lg);
      std::fill(buf.begin(), buf.end(), 0);
      jacobi_square_mod(buf, n, ntt::kPrimes[m]);
      ntt::square_truncated_inplace(buf, scratch, n, tr);
      ntt::square_truncated_inplace(buf, scratch, n, tr);
      for (std::size_t i = 0; i < np; ++i) residues[i * k + m] = buf[out.primes[i] - 1];
    }
  }
  const Crt crt(k);
  out.tau.resize(np);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(np); ++i) {
    out.tau[static_cast<std::size_t>(i)] = crt.reconstruct(&residues[static_cast<std::size_t>(i) * k], 1);
  }
  return out;
}

double normalize_coefficient(const BigInt& a, std::uint64_t p, int weight) {
  if (sgn(a) == 0) return 0.0;
  const mpz_srcptr z = a.get_mpz_t();
  const std::size_t bits = mpz_sizeinbase(z, 2);
  long double mag;
  if (bits <= 64) {
    BigInt m = abs(a);
    mag = static_cast<long double>(mpz_get_ui(m.get_mpz_t()));
  } else {
    BigInt m = abs(a) >> static_cast<mp_bitcnt_t>(bits - 64);
    mag = std::ldexp(static_cast<long double>(mpz_get_ui(m.get_mpz_t())), static_cast<int>(bits - 64));
  }
  const auto pl = static_cast<long double>(p);
  long double denom = std::sqrt(pl);
  for (int i = 0; i < (weight - 2) / 2; ++i) denom *= pl;
  const long double v = mag / denom;
  return static_cast<double>(sgn(a) < 0 ? -v : v);
}

}  // namespace hsgn
