#pragma once

// Ramanujan tau: Delta = q * prod_{n>=1} (1 - q^n)^24 = sum tau(n) q^n.

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hsgn {

using BigInt = mpz_class;

// tau(1..n). The product is expanded with the pentagonal number theorem and
// raised to the 24th power by binary exponentiation of truncated series,
// each product taken modulo several NTT primes and recombined by CRT.
std::vector<BigInt> tau_series(std::size_t n);

// Same values in 128-bit integers; throws OverflowError if any tau(k) does not fit.
std::vector<__int128> tau_series_i128(std::size_t n);

struct TauAtPrimes {
  std::vector<std::uint64_t> primes;
  std::vector<BigInt> tau;
};

inline constexpr std::uint64_t kDefaultSeriesLimit = std::uint64_t{1} << 27;

// tau(p) for all primes p <= limit. Expands prod (1 - q^n)^3 with Jacobi's
// identity and squares three times (the last two in place), so peak memory is
// two transform buffers per modulus. Throws CapacityError above series_limit.
TauAtPrimes tau_at_primes(std::uint64_t limit, std::uint64_t series_limit = kDefaultSeriesLimit);

// a / p^((weight-1)/2) rounded to double (relative error well under 1 ulp).
double normalize_coefficient(const BigInt& a, std::uint64_t p, int weight);

// Residues of prod(1-q^n)^24 mod x^n mod prime (coefficient k is tau(k+1)).
std::vector<std::uint32_t> delta_series_mod(std::size_t n, std::uint32_t prime);

}  // namespace hsgn
