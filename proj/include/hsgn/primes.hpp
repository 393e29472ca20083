#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace hsgn {

std::uint64_t isqrt(std::uint64_t n);

// All primes p <= limit, ascending (Eratosthenes over odd numbers).
std::vector<std::uint64_t> primes_up_to(std::uint64_t limit);

// Deterministic Miller-Rabin for 64-bit inputs.
bool is_prime(std::uint64_t n);

// (p, exponent) pairs in ascending p, by trial division.
std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n);

std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m);
std::uint64_t powmod64(std::uint64_t a, std::uint64_t e, std::uint64_t m);

}  // namespace hsgn
