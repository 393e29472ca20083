#pragma once

// Number-theoretic transforms over 32-bit primes p = c*2^k + 1 (k >= 27).
// Data vectors hold residues in [0, p) in normal (non-Montgomery) form.
// forward() takes natural order and leaves bit-reversed order; inverse()
// takes bit-reversed order back to natural order. Neither scales by 1/L.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hsgn::ntt {

inline constexpr std::array<std::uint32_t, 5> kPrimes = {2013265921u, 2281701377u, 3221225473u,
                                                         3489660929u, 3892314113u};
inline constexpr unsigned kMaxLog = 27;

struct Montgomery {
  std::uint32_t mod;
  std::uint32_t inv;  // mod^-1 mod 2^32
  std::uint32_t r2;   // 2^64 mod mod

  explicit Montgomery(std::uint32_t m);

  std::uint32_t reduce(std::uint64_t t) const {
    const std::uint32_t q = static_cast<std::uint32_t>(t) * inv;
    const std::uint64_t qm = static_cast<std::uint64_t>(q) * mod;
    const auto th = static_cast<std::uint32_t>(t >> 32);
    const auto qh = static_cast<std::uint32_t>(qm >> 32);
    const std::uint32_t r = th - qh;
    return th < qh ? r + mod : r;
  }
  // a * b * 2^-32 mod p
  std::uint32_t mont_mul(std::uint32_t a, std::uint32_t b) const {
    return reduce(static_cast<std::uint64_t>(a) * b);
  }
  std::uint32_t to_mont(std::uint32_t a) const { return mont_mul(a, r2); }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const { return mont_mul(mont_mul(a, b), r2); }
  std::uint32_t add(std::uint32_t a, std::uint32_t b) const {
    std::uint32_t s = a + b;
    if (s < a || s >= mod) s -= mod;
    return s;
  }
  std::uint32_t sub(std::uint32_t a, std::uint32_t b) const {
    const std::uint32_t d = a - b;
    return a < b ? d + mod : d;
  }
  std::uint32_t pow(std::uint32_t a, std::uint64_t e) const;
  std::uint32_t inverse(std::uint32_t a) const { return pow(a, mod - 2); }
};

std::uint32_t primitive_root(std::uint32_t prime);

class Transform {
 public:
  Transform(std::uint32_t prime, unsigned log_len);

  std::size_t size() const { return std::size_t{1} << log_; }
  const Montgomery& field() const { return m_; }

  void forward(std::span<std::uint32_t> a) const;
  void inverse(std::span<std::uint32_t> a) const;

  // a[i] <- a[i] * b[i] * factor
  void pointwise(std::span<std::uint32_t> a, std::span<const std::uint32_t> b, std::uint32_t factor) const;
  // a[i] <- a[i]^2 * factor
  void pointwise_square(std::span<std::uint32_t> a, std::uint32_t factor) const;

 private:
  struct BigLevel {
    std::vector<std::uint32_t> lo;  // zeta^j, j < kChunk (Montgomery form)
    std::vector<std::uint32_t> hi;  // zeta^(j*kChunk)
  };

  void small_levels_forward(std::uint32_t* a, std::size_t n) const;
  void small_levels_inverse(std::uint32_t* a, std::size_t n) const;
  void big_level(std::uint32_t* a, std::size_t len, const BigLevel& tw, bool forward) const;

  // One level with a compile-time span; the fixed inner trip count lets the
  // compiler vectorize across blocks.
  template <std::size_t Len, bool Forward>
  void short_level(std::uint32_t* a, std::size_t n, const std::uint32_t* tw) const {
    std::uint32_t w[Len];
    for (std::size_t j = 0; j < Len; ++j) w[j] = tw[j];
    for (std::size_t s = 0; s < n; s += 2 * Len) {
      for (std::size_t j = 0; j < Len; ++j) {
        const std::uint32_t u = a[s + j];
        if constexpr (Forward) {
          const std::uint32_t v = a[s + j + Len];
          a[s + j] = m_.add(u, v);
          a[s + j + Len] = m_.mont_mul(m_.sub(u, v), w[j]);
        } else {
          const std::uint32_t v = m_.mont_mul(a[s + j + Len], w[j]);
          a[s + j] = m_.add(u, v);
          a[s + j + Len] = m_.sub(u, v);
        }
      }
    }
  }

  Montgomery m_;
  unsigned log_;
  std::vector<std::uint32_t> small_fwd_;  // [len + j] = zeta_{2len}^j, Montgomery form
  std::vector<std::uint32_t> small_inv_;
  std::vector<BigLevel> big_fwd_;  // indexed by log2(len) - kBlockLog
  std::vector<BigLevel> big_inv_;
};

// c = a * b mod x^n (residues mod prime).
std::vector<std::uint32_t> multiply_truncated(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                                              std::size_t n, std::uint32_t prime);

// buf[0..n) <- buf[0..n)^2 mod x^n using two buffers of length bit_ceil(n).
// buf and scratch must both have that length; entries past n are ignored on input
// and zero on output.
void square_truncated_inplace(std::vector<std::uint32_t>& buf, std::vector<std::uint32_t>& scratch, std::size_t n,
                              const Transform& tr);

// Textbook serial transform (bit reversal, 64-bit % arithmetic) used as the
// reference implementation in tests and benchmarks.
namespace reference {
void transform(std::vector<std::uint32_t>& a, std::uint32_t prime, bool invert);
std::vector<std::uint32_t> multiply(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                    std::uint32_t prime);
}  // namespace reference

}  // namespace hsgn::ntt
