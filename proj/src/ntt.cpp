#include "hsgn/ntt.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <utility>

#include "hsgn/error.hpp"
#include "hsgn/primes.hpp"

namespace hsgn::ntt {
namespace {

constexpr unsigned kBlockLog = 15;  // levels below this run block-by-block in cache
constexpr std::size_t kBlock = std::size_t{1} << kBlockLog;
constexpr std::size_t kChunk = kBlock;

}  // namespace

Montgomery::Montgomery(std::uint32_t m) : mod(m) {
  if ((m & 1) == 0) throw DomainError("Montgomery modulus must be odd");
  std::uint32_t x = 1;
  for (int i = 0; i < 5; ++i) x *= 2 - m * x;  // Newton iteration, doubles correct bits
  inv = x;
  const auto r = static_cast<std::uint64_t>((static_cast<unsigned __int128>(1) << 64) % m);
  r2 = static_cast<std::uint32_t>(r);
}

std::uint32_t Montgomery::pow(std::uint32_t a, std::uint64_t e) const {
  std::uint32_t base = to_mont(a);
  std::uint32_t acc = to_mont(1);
  while (e) {
    if (e & 1) acc = mont_mul(acc, base);
    base = mont_mul(base, base);
    e >>= 1;
  }
  return reduce(acc);
}

std::uint32_t primitive_root(std::uint32_t prime) {
  const auto factors = factorize(prime - 1);
  for (std::uint32_t g = 2;; ++g) {
    bool ok = true;
    for (auto [q, e] : factors) {
      if (powmod64(g, (prime - 1) / q, prime) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
}

Transform::Transform(std::uint32_t prime, unsigned log_len) : m_(prime), log_(log_len) {
  if (log_len > kMaxLog || ((prime - 1) & ((std::uint32_t{1} << log_len) - 1)) != 0) {
    throw CapacityError("NTT length 2^" + std::to_string(log_len) + " unsupported for prime " +
                        std::to_string(prime) + " (max 2^" + std::to_string(kMaxLog) + ")");
  }
  const std::uint32_t g = primitive_root(prime);
  const std::size_t n = size();
  const std::size_t block = std::min(n, kBlock);

  auto root_of_order = [&](std::uint64_t order, bool inverse) {
    std::uint32_t z = m_.pow(g, (prime - 1) / order);
    return inverse ? m_.inverse(z) : z;
  };

  small_fwd_.assign(std::max<std::size_t>(block, 2), 0);
  small_inv_.assign(std::max<std::size_t>(block, 2), 0);
  for (std::size_t len = 1; len < block; len <<= 1) {
    for (int dir = 0; dir < 2; ++dir) {
      auto& table = dir == 0 ? small_fwd_ : small_inv_;
      const std::uint32_t z = m_.to_mont(root_of_order(2 * len, dir == 1));
      std::uint32_t w = m_.to_mont(1);
      for (std::size_t j = 0; j < len; ++j) {
        table[len + j] = w;
        w = m_.mont_mul(w, z);
      }
    }
  }

  for (unsigned lg = kBlockLog; lg < log_; ++lg) {
    const std::size_t len = std::size_t{1} << lg;
    for (int dir = 0; dir < 2; ++dir) {
      BigLevel level;
      const std::uint32_t z = m_.to_mont(root_of_order(2 * len, dir == 1));
      level.lo.resize(kChunk);
      std::uint32_t w = m_.to_mont(1);
      for (std::size_t j = 0; j < kChunk; ++j) {
        level.lo[j] = w;
        w = m_.mont_mul(w, z);
      }
      // w == z^kChunk now
      level.hi.resize(len / kChunk);
      std::uint32_t h = m_.to_mont(1);
      for (auto& x : level.hi) {
        x = h;
        h = m_.mont_mul(h, w);
      }
      (dir == 0 ? big_fwd_ : big_inv_).push_back(std::move(level));
    }
  }
}

void Transform::small_levels_forward(std::uint32_t* a, std::size_t n) const {
  std::size_t len = n / 2;
  for (; len >= 16; len >>= 1) {
    const std::uint32_t* tw = small_fwd_.data() + len;
    for (std::size_t s = 0; s < n; s += 2 * len) {
      std::uint32_t* x = a + s;
      std::uint32_t* y = a + s + len;
      for (std::size_t j = 0; j < len; ++j) {
        const std::uint32_t u = x[j];
        const std::uint32_t v = y[j];
        x[j] = m_.add(u, v);
        y[j] = m_.mont_mul(m_.sub(u, v), tw[j]);
      }
    }
  }
  if (len >= 8) short_level<8, true>(a, n, small_fwd_.data() + 8);
  if (len >= 4) short_level<4, true>(a, n, small_fwd_.data() + 4);
  if (len >= 2) short_level<2, true>(a, n, small_fwd_.data() + 2);
  if (len >= 1) short_level<1, true>(a, n, small_fwd_.data() + 1);
}

void Transform::small_levels_inverse(std::uint32_t* a, std::size_t n) const {
  if (n >= 2) short_level<1, false>(a, n, small_inv_.data() + 1);
  if (n >= 4) short_level<2, false>(a, n, small_inv_.data() + 2);
  if (n >= 8) short_level<4, false>(a, n, small_inv_.data() + 4);
  if (n >= 16) short_level<8, false>(a, n, small_inv_.data() + 8);
  for (std::size_t len = 16; len < n; len <<= 1) {
    const std::uint32_t* tw = small_inv_.data() + len;
    for (std::size_t s = 0; s < n; s += 2 * len) {
      std::uint32_t* x = a + s;
      std::uint32_t* y = a + s + len;
      for (std::size_t j = 0; j < len; ++j) {
        const std::uint32_t u = x[j];
        const std::uint32_t v = m_.mont_mul(y[j], tw[j]);
        x[j] = m_.add(u, v);
        y[j] = m_.sub(u, v);
      }
    }
  }
}

void Transform::big_level(std::uint32_t* a, std::size_t len, const BigLevel& tw, bool forward) const {
  const std::size_t n = size();
  const auto blocks = static_cast<std::int64_t>(n / (2 * len));
  const auto chunks = static_cast<std::int64_t>(len / kChunk);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::int64_t b = 0; b < blocks; ++b) {
    for (std::int64_t c = 0; c < chunks; ++c) {
      std::uint32_t* x = a + static_cast<std::size_t>(b) * 2 * len + static_cast<std::size_t>(c) * kChunk;
      std::uint32_t* y = x + len;
      const std::uint32_t h = tw.hi[static_cast<std::size_t>(c)];
      const std::uint32_t* lo = tw.lo.data();
      if (forward) {
        for (std::size_t j = 0; j < kChunk; ++j) {
          const std::uint32_t w = m_.mont_mul(h, lo[j]);
          const std::uint32_t u = x[j];
          const std::uint32_t v = y[j];
          x[j] = m_.add(u, v);
          y[j] = m_.mont_mul(m_.sub(u, v), w);
        }
      } else {
        for (std::size_t j = 0; j < kChunk; ++j) {
          const std::uint32_t w = m_.mont_mul(h, lo[j]);
          const std::uint32_t u = x[j];
          const std::uint32_t v = m_.mont_mul(y[j], w);
          x[j] = m_.add(u, v);
          y[j] = m_.sub(u, v);
        }
      }
    }
  }
}

void Transform::forward(std::span<std::uint32_t> a) const {
  if (a.size() != size()) throw std::invalid_argument("NTT buffer length mismatch");
  for (unsigned lg = log_; lg-- > kBlockLog;) {
    big_level(a.data(), std::size_t{1} << lg, big_fwd_[lg - kBlockLog], true);
  }
  const std::size_t block = std::min(size(), kBlock);
  const auto nblocks = static_cast<std::int64_t>(size() / block);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    small_levels_forward(a.data() + static_cast<std::size_t>(b) * block, block);
  }
}

void Transform::inverse(std::span<std::uint32_t> a) const {
  if (a.size() != size()) throw std::invalid_argument("NTT buffer length mismatch");
  const std::size_t block = std::min(size(), kBlock);
  const auto nblocks = static_cast<std::int64_t>(size() / block);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    small_levels_inverse(a.data() + static_cast<std::size_t>(b) * block, block);
  }
  for (unsigned lg = kBlockLog; lg < log_; ++lg) {
    big_level(a.data(), std::size_t{1} << lg, big_inv_[lg - kBlockLog], false);
  }
}

void Transform::pointwise(std::span<std::uint32_t> a, std::span<const std::uint32_t> b,
                          std::uint32_t factor) const {
  const std::uint32_t f = m_.to_mont(m_.to_mont(factor));
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    a[i] = m_.mont_mul(m_.mont_mul(a[i], b[i]), f);
  }
}

void Transform::pointwise_square(std::span<std::uint32_t> a, std::uint32_t factor) const {
  const std::uint32_t f = m_.to_mont(m_.to_mont(factor));
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    a[i] = m_.mont_mul(m_.mont_mul(a[i], a[i]), f);
  }
}

std::vector<std::uint32_t> multiply_truncated(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                                              std::size_t n, std::uint32_t prime) {
  const std::size_t la = std::min(a.size(), n);
  const std::size_t lb = std::min(b.size(), n);
  if (la == 0 || lb == 0 || n == 0) return std::vector<std::uint32_t>(n, 0);
  const std::size_t full = std::min(la + lb - 1, n);
  const std::size_t len = std::bit_ceil(la + lb - 1);
  const auto lg = static_cast<unsigned>(std::countr_zero(len));
  if (lg > kMaxLog) {
    throw CapacityError("truncated product of length " + std::to_string(la + lb - 1) +
                        " exceeds NTT capacity 2^" + std::to_string(kMaxLog));
  }
  const Transform tr(prime, lg);
  std::vector<std::uint32_t> fa(len, 0), fb(len, 0);
  std::copy_n(a.begin(), la, fa.begin());
  std::copy_n(b.begin(), lb, fb.begin());
  tr.forward(fa);
  tr.forward(fb);
  tr.pointwise(fa, fb, tr.field().inverse(static_cast<std::uint32_t>(len % prime)));
  tr.inverse(fa);
  fa.resize(n, 0);
  std::fill(fa.begin() + static_cast<std::ptrdiff_t>(full), fa.end(), 0);
  return fa;
}

void square_truncated_inplace(std::vector<std::uint32_t>& buf, std::vector<std::uint32_t>& scratch, std::size_t n,
                              const Transform& tr) {
  const std::size_t len = tr.size();
  if (buf.size() != len || scratch.size() != len || n > len) {
    throw std::invalid_argument("square_truncated_inplace: buffer/transform size mismatch");
  }
  if (n == 0) return;
  if (n == 1) {
    buf[0] = tr.field().mul(buf[0], buf[0]);
    std::fill(buf.begin() + 1, buf.end(), 0);
    return;
  }
  // S = A0 + x^h A1;  S^2 mod x^n = A0^2 + 2 x^h A0 A1 (mod x^n)
  const std::size_t h = (n + 1) / 2;
  std::fill(scratch.begin(), scratch.end(), 0);
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(h), buf.begin() + static_cast<std::ptrdiff_t>(n),
            scratch.begin());
  std::fill(buf.begin() + static_cast<std::ptrdiff_t>(h), buf.end(), 0);
  tr.forward(buf);
  tr.forward(scratch);
  const Montgomery& f = tr.field();
  const std::uint32_t inv_len = f.inverse(static_cast<std::uint32_t>(len % f.mod));
  tr.pointwise(scratch, buf, f.add(inv_len, inv_len));
  tr.pointwise_square(buf, inv_len);
  tr.inverse(buf);
  tr.inverse(scratch);
  for (std::size_t k = h; k < n; ++k) buf[k] = f.add(buf[k], scratch[k - h]);
  std::fill(buf.begin() + static_cast<std::ptrdiff_t>(n), buf.end(), 0);
}

namespace reference {

void transform(std::vector<std::uint32_t>& a, std::uint32_t prime, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const std::uint64_t g = primitive_root(prime);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    std::uint64_t w = powmod64(g, (prime - 1) / len, prime);
    if (invert) w = powmod64(w, prime - 2, prime);
    for (std::size_t i = 0; i < n; i += len) {
      std::uint64_t wn = 1;
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::uint64_t u = a[i + j];
        const std::uint64_t v = a[i + j + len / 2] * wn % prime;
        a[i + j] = static_cast<std::uint32_t>((u + v) % prime);
        a[i + j + len / 2] = static_cast<std::uint32_t>((u + prime - v) % prime);
        wn = wn * w % prime;
      }
    }
  }
  if (invert) {
    const std::uint64_t ninv = powmod64(n % prime, prime - 2, prime);
    for (auto& x : a) x = static_cast<std::uint32_t>(x * ninv % prime);
  }
}

std::vector<std::uint32_t> multiply(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                    std::uint32_t prime) {
  if (a.empty() || b.empty()) return {};
  const std::size_t need = a.size() + b.size() - 1;
  const std::size_t n = std::bit_ceil(need);
  std::vector<std::uint32_t> fa(a), fb(b);
  fa.resize(n, 0);
  fb.resize(n, 0);
  transform(fa, prime, false);
  transform(fb, prime, false);
  for (std::size_t i = 0; i < n; ++i) fa[i] = static_cast<std::uint32_t>(std::uint64_t{fa[i]} * fb[i] % prime);
  transform(fa, prime, true);
  fa.resize(need);
  return fa;
}

}  // namespace reference
}  // namespace hsgn::ntt
