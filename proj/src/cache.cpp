#include "hsgn/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "hsgn/error.hpp"
#include "hsgn/primes.hpp"

namespace hsgn {
namespace {

constexpr char kMagic[4] = {'H', 'S', 'G', 'N'};
constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 2 + 8;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(const unsigned char* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    buf_.reserve(kFlush + 64);
  }

  template <typename T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    if constexpr (std::is_floating_point_v<T>) {
      put(std::bit_cast<std::uint64_t>(v));
      return;
    } else {
      using U = std::make_unsigned_t<T>;
      auto u = static_cast<U>(v);
      for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    }
    bytes(b, sizeof(T));
  }

  void bytes(const unsigned char* p, std::size_t n) {
    buf_.insert(buf_.end(), p, p + n);
    if (buf_.size() >= kFlush) flush();
  }

  void finish() {
    flush();
    const std::uint64_t h = hash_;
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(h >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
    out_.flush();
    if (!out_) throw std::runtime_error("write failed");
  }

 private:
  static constexpr std::size_t kFlush = 1 << 20;

  void flush() {
    hash_ = fnv1a(buf_.data(), buf_.size(), hash_);
    out_.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }

  std::ofstream out_;
  std::vector<unsigned char> buf_;
  std::uint64_t hash_ = kFnvOffset;
};

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), end_(p + n) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    p_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(u);
    } else {
      return static_cast<T>(static_cast<std::make_unsigned_t<T>>(u));
    }
  }

  const unsigned char* take(std::size_t n) {
    need(n);
    const unsigned char* q = p_;
    p_ += n;
    return q;
  }

  bool done() const { return p_ == end_; }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw FormatError("coefficient cache is truncated");
  }

  const unsigned char* p_;
  const unsigned char* end_;
};

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open coefficient cache " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> data(size);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError("short read on " + path.string());
  return data;
}

class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

void write_table(const std::filesystem::path& path, const PrimeEigenvalueTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FileLock lock(path.string() + ".lock");
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    Writer w(tmp);
    w.bytes(reinterpret_cast<const unsigned char*>(kMagic), 4);
    w.put<std::uint16_t>(kCacheVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(table.kind));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(table.weight));
    w.put<std::uint64_t>(table.limit);
    const bool has_exact = !table.exact.empty();
    std::vector<unsigned char> mag;
    for (std::size_t i = 0; i < table.size(); ++i) {
      w.put<std::uint64_t>(table.primes[i]);
      w.put<double>(table.lambda[i]);
      w.put<std::uint8_t>(has_exact ? 1 : 0);
      if (!has_exact) continue;
      const mpz_srcptr z = table.exact[i].get_mpz_t();
      std::size_t count = 0;
      mag.resize(mpz_sizeinbase(z, 256) + 1);
      mpz_export(mag.data(), &count, -1, 1, 0, 0, z);
      const auto len = static_cast<std::int16_t>(mpz_sgn(z) < 0 ? -static_cast<int>(count) : static_cast<int>(count));
      w.put<std::int16_t>(len);
      w.bytes(mag.data(), count);
    }
    w.finish();
  }
  std::filesystem::rename(tmp, path);
}

PrimeEigenvalueTable read_table(const std::filesystem::path& path, bool keep_exact) {
  auto data = slurp(path);
  if (data.size() < kHeaderSize + 8) throw FormatError("coefficient cache " + path.string() + " is truncated");
  if (std::memcmp(data.data(), kMagic, 4) != 0) throw FormatError(path.string() + ": bad magic, not an HSGN cache");
  const std::size_t body = data.size() - 8;
  Reader trailer(data.data() + body, 8);
  if (trailer.get<std::uint64_t>() != fnv1a(data.data(), body)) {
    throw FormatError(path.string() + ": checksum mismatch (corrupted or truncated cache)");
  }
  Reader r(data.data(), body);
  r.take(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kCacheVersion) {
    throw FormatError(path.string() + ": cache version " + std::to_string(version) + ", expected " +
                      std::to_string(kCacheVersion));
  }
  PrimeEigenvalueTable t;
  const auto kind = r.get<std::uint8_t>();
  if (kind > static_cast<std::uint8_t>(FormKind::VanishingModel)) throw FormatError("unknown form kind tag");
  t.kind = static_cast<FormKind>(kind);
  t.weight = r.get<std::uint16_t>();
  t.limit = r.get<std::uint64_t>();
  if (t.kind == FormKind::CMCurve) t.bad_primes = {2};

  BigInt a;
  bool any_exact = false;
  while (!r.done()) {
    const auto p = r.get<std::uint64_t>();
    if (p > t.limit || (!t.primes.empty() && p <= t.primes.back())) {
      throw FormatError(path.string() + ": records out of order or beyond the limit");
    }
    t.primes.push_back(p);
    t.lambda.push_back(r.get<double>());
    const auto has_exact = r.get<std::uint8_t>();
    if (has_exact > 1) throw FormatError("bad has_exact flag");
    if (has_exact == 0) {
      if (any_exact) throw FormatError("mixed exact and inexact records");
      continue;
    }
    if (!any_exact && t.primes.size() > 1) throw FormatError("mixed exact and inexact records");
    any_exact = true;
    const auto len = r.get<std::int16_t>();
    const std::size_t count = static_cast<std::size_t>(len < 0 ? -len : len);
    const unsigned char* bytes = r.take(count);
    mpz_import(a.get_mpz_t(), count, -1, 1, 0, 0, bytes);
    if (len < 0) a = -a;
    t.zero_period.push_back(zero_period_for(a, p, t.weight));
    if (keep_exact) t.exact.push_back(a);
  }
  if (t.primes.size() != primes_up_to(t.limit).size()) {
    throw FormatError(path.string() + ": prime list incomplete for limit " + std::to_string(t.limit));
  }
  return t;
}

bool cache_valid(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return false;
  try {
    read_table(path, false);
    return true;
  } catch (const FormatError&) {
    return false;
  }
}

std::string cache_file_name(const FormSpec& form, std::uint64_t P, const std::string& schedule_name) {
  std::string name(form_kind_name(form.kind));
  if (form.kind == FormKind::Delta || form.kind == FormKind::CMCurve) {
    name += "-w" + std::to_string(form.weight);
  } else {
    name += "-s" + std::to_string(form.seed);
  }
  if (form.kind == FormKind::VanishingModel && !schedule_name.empty()) {
    std::string s = schedule_name;
    for (char& c : s) {
      if (c == ':') c = '_';
    }
    name += "-" + s;
  }
  return name + "-P" + std::to_string(P) + ".hsgn";
}

}  // namespace hsgn
