#pragma once

// Binary coefficient cache.
//
//   "HSGN" | u16 version | u8 kind | u16 weight | u64 limit
//   records: u64 p | f64 lambda (bit pattern) | u8 has_exact
//            [i16 signed byte length | magnitude bytes, little-endian]
//   trailer: u64 FNV-1a of everything before it
//
// All integers are little-endian. Writers go through a temporary file and a
// rename under an advisory lock, so readers never see a partial file.

#include <cstdint>
#include <filesystem>
#include <string>

#include "hsgn/coeffs.hpp"

namespace hsgn {

inline constexpr std::uint16_t kCacheVersion = 1;

void write_table(const std::filesystem::path& path, const PrimeEigenvalueTable& table);

// Throws FormatError on a bad magic, version, checksum, truncation or an
// incomplete prime list. keep_exact = false still derives zero periods.
PrimeEigenvalueTable read_table(const std::filesystem::path& path, bool keep_exact = true);

// True when the file exists and passes every integrity check.
bool cache_valid(const std::filesystem::path& path);

// e.g. delta-w12-P1000000.hsgn, satotate-s42-P100000.hsgn
std::string cache_file_name(const FormSpec& form, std::uint64_t P, const std::string& schedule_name = "");

}  // namespace hsgn
