#pragma once

#include <stdexcept>
#include <string>

namespace hsgn {

// Requested size exceeds a table, series, or memory guard.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Fixed-width integer arithmetic would overflow.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Malformed or corrupted on-disk data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsgn
