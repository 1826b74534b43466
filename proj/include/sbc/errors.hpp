#pragma once

#include <stdexcept>
#include <string>

namespace sbc {

// Error categories mirror the CLI exit-code contract: UsageError -> 2,
// DataError -> 3, NumericError -> 4. Anything thrown below the CLI belongs
// to one of these.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sbc
