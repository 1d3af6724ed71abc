#pragma once

#include <stdexcept>
#include <string>

namespace nonconc {

// Input/data problems (bad CSV, missing columns, empty subsets...). CLI exit code 2.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (singular designs, separation, positivity...). CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad invocations / config (CLI exit code 1).
class usage_error : public std::runtime_error {
 public:
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nonconc
