#pragma once

#include <stdexcept>
#include <string>

namespace recount {

// Input data violates the file schema or a dataset invariant.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A requested statistic has no defined value (constant input, empty
// stratum, window larger than the data, ...).
class UndefinedError : public std::runtime_error {
 public:
  explicit UndefinedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace recount
