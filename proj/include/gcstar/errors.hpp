#pragma once

#include <stdexcept>
#include <string>

namespace gcstar {

// Invalid argument values (out-of-domain parameters, malformed specs, bad files).
class DomainError : public std::invalid_argument {
public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// An iterative numeric routine failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A truncated series hit its term cap before the tolerance was met.
class TruncationError : public std::runtime_error {
public:
  explicit TruncationError(const std::string& what) : std::runtime_error(what) {}
};

// Sparse factorization failure (indefinite or singular system).
class FactorizationError : public std::runtime_error {
public:
  explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gcstar
