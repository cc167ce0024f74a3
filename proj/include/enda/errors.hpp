#pragma once

#include <stdexcept>
#include <string>

namespace enda {

/// Configuration file / preset / CLI argument problems.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A state, member, or trajectory became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long index)
      : std::runtime_error(what), index_(index) {}
  /// Step or cycle at which the blow-up was detected (-1 if unknown).
  long index() const noexcept { return index_; }

 private:
  long index_;
};

/// An innovation covariance stayed non-factorizable through the jitter ladder.
class SingularCovarianceError : public std::runtime_error {
 public:
  explicit SingularCovarianceError(const std::string& what)
      : std::runtime_error(what) {}
};

/// A normal-score fit was requested on an all-equal sample.
class DegenerateSampleError : public std::runtime_error {
 public:
  explicit DegenerateSampleError(const std::string& what)
      : std::runtime_error(what) {}
};

/// File I/O failure, message carries the offending path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace enda
