#pragma once

#include <stdexcept>
#include <string>

namespace ionprobe {

/// Conversion between units of different physical dimension.
class unit_error : public std::invalid_argument {
 public:
  explicit unit_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Invalid, missing, or unknown configuration input. The message names the
/// offending key (and line, where one exists) so the CLI can surface it as-is.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver exhausted its budget without reaching tolerance.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  /// Residual norm at the point of giving up.
  double residual() const noexcept { return residual_; }

 private:
  double residual_ = 0.0;
};

/// Linear system too ill-conditioned (or model too degenerate) to proceed.
class conditioning_error : public std::runtime_error {
 public:
  explicit conditioning_error(const std::string& what) : std::runtime_error(what) {}
};

/// File could not be opened, read, or written.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ionprobe
