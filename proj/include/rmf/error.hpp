#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rmf {

enum class ErrorKind {
  InvalidInput,
  NumericalFailure,
  ConvergenceFailure,
  DegenerateInput,
  Undefined,
  RoutedElsewhere,
  UnsupportedFormat,
  CorruptArchive,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& w) : Error(ErrorKind::InvalidInput, w) {}
};

struct NumericalFailure : Error {
  explicit NumericalFailure(const std::string& w) : Error(ErrorKind::NumericalFailure, w) {}
};

struct DegenerateInput : Error {
  explicit DegenerateInput(const std::string& w) : Error(ErrorKind::DegenerateInput, w) {}
};

struct Undefined : Error {
  explicit Undefined(const std::string& w) : Error(ErrorKind::Undefined, w) {}
};

struct RoutedElsewhere : Error {
  explicit RoutedElsewhere(const std::string& w) : Error(ErrorKind::RoutedElsewhere, w) {}
};

struct UnsupportedFormat : Error {
  explicit UnsupportedFormat(const std::string& w) : Error(ErrorKind::UnsupportedFormat, w) {}
};

/// Structural violation inside an archive; `offset` is the byte where reading failed.
struct CorruptArchive : Error {
  CorruptArchive(const std::string& w, std::uint64_t off)
      : Error(ErrorKind::CorruptArchive, w + " (at byte " + std::to_string(off) + ")"), offset(off) {}
  std::uint64_t offset;
};

/// An iterative solver ran out of iterations. Carries the last iterate so callers can inspect it.
struct ConvergenceFailure : Error {
  ConvergenceFailure(const std::string& w, Eigen::MatrixXd last, double res, int iters)
      : Error(ErrorKind::ConvergenceFailure, w), last_iterate(std::move(last)), residual(res), iterations(iters) {}
  Eigen::MatrixXd last_iterate;
  double residual;
  int iterations;
};

}  // namespace rmf
