#include "rmf/error.hpp"

namespace rmf {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::Undefined: return "Undefined";
    case ErrorKind::RoutedElsewhere: return "RoutedElsewhere";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::CorruptArchive: return "CorruptArchive";
  }
  return "Unknown";
}

}  // namespace rmf
