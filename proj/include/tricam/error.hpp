#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tricam {

enum class ErrorKind {
  kNoObservation,
  kUnderdetermined,
  kDegenerate,
  kNoIntersection,
  kEmptyDataset,
  kBadArchitecture,
  kShapeMismatch,
  kDiverged,
  kUnsorted,
  kMalformed,
  kConfigMismatch,
  kInvalidArgument,
  kIo,
};

// Stable tag used in diagnostics and by tests ("underdetermined", ...).
std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind tag, for re-wrapping with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace tricam
