#include "tricam/error.hpp"

namespace tricam {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNoObservation: return "no-observation";
    case ErrorKind::kUnderdetermined: return "underdetermined";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kNoIntersection: return "no-intersection";
    case ErrorKind::kEmptyDataset: return "empty-dataset";
    case ErrorKind::kBadArchitecture: return "bad-architecture";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kUnsorted: return "unsorted";
    case ErrorKind::kMalformed: return "malformed";
    case ErrorKind::kConfigMismatch: return "config-mismatch";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace tricam
