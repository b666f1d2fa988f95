#include <cmath>
#include <limits>

#include "valsweep/error.hpp"
#include "valsweep/random.hpp"

namespace valsweep {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kFileUnreadable: return "FileUnreadable";
    case ErrorKind::kMissingTargetColumn: return "MissingTargetColumn";
    case ErrorKind::kNonBinaryTarget: return "NonBinaryTarget";
    case ErrorKind::kSingleClassTarget: return "SingleClassTarget";
    case ErrorKind::kMalformedCsv: return "MalformedCsv";
    case ErrorKind::kDegenerateSplit: return "DegenerateSplit";
    case ErrorKind::kTooManyFolds: return "TooManyFolds";
    case ErrorKind::kBadK: return "BadK";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kOutOfRangeProbability: return "OutOfRangeProbability";
    case ErrorKind::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::kSingleClassTraining: return "SingleClassTraining";
    case ErrorKind::kSchemaMismatch: return "SchemaMismatch";
    case ErrorKind::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::kWidthMismatch: return "WidthMismatch";
    case ErrorKind::kNumericalFailure: return "NumericalFailure";
    case ErrorKind::kAllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorKind::kUnknownFormat: return "UnknownFormat";
    case ErrorKind::kMissingArtifacts: return "MissingArtifacts";
    case ErrorKind::kCorruptLog: return "CorruptLog";
    case ErrorKind::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  // Reject the low tail so every residue is equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Marsaglia polar method.
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

}  // namespace valsweep
