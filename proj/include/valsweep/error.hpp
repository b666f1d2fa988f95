#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace valsweep {

enum class ErrorKind {
  kInvalidArgument,
  // tabular
  kFileUnreadable,
  kMissingTargetColumn,
  kNonBinaryTarget,
  kSingleClassTarget,
  kMalformedCsv,
  // partition
  kDegenerateSplit,
  kTooManyFolds,
  kBadK,
  // metrics
  kLengthMismatch,
  kEmptyInput,
  kOutOfRangeProbability,
  // pipeline
  kEmptyTrainingSet,
  kSingleClassTraining,
  kSchemaMismatch,
  // classifiers
  kNonFiniteFeature,
  kWidthMismatch,
  kNumericalFailure,
  // evaluator
  kAllCandidatesFailed,
  // report / cli
  kUnknownFormat,
  kMissingArtifacts,
  kCorruptLog,
  kConfigError,
};

std::string_view error_kind_name(ErrorKind kind);

// Single exception type for the library; `kind()` carries the taxonomy.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace valsweep
