#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace msb {

// Machine-readable error codes. The names are part of the service wire format.
enum class ErrorCode {
  // sketchbook-core
  SchemaMismatch,
  DuplicateGroundTruth,
  EmptyDatasets,
  HeaderMissingField,
  BadNumeric,
  GroundTruthOutOfRange,
  EmptyFile,
  VersionMismatch,
  CorruptDocument,
  DuplicateId,
  InvalidId,
  // scorer-backends
  EmptyBatch,
  EmptyTerm,
  EndpointUnreachable,
  EndpointError,
  RetriesExhausted,
  DimensionMismatch,
  ZeroVector,
  MissingRowEmbedding,
  TermEmbeddingUnavailable,
  MissingCredentials,
  BadSidecar,
  // concept-engine
  UnknownField,
  UnknownBackend,
  KindMismatch,
  UnknownConcept,
  AmbiguousConcept,
  UnknownDataset,
  EmptyScores,
  BadBounds,
  InconsistentTransforms,
  NonBinaryChild,
  TooFewChildren,
  CycleDetected,
  ConceptInUse,
  // sketch-aggregators
  NoGroundTruth,
  TooFewRows,
  DegenerateTarget,
  LengthMismatch,
  UnknownSketch,
  BadHyperparameter,
  // evaluation
  EmptyInput,
  SingleClass,
  UnknownSortColumn,
  UnlabeledDataset,
  TooFewSketches,
  ValueOutOfRange,
  // workflow-helpers
  UnknownSubject,
  // service / cli
  UnknownSketchbook,
  UnknownJob,
  BadRequest,
  NotFound,
  BadConfig,
  IoError,
  ScoresPending,
  BindFailure,
  DataDirUnwritable,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {},
        std::optional<long long> detail = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  // Offending field path, e.g. "schema.overall_rating" or a column name.
  const std::string& field() const noexcept { return field_; }
  // Numeric detail: row index, HTTP status or missing embedding row.
  std::optional<long long> detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string field_;
  std::optional<long long> detail_;
};

}  // namespace msb
