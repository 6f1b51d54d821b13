#include "msb/core/error.hpp"

#include <array>
#include <utility>

namespace msb {
namespace {

constexpr std::array kNames = {
    std::pair{ErrorCode::SchemaMismatch, "SchemaMismatch"},
    std::pair{ErrorCode::DuplicateGroundTruth, "DuplicateGroundTruth"},
    std::pair{ErrorCode::EmptyDatasets, "EmptyDatasets"},
    std::pair{ErrorCode::HeaderMissingField, "HeaderMissingField"},
    std::pair{ErrorCode::BadNumeric, "BadNumeric"},
    std::pair{ErrorCode::GroundTruthOutOfRange, "GroundTruthOutOfRange"},
    std::pair{ErrorCode::EmptyFile, "EmptyFile"},
    std::pair{ErrorCode::VersionMismatch, "VersionMismatch"},
    std::pair{ErrorCode::CorruptDocument, "CorruptDocument"},
    std::pair{ErrorCode::DuplicateId, "DuplicateId"},
    std::pair{ErrorCode::InvalidId, "InvalidId"},
    std::pair{ErrorCode::EmptyBatch, "EmptyBatch"},
    std::pair{ErrorCode::EmptyTerm, "EmptyTerm"},
    std::pair{ErrorCode::EndpointUnreachable, "EndpointUnreachable"},
    std::pair{ErrorCode::EndpointError, "EndpointError"},
    std::pair{ErrorCode::RetriesExhausted, "RetriesExhausted"},
    std::pair{ErrorCode::DimensionMismatch, "DimensionMismatch"},
    std::pair{ErrorCode::ZeroVector, "ZeroVector"},
    std::pair{ErrorCode::MissingRowEmbedding, "MissingRowEmbedding"},
    std::pair{ErrorCode::TermEmbeddingUnavailable, "TermEmbeddingUnavailable"},
    std::pair{ErrorCode::MissingCredentials, "MissingCredentials"},
    std::pair{ErrorCode::BadSidecar, "BadSidecar"},
    std::pair{ErrorCode::UnknownField, "UnknownField"},
    std::pair{ErrorCode::UnknownBackend, "UnknownBackend"},
    std::pair{ErrorCode::KindMismatch, "KindMismatch"},
    std::pair{ErrorCode::UnknownConcept, "UnknownConcept"},
    std::pair{ErrorCode::AmbiguousConcept, "AmbiguousConcept"},
    std::pair{ErrorCode::UnknownDataset, "UnknownDataset"},
    std::pair{ErrorCode::EmptyScores, "EmptyScores"},
    std::pair{ErrorCode::BadBounds, "BadBounds"},
    std::pair{ErrorCode::InconsistentTransforms, "InconsistentTransforms"},
    std::pair{ErrorCode::NonBinaryChild, "NonBinaryChild"},
    std::pair{ErrorCode::TooFewChildren, "TooFewChildren"},
    std::pair{ErrorCode::CycleDetected, "CycleDetected"},
    std::pair{ErrorCode::ConceptInUse, "ConceptInUse"},
    std::pair{ErrorCode::NoGroundTruth, "NoGroundTruth"},
    std::pair{ErrorCode::TooFewRows, "TooFewRows"},
    std::pair{ErrorCode::DegenerateTarget, "DegenerateTarget"},
    std::pair{ErrorCode::LengthMismatch, "LengthMismatch"},
    std::pair{ErrorCode::UnknownSketch, "UnknownSketch"},
    std::pair{ErrorCode::BadHyperparameter, "BadHyperparameter"},
    std::pair{ErrorCode::EmptyInput, "EmptyInput"},
    std::pair{ErrorCode::SingleClass, "SingleClass"},
    std::pair{ErrorCode::UnknownSortColumn, "UnknownSortColumn"},
    std::pair{ErrorCode::UnlabeledDataset, "UnlabeledDataset"},
    std::pair{ErrorCode::TooFewSketches, "TooFewSketches"},
    std::pair{ErrorCode::ValueOutOfRange, "ValueOutOfRange"},
    std::pair{ErrorCode::UnknownSubject, "UnknownSubject"},
    std::pair{ErrorCode::UnknownSketchbook, "UnknownSketchbook"},
    std::pair{ErrorCode::UnknownJob, "UnknownJob"},
    std::pair{ErrorCode::BadRequest, "BadRequest"},
    std::pair{ErrorCode::NotFound, "NotFound"},
    std::pair{ErrorCode::BadConfig, "BadConfig"},
    std::pair{ErrorCode::IoError, "IoError"},
    std::pair{ErrorCode::ScoresPending, "ScoresPending"},
    std::pair{ErrorCode::BindFailure, "BindFailure"},
    std::pair{ErrorCode::DataDirUnwritable, "DataDirUnwritable"},
};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

Error::Error(ErrorCode code, const std::string& message, std::string field,
             std::optional<long long> detail)
    : std::runtime_error(message),
      code_(code),
      field_(std::move(field)),
      detail_(detail) {}

}  // namespace msb
