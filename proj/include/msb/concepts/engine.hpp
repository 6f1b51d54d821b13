#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msb/concepts/concept.hpp"
#include "msb/core/sketchbook.hpp"
#include "msb/core/table.hpp"
#include "msb/scoring/backend.hpp"

namespace msb::concepts {

struct ConceptSpec {
  std::string term;
  std::string input_field;
  std::string backend_id;
  std::optional<OutputKind> output_kind;  // derived from backend and chain when absent
  std::vector<Transform> transforms;
  std::string id;  // generated when empty
};

struct CreatedConcept {
  Concept concept_def;
  std::optional<ConceptScores> scores;
};

// "train" when present, otherwise the first dataset by name.
std::string default_dataset(const core::Sketchbook& sb);

// Looks a concept up by id, then by term when exactly one concept has it.
const Concept& resolve_concept(const core::Sketchbook& sb, std::string_view ref);

// Validates the spec, scores it on `dataset` (unless compute_scores is false),
// then registers it and appends a history event. Nothing is registered when
// validation or scoring fails.
CreatedConcept create_concept(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                              const ConceptSpec& spec, const std::string& dataset = {},
                              bool compute_scores = true);

// Throws TooFewChildren, UnknownConcept, NonBinaryChild or CycleDetected.
Concept create_compound(core::Sketchbook& sb, LogicOp op, const std::vector<std::string>& child_refs,
                        std::string id = {});

struct ScoreOptions {
  bool rescore = false;  // ignore cached raw scores and call the backend again
};

ConceptScores score_concept(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                            std::string_view concept_ref, const std::string& dataset,
                            ScoreOptions options = {});

// Rows sorted by concept score; ties keep ascending row index.
core::Table concept_view(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                         std::string_view concept_ref, const std::string& dataset,
                         bool descending = true);

// Scores of an atomic concept under a different transform chain, computed from
// the cached raw scores. Nothing is stored; the backend is only called when the
// raw scores are not cached yet.
ConceptScores preview_transforms(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                                 std::string_view concept_ref, const std::string& dataset,
                                 const std::vector<Transform>& chain);

// Replaces the chain of an atomic concept. Throws InconsistentTransforms when
// the concept feeds a compound and would stop being binary.
const Concept& set_transforms(core::Sketchbook& sb, std::string_view concept_ref,
                              std::vector<Transform> chain,
                              std::optional<OutputKind> output_kind = std::nullopt);

// Throws ConceptInUse while a sketch or compound references the concept.
void delete_concept(core::Sketchbook& sb, std::string_view concept_ref);

// --- two-phase scoring, for callers that must not hold the sketchbook while
// a slow backend runs ---

struct RawScoreTask {
  std::string raw_key;
  scoring::BackendConfig backend;
  scoring::ScoreRequest request;
};

std::string raw_cache_key(const Concept& c, const std::string& dataset);
std::string cache_key(const core::Sketchbook& sb, const Concept& c, const std::string& dataset);

// Backend calls still needed before `concept_ref` can be assembled on `dataset`.
std::vector<RawScoreTask> pending_tasks(const core::Sketchbook& sb, std::string_view concept_ref,
                                        const std::string& dataset, bool rescore = false);
RawScores run_task(scoring::ScorerRegistry& scorers, const RawScoreTask& task);
void store_raw(core::Sketchbook& sb, const RawScoreTask& task, RawScores raw);

}  // namespace msb::concepts
