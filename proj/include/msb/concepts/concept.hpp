#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "msb/core/json.hpp"

namespace msb::concepts {

enum class OutputKind { Binary, Continuous };

std::string_view to_string(OutputKind kind);
std::optional<OutputKind> output_kind_from_string(std::string_view name);

struct Normalize {
  bool operator==(const Normalize&) const = default;
};
struct Calibrate {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Calibrate&) const = default;
};
struct Binarize {
  double threshold = 0.5;
  bool operator==(const Binarize&) const = default;
};
using Transform = std::variant<Normalize, Calibrate, Binarize>;

enum class LogicOp { And, Or };

std::string_view to_string(LogicOp op);
std::optional<LogicOp> logic_op_from_string(std::string_view name);

// An atomic concept scores one input field through one backend and then runs
// its transform chain. A compound concept combines binary children with
// AND / OR and carries no backend, field or transforms.
struct Concept {
  std::string id;
  std::string term;
  std::string input_field;
  std::string backend_id;
  OutputKind output_kind = OutputKind::Continuous;
  std::vector<Transform> transforms;
  std::optional<LogicOp> op;
  std::vector<std::string> children;

  bool is_compound() const noexcept { return op.has_value(); }
};

struct ConceptScores {
  std::string concept_id;
  std::string dataset;
  std::vector<double> scores;  // aligned to dataset row index
  std::size_t warnings = 0;
  std::string cache_key;
};

// Backend output before transforms, cached per (backend, term, field, dataset).
struct RawScores {
  std::vector<double> scores;
  std::size_t warnings = 0;
};

struct ScoreCache {
  std::map<std::string, RawScores> raw;
  // Memo of transformed / compound scores keyed by the full cache key.
  std::map<std::string, ConceptScores> transformed;
};

// --- transforms ---

// (x - min) / (max - min); all 0.5 when max == min. Throws EmptyScores.
std::vector<double> normalize(std::span<const double> scores);
// Clamp to [lo, hi] then rescale to [0, 1]. Throws BadBounds unless lo < hi.
std::vector<double> calibrate(std::span<const double> scores, double lo, double hi);
// 1.0 iff x >= threshold.
std::vector<double> binarize(std::span<const double> scores, double threshold);

// Throws BadBounds for an invalid calibrate step or a non-finite threshold.
void validate_chain(const std::vector<Transform>& chain);
// Left-to-right application. An empty score vector passes through unchanged.
std::vector<double> apply_chain(std::vector<double> scores, const std::vector<Transform>& chain);
// Stable textual identity of a chain, used in cache keys.
std::string chain_fingerprint(const std::vector<Transform>& chain);

// Elementwise all-of / any-of over binary children of equal length.
std::vector<double> combine(LogicOp op, const std::vector<std::vector<double>>& children);

Json to_json(const Transform& t);
Transform transform_from_json(const Json& j);
Json to_json(const Concept& c);
Concept concept_from_json(const Json& j);

}  // namespace msb::concepts
