#include "msb/concepts/concept.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "msb/core/error.hpp"

namespace msb::concepts {
namespace {

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

}  // namespace

std::string_view to_string(OutputKind kind) {
  return kind == OutputKind::Binary ? "binary" : "continuous";
}

std::optional<OutputKind> output_kind_from_string(std::string_view name) {
  const auto s = lower(name);
  if (s == "binary") return OutputKind::Binary;
  if (s == "continuous") return OutputKind::Continuous;
  return std::nullopt;
}

std::string_view to_string(LogicOp op) { return op == LogicOp::And ? "AND" : "OR"; }

std::optional<LogicOp> logic_op_from_string(std::string_view name) {
  const auto s = lower(name);
  if (s == "and") return LogicOp::And;
  if (s == "or") return LogicOp::Or;
  return std::nullopt;
}

std::vector<double> normalize(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyScores, "cannot normalize an empty score vector");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo;
  const double range = *hi - min;
  std::vector<double> out(scores.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      out[i] = std::clamp((scores[i] - min) / range, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> calibrate(std::span<const double> scores, double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::BadBounds, "calibration needs lo < hi", "transforms");
  }
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = (std::clamp(scores[i], lo, hi) - lo) / (hi - lo);
  }
  return out;
}

std::vector<double> binarize(std::span<const double> scores, double threshold) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1.0 : 0.0;
  return out;
}

void validate_chain(const std::vector<Transform>& chain) {
  for (const auto& t : chain) {
    if (const auto* c = std::get_if<Calibrate>(&t)) {
      if (!(c->lo < c->hi) || !std::isfinite(c->lo) || !std::isfinite(c->hi)) {
        throw Error(ErrorCode::BadBounds, "calibration needs lo < hi", "transforms");
      }
    } else if (const auto* b = std::get_if<Binarize>(&t)) {
      if (!std::isfinite(b->threshold)) {
        throw Error(ErrorCode::BadBounds, "binarize threshold must be finite", "transforms");
      }
    }
  }
}

std::vector<double> apply_chain(std::vector<double> scores, const std::vector<Transform>& chain) {
  if (scores.empty()) return scores;
  for (const auto& t : chain) {
    if (std::holds_alternative<Normalize>(t)) {
      scores = normalize(scores);
    } else if (const auto* c = std::get_if<Calibrate>(&t)) {
      scores = calibrate(scores, c->lo, c->hi);
    } else {
      scores = binarize(scores, std::get<Binarize>(t).threshold);
    }
  }
  return scores;
}

std::string chain_fingerprint(const std::vector<Transform>& chain) {
  Json j = Json::array();
  for (const auto& t : chain) j.push_back(to_json(t));
  return j.dump();
}

std::vector<double> combine(LogicOp op, const std::vector<std::vector<double>>& children) {
  if (children.size() < 2) {
    throw Error(ErrorCode::TooFewChildren, "compound concepts need at least two children");
  }
  const std::size_t n = children.front().size();
  std::vector<double> out(n, op == LogicOp::And ? 1.0 : 0.0);
  for (const auto& child : children) {
    if (child.size() != n) throw Error(ErrorCode::LengthMismatch, "child score lengths differ");
    for (std::size_t i = 0; i < n; ++i) {
      const bool v = child[i] >= 0.5;
      if (op == LogicOp::And && !v) out[i] = 0.0;
      if (op == LogicOp::Or && v) out[i] = 1.0;
    }
  }
  return out;
}

Json to_json(const Transform& t) {
  if (std::holds_alternative<Normalize>(t)) return Json{{"type", "normalize"}};
  if (const auto* c = std::get_if<Calibrate>(&t)) {
    return Json{{"type", "calibrate"}, {"lo", c->lo}, {"hi", c->hi}};
  }
  return Json{{"type", "binarize"}, {"threshold", std::get<Binarize>(t).threshold}};
}

Transform transform_from_json(const Json& j) {
  try {
    const auto type = lower(j.at("type").get<std::string>());
    if (type == "normalize") return Normalize{};
    if (type == "calibrate") return Calibrate{j.at("lo").get<double>(), j.at("hi").get<double>()};
    if (type == "binarize") return Binarize{j.value("threshold", 0.5)};
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed transform: ") + e.what(),
                "transforms");
  }
  throw Error(ErrorCode::BadRequest, "unknown transform " + j.dump(), "transforms");
}

Json to_json(const Concept& c) {
  Json j{{"id", c.id}, {"term", c.term}};
  if (c.is_compound()) {
    j["op"] = to_string(*c.op);
    j["children"] = c.children;
    j["output_kind"] = to_string(c.output_kind);
    return j;
  }
  j["input_field"] = c.input_field;
  j["backend_id"] = c.backend_id;
  j["output_kind"] = to_string(c.output_kind);
  Json chain = Json::array();
  for (const auto& t : c.transforms) chain.push_back(to_json(t));
  j["transforms"] = chain;
  return j;
}

Concept concept_from_json(const Json& j) {
  Concept c;
  c.id = j.at("id").get<std::string>();
  c.term = j.at("term").get<std::string>();
  const auto kind = output_kind_from_string(j.at("output_kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::CorruptDocument, "bad output_kind for concept " + c.id);
  c.output_kind = *kind;
  if (j.contains("op")) {
    c.op = logic_op_from_string(j.at("op").get<std::string>());
    if (!c.op) throw Error(ErrorCode::CorruptDocument, "bad op for concept " + c.id);
    c.children = j.at("children").get<std::vector<std::string>>();
    return c;
  }
  c.input_field = j.at("input_field").get<std::string>();
  c.backend_id = j.at("backend_id").get<std::string>();
  for (const auto& t : j.at("transforms")) c.transforms.push_back(transform_from_json(t));
  return c;
}

}  // namespace msb::concepts
