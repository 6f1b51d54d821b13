#include "msb/concepts/engine.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "msb/core/error.hpp"

namespace msb::concepts {
namespace {

using core::Sketchbook;

OutputKind effective_kind(const ConceptSpec& spec, scoring::BackendKind backend) {
  const bool ends_binarized =
      !spec.transforms.empty() && std::holds_alternative<Binarize>(spec.transforms.back());
  if (ends_binarized) {
    if (spec.output_kind == OutputKind::Continuous) {
      throw Error(ErrorCode::InconsistentTransforms,
                  "a chain ending in binarize produces a binary concept", "output_kind");
    }
    return OutputKind::Binary;
  }
  const bool binary_raw = spec.transforms.empty() && scoring::emits_binary(backend);
  if (spec.output_kind == OutputKind::Binary && !binary_raw) {
    throw Error(ErrorCode::InconsistentTransforms,
                "binary concepts need a binary backend without transforms or a final binarize",
                "output_kind");
  }
  if (spec.output_kind) return *spec.output_kind;
  return binary_raw ? OutputKind::Binary : OutputKind::Continuous;
}

RawScoreTask make_task(const Sketchbook& sb, const Concept& c, const std::string& dataset) {
  const auto& ds = core::dataset_or_throw(sb, dataset);
  auto backend = sb.backends.find(c.backend_id);
  if (backend == sb.backends.end()) {
    throw Error(ErrorCode::UnknownBackend, "no backend named '" + c.backend_id + "'", "backend_id");
  }
  const auto column = ds.column_index(c.input_field);
  if (!column) {
    throw Error(ErrorCode::UnknownField, "dataset '" + dataset + "' has no field '" + c.input_field + "'",
                "input_field");
  }
  RawScoreTask task;
  task.raw_key = raw_cache_key(c, dataset);
  task.backend = backend->second;
  task.request.term = c.term;
  task.request.dataset = dataset;
  task.request.rows.resize(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) task.request.rows[r] = r;
  if (backend->second.kind != scoring::BackendKind::Embedding) {
    task.request.texts.reserve(ds.size());
    for (const auto& row : ds.rows) task.request.texts.push_back(core::cell_text(row[*column]));
  }
  return task;
}

void collect_tasks(const Sketchbook& sb, const Concept& c, const std::string& dataset, bool rescore,
                   std::set<std::string>& seen, std::vector<RawScoreTask>& out) {
  if (c.is_compound()) {
    for (const auto& child : c.children) {
      collect_tasks(sb, sb.concepts.at(child), dataset, rescore, seen, out);
    }
    return;
  }
  const std::string key = raw_cache_key(c, dataset);
  if (seen.count(key)) return;
  if (!rescore && sb.cache.raw.count(key)) return;
  seen.insert(key);
  out.push_back(make_task(sb, c, dataset));
}

ConceptScores assemble(Sketchbook& sb, const Concept& c, const std::string& dataset) {
  const std::string key = cache_key(sb, c, dataset);
  if (auto it = sb.cache.transformed.find(key); it != sb.cache.transformed.end()) {
    ConceptScores hit = it->second;
    hit.concept_id = c.id;
    return hit;
  }
  ConceptScores out;
  out.concept_id = c.id;
  out.dataset = dataset;
  out.cache_key = key;
  if (c.is_compound()) {
    std::vector<std::vector<double>> children;
    for (const auto& child : c.children) {
      auto s = assemble(sb, sb.concepts.at(child), dataset);
      out.warnings += s.warnings;
      children.push_back(std::move(s.scores));
    }
    out.scores = combine(*c.op, children);
  } else {
    const auto& raw = sb.cache.raw.at(raw_cache_key(c, dataset));
    out.scores = apply_chain(raw.scores, c.transforms);
    out.warnings = raw.warnings;
  }
  sb.cache.transformed[key] = out;
  return out;
}

bool depends_on(const Sketchbook& sb, const Concept& c, const std::string& target) {
  for (const auto& child : c.children) {
    if (child == target) return true;
    auto it = sb.concepts.find(child);
    if (it != sb.concepts.end() && depends_on(sb, it->second, target)) return true;
  }
  return false;
}

}  // namespace

std::string default_dataset(const Sketchbook& sb) {
  if (sb.datasets.count("train")) return "train";
  if (sb.datasets.empty()) throw Error(ErrorCode::UnknownDataset, "sketchbook has no datasets", "dataset");
  return sb.datasets.begin()->first;
}

const Concept& resolve_concept(const Sketchbook& sb, std::string_view ref) {
  if (auto it = sb.concepts.find(std::string(ref)); it != sb.concepts.end()) return it->second;
  const Concept* match = nullptr;
  for (const auto& [id, c] : sb.concepts) {
    if (c.term == ref) {
      if (match) {
        throw Error(ErrorCode::AmbiguousConcept,
                    "term '" + std::string(ref) + "' names several concepts; use an id", "concepts");
      }
      match = &c;
    }
  }
  if (!match) {
    throw Error(ErrorCode::UnknownConcept, "no concept '" + std::string(ref) + "'", "concepts");
  }
  return *match;
}

std::string raw_cache_key(const Concept& c, const std::string& dataset) {
  return Json::array({c.backend_id, c.term, c.input_field, dataset}).dump();
}

std::string cache_key(const Sketchbook& sb, const Concept& c, const std::string& dataset) {
  if (!c.is_compound()) return raw_cache_key(c, dataset) + chain_fingerprint(c.transforms);
  Json parts = Json::array({to_string(*c.op)});
  for (const auto& child : c.children) parts.push_back(cache_key(sb, sb.concepts.at(child), dataset));
  return parts.dump();
}

CreatedConcept create_concept(Sketchbook& sb, scoring::ScorerRegistry& scorers,
                              const ConceptSpec& spec, const std::string& dataset,
                              bool compute_scores) {
  if (spec.term.empty()) throw Error(ErrorCode::EmptyTerm, "concept term is empty", "term");
  const auto field_kind = sb.schema.kind_of(spec.input_field);
  if (!field_kind) {
    throw Error(ErrorCode::UnknownField, "schema has no field '" + spec.input_field + "'",
                "input_field");
  }
  auto backend = sb.backends.find(spec.backend_id);
  if (backend == sb.backends.end()) {
    throw Error(ErrorCode::UnknownBackend, "no backend named '" + spec.backend_id + "'",
                "backend_id");
  }
  if (!scoring::accepts(backend->second.kind, *field_kind)) {
    throw Error(ErrorCode::KindMismatch,
                std::string(scoring::to_string(backend->second.kind)) + " backend '" +
                    spec.backend_id + "' cannot score " + std::string(core::to_string(*field_kind)) +
                    " field '" + spec.input_field + "'",
                "backend_id");
  }
  validate_chain(spec.transforms);
  if (!spec.id.empty()) sb.check_new_id(spec.id);

  Concept c;
  c.term = spec.term;
  c.input_field = spec.input_field;
  c.backend_id = spec.backend_id;
  c.output_kind = effective_kind(spec, backend->second.kind);
  c.transforms = spec.transforms;

  const std::string target = dataset.empty() ? default_dataset(sb) : dataset;
  core::dataset_or_throw(sb, target);
  if (compute_scores) {
    const std::string key = raw_cache_key(c, target);
    if (!sb.cache.raw.count(key)) {
      auto task = make_task(sb, c, target);
      store_raw(sb, task, run_task(scorers, task));
    }
  }

  c.id = spec.id.empty() ? sb.allocate_id("c") : spec.id;
  sb.concepts.emplace(c.id, c);
  sb.history.append(core::EventKind::ConceptCreated, c.id,
                    "concept '" + c.term + "' on " + c.input_field + " via " + c.backend_id);

  CreatedConcept out{c, std::nullopt};
  if (compute_scores) out.scores = assemble(sb, sb.concepts.at(c.id), target);
  return out;
}

Concept create_compound(Sketchbook& sb, LogicOp op, const std::vector<std::string>& child_refs,
                        std::string id) {
  if (child_refs.size() < 2) {
    throw Error(ErrorCode::TooFewChildren, "compound concepts need at least two children",
                "children");
  }
  Concept c;
  c.op = op;
  c.output_kind = OutputKind::Binary;
  std::string term;
  for (const auto& ref : child_refs) {
    const Concept& child = resolve_concept(sb, ref);
    if (child.output_kind != OutputKind::Binary) {
      throw Error(ErrorCode::NonBinaryChild,
                  "concept '" + child.id + "' is continuous; binarize it before combining",
                  "children");
    }
    if (!id.empty() && (child.id == id || depends_on(sb, child, id))) {
      throw Error(ErrorCode::CycleDetected, "compound '" + id + "' would contain itself", "children");
    }
    c.children.push_back(child.id);
    if (!term.empty()) term += " " + std::string(to_string(op)) + " ";
    term += child.term;
  }
  c.term = "(" + term + ")";
  if (!id.empty()) sb.check_new_id(id);
  c.id = id.empty() ? sb.allocate_id("c") : std::move(id);
  sb.concepts.emplace(c.id, c);
  sb.history.append(core::EventKind::ConceptCreated, c.id, "compound concept " + c.term);
  return c;
}

ConceptScores score_concept(Sketchbook& sb, scoring::ScorerRegistry& scorers,
                            std::string_view concept_ref, const std::string& dataset,
                            ScoreOptions options) {
  const Concept c = resolve_concept(sb, concept_ref);
  core::dataset_or_throw(sb, dataset);
  auto tasks = pending_tasks(sb, c.id, dataset, options.rescore);
  for (const auto& task : tasks) store_raw(sb, task, run_task(scorers, task));
  return assemble(sb, sb.concepts.at(c.id), dataset);
}

core::Table concept_view(Sketchbook& sb, scoring::ScorerRegistry& scorers,
                         std::string_view concept_ref, const std::string& dataset,
                         bool descending) {
  const auto scores = score_concept(sb, scorers, concept_ref, dataset);
  const auto& ds = core::dataset_or_throw(sb, dataset);
  core::Table table;
  table.columns = ds.columns;
  table.columns.push_back("score");
  for (std::size_t r : core::sorted_order(scores.scores, descending)) {
    auto row = ds.rows[r];
    row.emplace_back(scores.scores[r]);
    table.row_index.push_back(r);
    table.rows.push_back(std::move(row));
  }
  return table;
}

ConceptScores preview_transforms(Sketchbook& sb, scoring::ScorerRegistry& scorers,
                                 std::string_view concept_ref, const std::string& dataset,
                                 const std::vector<Transform>& chain) {
  const Concept c = resolve_concept(sb, concept_ref);
  if (c.is_compound()) {
    throw Error(ErrorCode::BadRequest, "compound concepts have no transform chain", "transforms");
  }
  validate_chain(chain);
  for (const auto& task : pending_tasks(sb, c.id, dataset)) store_raw(sb, task, run_task(scorers, task));
  const auto& raw = sb.cache.raw.at(raw_cache_key(c, dataset));
  ConceptScores out;
  out.concept_id = c.id;
  out.dataset = dataset;
  out.scores = apply_chain(raw.scores, chain);
  out.warnings = raw.warnings;
  out.cache_key = raw_cache_key(c, dataset) + chain_fingerprint(chain);
  return out;
}

const Concept& set_transforms(Sketchbook& sb, std::string_view concept_ref,
                              std::vector<Transform> chain, std::optional<OutputKind> output_kind) {
  Concept& c = sb.concepts.at(resolve_concept(sb, concept_ref).id);
  if (c.is_compound()) {
    throw Error(ErrorCode::BadRequest, "compound concepts have no transform chain", "transforms");
  }
  validate_chain(chain);
  ConceptSpec spec{c.term, c.input_field, c.backend_id, output_kind, chain, c.id};
  const OutputKind kind = effective_kind(spec, sb.backends.at(c.backend_id).kind);
  if (kind != OutputKind::Binary) {
    for (const auto& [cid, other] : sb.concepts) {
      if (std::find(other.children.begin(), other.children.end(), c.id) != other.children.end()) {
        throw Error(ErrorCode::InconsistentTransforms,
                    "compound '" + cid + "' needs '" + c.id + "' to stay binary", "transforms");
      }
    }
  }
  c.transforms = std::move(chain);
  c.output_kind = kind;
  sb.history.append(core::EventKind::ConceptRefined, c.id,
                    "transforms of '" + c.term + "' set to " + chain_fingerprint(c.transforms));
  return c;
}

void delete_concept(Sketchbook& sb, std::string_view concept_ref) {
  const std::string id = resolve_concept(sb, concept_ref).id;
  for (const auto& [sid, s] : sb.sketches) {
    for (const auto& cid : s.concept_ids) {
      if (cid == id) {
        throw Error(ErrorCode::ConceptInUse, "sketch '" + sid + "' uses concept '" + id + "'",
                    "concepts");
      }
    }
  }
  for (const auto& [cid, c] : sb.concepts) {
    for (const auto& child : c.children) {
      if (child == id) {
        throw Error(ErrorCode::ConceptInUse, "compound '" + cid + "' uses concept '" + id + "'",
                    "concepts");
      }
    }
  }
  const std::string term = sb.concepts.at(id).term;
  sb.concepts.erase(id);
  sb.retired_ids.insert(id);
  sb.history.append(core::EventKind::ConceptDeleted, id, "deleted concept '" + term + "'");
}

std::vector<RawScoreTask> pending_tasks(const Sketchbook& sb, std::string_view concept_ref,
                                        const std::string& dataset, bool rescore) {
  const Concept& c = resolve_concept(sb, concept_ref);
  core::dataset_or_throw(sb, dataset);
  std::set<std::string> seen;
  std::vector<RawScoreTask> out;
  collect_tasks(sb, c, dataset, rescore, seen, out);
  return out;
}

RawScores run_task(scoring::ScorerRegistry& scorers, const RawScoreTask& task) {
  auto backend = scorers.get(task.backend);
  auto batch = backend->score(task.request);
  if (batch.scores.size() != task.request.rows.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "backend '" + task.backend.id + "' returned " + std::to_string(batch.scores.size()) +
                    " scores for " + std::to_string(task.request.rows.size()) + " rows",
                "backend_id");
  }
  return RawScores{std::move(batch.scores), batch.warnings};
}

void store_raw(Sketchbook& sb, const RawScoreTask& task, RawScores raw) {
  sb.cache.raw[task.raw_key] = std::move(raw);
  // Memoized results on this dataset may have been built from the old raw scores.
  std::erase_if(sb.cache.transformed,
                [&](const auto& entry) { return entry.second.dataset == task.request.dataset; });
}

}  // namespace msb::concepts
