#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "msb/concepts/concept.hpp"
#include "msb/core/dataset.hpp"
#include "msb/core/history.hpp"
#include "msb/core/json.hpp"
#include "msb/core/schema.hpp"
#include "msb/scoring/backend.hpp"
#include "msb/sketch/model.hpp"

namespace msb::core {

inline constexpr int kFormatVersion = 1;

struct Note {
  std::string id;
  std::string subject_id;
  std::string text;
  std::string timestamp;
};

// Root aggregate of one sketching session. Concept, sketch and note ids share
// one namespace and are never reused, including after deletion.
struct Sketchbook {
  std::string id;
  std::string goal;
  Schema schema;
  std::map<std::string, Dataset> datasets;
  std::map<std::string, scoring::BackendConfig> backends;
  std::map<std::string, concepts::Concept> concepts;
  std::map<std::string, sketch::SketchModel> sketches;
  concepts::ScoreCache cache;
  std::vector<Note> notes;
  History history;
  std::uint64_t next_serial = 1;
  std::set<std::string> retired_ids;

  bool id_taken(std::string_view id) const;
  // Next free "<prefix><n>" id.
  std::string allocate_id(std::string_view prefix);
  // Validates a caller-chosen id: InvalidId for bad characters, DuplicateId
  // when it is live or retired.
  void check_new_id(const std::string& id) const;
};

// Throws EmptyDatasets, DuplicateGroundTruth (via Schema) or SchemaMismatch.
Sketchbook create_sketchbook(std::string goal, std::map<std::string, Dataset> datasets,
                             Schema schema, std::string id = {});

void add_dataset(Sketchbook& sb, Dataset dataset);
void add_backend(Sketchbook& sb, scoring::BackendConfig config);

const Dataset& dataset_or_throw(const Sketchbook& sb, const std::string& name);

std::string new_sketchbook_id();

// --- persistence ---
Json export_sketchbook(const Sketchbook& sb);
std::string export_sketchbook_text(const Sketchbook& sb);
// Throws VersionMismatch or CorruptDocument.
Sketchbook import_sketchbook(const Json& doc);
Sketchbook import_sketchbook_text(const std::string& text);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& j);
Json dataset_to_json(const Dataset& ds);
// Accepts {"name", "columns", "rows": [[...]]} or rows as objects keyed by field.
Dataset dataset_from_json(const Json& j, const Schema& schema);
Json to_json(const HistoryEvent& e);
Json to_json(const Note& n);

}  // namespace msb::core
