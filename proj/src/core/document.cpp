#include <charconv>
#include <cmath>
#include <functional>

#include "msb/core/error.hpp"
#include "msb/core/sketchbook.hpp"

namespace msb::core {
namespace {

Cell cell_from_json(const Json& v, InputKind kind, const std::string& field, std::size_t row) {
  if (v.is_null()) return std::monostate{};
  const bool numeric = kind == InputKind::Numeric || kind == InputKind::GroundTruth;
  if (numeric) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s.empty()) return std::monostate{};
      double d = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(d)) return d;
    }
    throw Error(ErrorCode::BadNumeric,
                "row " + std::to_string(row) + " field '" + field + "': " + v.dump() +
                    " is not a number",
                field, static_cast<long long>(row));
  }
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.empty()) return std::monostate{};
    return s;
  }
  if (v.is_number()) return v.dump();
  throw Error(ErrorCode::SchemaMismatch,
              "row " + std::to_string(row) + " field '" + field + "' must be a string", field,
              static_cast<long long>(row));
}

void check_concept_graph(const Sketchbook& sb) {
  for (const auto& [id, c] : sb.concepts) {
    if (c.is_compound()) {
      for (const auto& child : c.children) {
        if (!sb.concepts.count(child)) {
          throw Error(ErrorCode::CorruptDocument,
                      "compound " + id + " references missing concept " + child);
        }
      }
    } else if (!sb.schema.index_of(c.input_field) || !sb.backends.count(c.backend_id)) {
      throw Error(ErrorCode::CorruptDocument, "concept " + id + " references a missing field or backend");
    }
  }
  // Depth-first search for cycles among compounds.
  std::map<std::string, int> state;  // 1 = on stack, 2 = done
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    auto& s = state[id];
    if (s == 2) return;
    if (s == 1) throw Error(ErrorCode::CycleDetected, "compound concepts form a cycle at " + id);
    s = 1;
    for (const auto& child : sb.concepts.at(id).children) visit(child);
    state[id] = 2;
  };
  for (const auto& [id, c] : sb.concepts) visit(id);

  for (const auto& [id, s] : sb.sketches) {
    for (const auto& cid : s.concept_ids) {
      if (!sb.concepts.count(cid)) {
        throw Error(ErrorCode::CorruptDocument, "sketch " + id + " references missing concept " + cid);
      }
    }
    const auto* lin = std::get_if<sketch::LinearModel>(&s.params);
    const auto* log = std::get_if<sketch::LogisticModel>(&s.params);
    const std::size_t w = lin ? lin->weights.size() : log ? log->weights.size() : s.concept_ids.size();
    if (w != s.concept_ids.size()) {
      throw Error(ErrorCode::CorruptDocument, "sketch " + id + " has a weight count mismatch");
    }
  }
}

}  // namespace

Json schema_to_json(const Schema& schema) {
  Json j = Json::array();
  for (const auto& f : schema.fields()) j.push_back(Json{{"name", f.name}, {"kind", to_string(f.kind)}});
  return j;
}

Schema schema_from_json(const Json& j) {
  Schema schema;
  auto add = [&](const std::string& name, const Json& kind_json) {
    if (!kind_json.is_string()) {
      throw Error(ErrorCode::SchemaMismatch, "kind of field '" + name + "' must be a string", name);
    }
    const auto kind = input_kind_from_string(kind_json.get<std::string>());
    if (!kind) {
      throw Error(ErrorCode::SchemaMismatch,
                  "field '" + name + "' has unknown kind " + kind_json.dump(), name);
    }
    schema.add(name, *kind);
  };
  if (j.is_object()) {
    for (const auto& [name, kind] : j.items()) add(name, kind);
  } else if (j.is_array()) {
    for (const auto& f : j) {
      if (!f.is_object() || !f.contains("name") || !f.contains("kind")) {
        throw Error(ErrorCode::SchemaMismatch, "schema entries need 'name' and 'kind'", "schema");
      }
      add(f.at("name").get<std::string>(), f.at("kind"));
    }
  } else {
    throw Error(ErrorCode::SchemaMismatch, "schema must be an object or an array", "schema");
  }
  return schema;
}

Json dataset_to_json(const Dataset& ds) {
  Json rows = Json::array();
  for (const auto& row : ds.rows) {
    Json r = Json::array();
    for (const auto& c : row) {
      if (const auto* s = std::get_if<std::string>(&c)) {
        r.push_back(*s);
      } else if (const auto* d = std::get_if<double>(&c)) {
        r.push_back(*d);
      } else {
        r.push_back(nullptr);
      }
    }
    rows.push_back(std::move(r));
  }
  return Json{{"name", ds.name}, {"columns", ds.columns}, {"rows", rows}};
}

Dataset dataset_from_json(const Json& j, const Schema& schema) {
  Dataset ds;
  ds.name = j.value("name", std::string());
  std::vector<std::string> columns;
  if (j.contains("columns")) columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& f : schema.fields()) ds.columns.push_back(f.name);

  const Json& rows = j.at("rows");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Json& src = rows[r];
    std::vector<Cell> row;
    for (const auto& f : schema.fields()) {
      const Json* value = nullptr;
      if (src.is_object()) {
        if (!src.contains(f.name)) {
          throw Error(ErrorCode::SchemaMismatch,
                      "row " + std::to_string(r) + " lacks field '" + f.name + "'", f.name,
                      static_cast<long long>(r));
        }
        value = &src.at(f.name);
      } else {
        std::size_t pos = columns.size();
        for (std::size_t c = 0; c < columns.size(); ++c) {
          if (columns[c] == f.name) pos = c;
        }
        if (pos == columns.size()) {
          throw Error(ErrorCode::SchemaMismatch, "dataset has no column '" + f.name + "'", f.name);
        }
        if (!src.is_array() || pos >= src.size()) {
          throw Error(ErrorCode::SchemaMismatch, "row " + std::to_string(r) + " is too short",
                      f.name, static_cast<long long>(r));
        }
        value = &src.at(pos);
      }
      row.push_back(cell_from_json(*value, f.kind, f.name, r));
    }
    ds.rows.push_back(std::move(row));
  }
  validate_dataset(schema, ds);
  return ds;
}

Json to_json(const HistoryEvent& e) {
  return Json{{"seq", e.seq},
              {"timestamp", e.timestamp},
              {"kind", to_string(e.kind)},
              {"subject_id", e.subject_id},
              {"summary", e.summary}};
}

Json to_json(const Note& n) {
  return Json{{"id", n.id}, {"subject_id", n.subject_id}, {"text", n.text}, {"timestamp", n.timestamp}};
}

Json export_sketchbook(const Sketchbook& sb) {
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["id"] = sb.id;
  doc["goal"] = sb.goal;
  doc["schema"] = schema_to_json(sb.schema);
  Json datasets = Json::array();
  for (const auto& [name, ds] : sb.datasets) datasets.push_back(dataset_to_json(ds));
  doc["datasets"] = datasets;
  Json backends = Json::array();
  for (const auto& [id, b] : sb.backends) backends.push_back(scoring::to_json(b));
  doc["backends"] = backends;
  Json concepts = Json::array();
  for (const auto& [id, c] : sb.concepts) concepts.push_back(concepts::to_json(c));
  doc["concepts"] = concepts;
  Json sketches = Json::array();
  for (const auto& [id, s] : sb.sketches) sketches.push_back(sketch::to_json(s));
  doc["sketches"] = sketches;
  Json cache = Json::array();
  for (const auto& [key, raw] : sb.cache.raw) {
    cache.push_back(Json{{"key", key}, {"scores", raw.scores}, {"warnings", raw.warnings}});
  }
  doc["score_cache"] = cache;
  Json notes = Json::array();
  for (const auto& n : sb.notes) notes.push_back(to_json(n));
  doc["notes"] = notes;
  Json history = Json::array();
  for (const auto& e : sb.history.events()) history.push_back(to_json(e));
  doc["history"] = history;
  doc["next_serial"] = sb.next_serial;
  doc["retired_ids"] = sb.retired_ids;
  return doc;
}

std::string export_sketchbook_text(const Sketchbook& sb) { return export_sketchbook(sb).dump(2); }

Sketchbook import_sketchbook(const Json& doc) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw Error(ErrorCode::CorruptDocument, "document has no format_version", "format_version");
  }
  const Json& version = doc.at("format_version");
  if (!version.is_number_integer() || version.get<long long>() != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "unsupported format_version " + version.dump() + " (expected " +
                    std::to_string(kFormatVersion) + ")",
                "format_version");
  }
  try {
    Sketchbook sb;
    sb.id = doc.at("id").get<std::string>();
    sb.goal = doc.at("goal").get<std::string>();
    sb.schema = schema_from_json(doc.at("schema"));
    for (const auto& d : doc.at("datasets")) {
      Dataset ds = dataset_from_json(d, sb.schema);
      const std::string name = ds.name;
      sb.datasets.emplace(name, std::move(ds));
    }
    for (const auto& b : doc.at("backends")) {
      auto cfg = scoring::backend_config_from_json(b);
      const std::string id = cfg.id;
      sb.backends.emplace(id, std::move(cfg));
    }
    for (const auto& c : doc.at("concepts")) {
      auto concept_value = concepts::concept_from_json(c);
      const std::string id = concept_value.id;
      sb.concepts.emplace(id, std::move(concept_value));
    }
    for (const auto& s : doc.at("sketches")) {
      auto model = sketch::sketch_from_json(s);
      const std::string id = model.id;
      sb.sketches.emplace(id, std::move(model));
    }
    for (const auto& entry : doc.at("score_cache")) {
      sb.cache.raw[entry.at("key").get<std::string>()] =
          concepts::RawScores{entry.at("scores").get<std::vector<double>>(),
                              entry.at("warnings").get<std::size_t>()};
    }
    for (const auto& n : doc.at("notes")) {
      sb.notes.push_back(Note{n.at("id").get<std::string>(), n.at("subject_id").get<std::string>(),
                              n.at("text").get<std::string>(), n.at("timestamp").get<std::string>()});
    }
    std::vector<HistoryEvent> events;
    for (const auto& e : doc.at("history")) {
      const auto kind = event_kind_from_string(e.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::CorruptDocument, "unknown history event kind");
      events.push_back(HistoryEvent{e.at("seq").get<std::uint64_t>(),
                                    e.at("timestamp").get<std::string>(), *kind,
                                    e.at("subject_id").get<std::string>(),
                                    e.at("summary").get<std::string>()});
    }
    sb.history = History::restore(std::move(events));
    sb.next_serial = doc.at("next_serial").get<std::uint64_t>();
    sb.retired_ids = doc.at("retired_ids").get<std::set<std::string>>();
    check_concept_graph(sb);
    return sb;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptDocument, std::string("malformed sketchbook document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptDocument || e.code() == ErrorCode::CycleDetected) throw;
    throw Error(ErrorCode::CorruptDocument,
                std::string("invalid sketchbook document: ") + e.what(), e.field());
  }
}

Sketchbook import_sketchbook_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptDocument, std::string("document is not valid JSON: ") + e.what());
  }
  return import_sketchbook(doc);
}

}  // namespace msb::core
