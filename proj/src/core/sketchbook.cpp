#include "msb/core/sketchbook.hpp"

#include <cctype>
#include <random>
#include <sstream>

#include "msb/core/error.hpp"

namespace msb::core {
namespace {

bool valid_id_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

}  // namespace

bool Sketchbook::id_taken(std::string_view id) const {
  const std::string key(id);
  if (retired_ids.count(key) || concepts.count(key) || sketches.count(key)) return true;
  if (key == this->id) return true;
  for (const auto& n : notes) {
    if (n.id == key) return true;
  }
  return false;
}

std::string Sketchbook::allocate_id(std::string_view prefix) {
  for (;;) {
    std::string candidate = std::string(prefix) + std::to_string(next_serial++);
    if (!id_taken(candidate)) return candidate;
  }
}

void Sketchbook::check_new_id(const std::string& candidate) const {
  if (candidate.empty() || candidate.size() > 128) {
    throw Error(ErrorCode::InvalidId, "ids must be 1-128 characters", "id");
  }
  for (char c : candidate) {
    if (!valid_id_char(c)) {
      throw Error(ErrorCode::InvalidId,
                  "id '" + candidate + "' may only use letters, digits, '_', '-' and '.'", "id");
    }
  }
  if (id_taken(candidate)) {
    throw Error(ErrorCode::DuplicateId, "id '" + candidate + "' is already in use or retired",
                "id");
  }
}

std::string new_sketchbook_id() {
  std::random_device rd;
  std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::ostringstream out;
  out << "sb-" << std::hex;
  out.width(12);
  out.fill('0');
  out << (v & 0xFFFFFFFFFFFFULL);
  return out.str();
}

Sketchbook create_sketchbook(std::string goal, std::map<std::string, Dataset> datasets,
                             Schema schema, std::string id) {
  if (datasets.empty()) {
    throw Error(ErrorCode::EmptyDatasets, "a sketchbook needs at least one dataset", "datasets");
  }
  if (schema.empty()) throw Error(ErrorCode::SchemaMismatch, "schema declares no fields", "schema");
  Sketchbook sb;
  sb.id = id.empty() ? new_sketchbook_id() : std::move(id);
  for (char c : sb.id) {
    if (!valid_id_char(c)) throw Error(ErrorCode::InvalidId, "bad sketchbook id '" + sb.id + "'", "id");
  }
  sb.goal = std::move(goal);
  sb.schema = std::move(schema);
  for (auto& [name, ds] : datasets) {
    ds.name = name;
    validate_dataset(sb.schema, ds);
  }
  sb.datasets = std::move(datasets);
  std::string names;
  for (const auto& [name, ds] : sb.datasets) {
    if (!names.empty()) names += ", ";
    names += name + " (" + std::to_string(ds.size()) + " rows)";
  }
  sb.history.append(EventKind::SketchbookCreated, sb.id, "created with datasets " + names);
  return sb;
}

void add_dataset(Sketchbook& sb, Dataset dataset) {
  if (dataset.name.empty()) throw Error(ErrorCode::InvalidId, "dataset name is empty", "name");
  if (sb.datasets.count(dataset.name)) {
    throw Error(ErrorCode::DuplicateId, "dataset '" + dataset.name + "' already exists", "name");
  }
  validate_dataset(sb.schema, dataset);
  const std::string summary =
      "added dataset " + dataset.name + " (" + std::to_string(dataset.size()) + " rows)";
  const std::string name = dataset.name;
  sb.datasets.emplace(name, std::move(dataset));
  sb.history.append(EventKind::DatasetAdded, name, summary);
}

void add_backend(Sketchbook& sb, scoring::BackendConfig config) {
  if (config.id.empty()) throw Error(ErrorCode::InvalidId, "backend id is empty", "id");
  const std::string id = config.id;
  const std::string summary = "backend " + id + " (" + std::string(scoring::to_string(config.kind)) + ")";
  const bool replaced = sb.backends.count(id) > 0;
  sb.backends[id] = std::move(config);
  sb.history.append(EventKind::BackendAdded, id, (replaced ? "updated " : "added ") + summary);
}

const Dataset& dataset_or_throw(const Sketchbook& sb, const std::string& name) {
  auto it = sb.datasets.find(name);
  if (it == sb.datasets.end()) {
    throw Error(ErrorCode::UnknownDataset, "no dataset named '" + name + "'", "dataset");
  }
  return it->second;
}

}  // namespace msb::core
