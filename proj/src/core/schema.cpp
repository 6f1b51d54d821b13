#include "msb/core/schema.hpp"

#include <algorithm>
#include <cctype>

#include "msb/core/error.hpp"

namespace msb::core {

std::string_view to_string(InputKind kind) {
  switch (kind) {
    case InputKind::Text: return "text";
    case InputKind::Image: return "image";
    case InputKind::Numeric: return "numeric";
    case InputKind::GroundTruth: return "ground_truth";
  }
  return "text";
}

std::optional<InputKind> input_kind_from_string(std::string_view name) {
  std::string folded;
  for (char c : name) {
    if (c == '_' || c == '-' || c == ' ') continue;
    folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (folded == "text") return InputKind::Text;
  if (folded == "image") return InputKind::Image;
  if (folded == "numeric" || folded == "number") return InputKind::Numeric;
  if (folded == "groundtruth") return InputKind::GroundTruth;
  return std::nullopt;
}

Schema::Schema(std::initializer_list<FieldSpec> fields) {
  for (const auto& f : fields) add(f.name, f.kind);
}

void Schema::add(std::string name, InputKind kind) {
  if (name.empty()) {
    throw Error(ErrorCode::InvalidId, "schema field names must be non-empty");
  }
  if (index_of(name)) {
    throw Error(ErrorCode::SchemaMismatch, "duplicate schema field '" + name + "'", name);
  }
  if (kind == InputKind::GroundTruth) {
    if (auto existing = ground_truth_field()) {
      throw Error(ErrorCode::DuplicateGroundTruth,
                  "schema declares two ground-truth fields: '" + *existing + "' and '" +
                      name + "'",
                  name);
    }
  }
  fields_.push_back({std::move(name), kind});
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  auto it = std::find_if(fields_.begin(), fields_.end(),
                         [&](const FieldSpec& f) { return f.name == name; });
  if (it == fields_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - fields_.begin());
}

std::optional<InputKind> Schema::kind_of(std::string_view name) const {
  if (auto i = index_of(name)) return fields_[*i].kind;
  return std::nullopt;
}

std::optional<std::string> Schema::ground_truth_field() const {
  for (const auto& f : fields_) {
    if (f.kind == InputKind::GroundTruth) return f.name;
  }
  return std::nullopt;
}

}  // namespace msb::core
