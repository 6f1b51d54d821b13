#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msb::core {

enum class InputKind { Text, Image, Numeric, GroundTruth };

std::string_view to_string(InputKind kind);
// Accepts "text", "Text", "ground_truth", "GroundTruth", ...
std::optional<InputKind> input_kind_from_string(std::string_view name);

struct FieldSpec {
  std::string name;
  InputKind kind;

  bool operator==(const FieldSpec&) const = default;
};

// Ordered field-name -> kind mapping. Declaration order is kept so that views
// list input columns the way the user declared them.
class Schema {
 public:
  Schema() = default;
  Schema(std::initializer_list<FieldSpec> fields);

  // Throws InvalidId for empty names, SchemaMismatch for duplicate names and
  // DuplicateGroundTruth for a second ground-truth field.
  void add(std::string name, InputKind kind);

  const std::vector<FieldSpec>& fields() const noexcept { return fields_; }
  std::size_t size() const noexcept { return fields_.size(); }
  bool empty() const noexcept { return fields_.empty(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  std::optional<InputKind> kind_of(std::string_view name) const;
  std::optional<std::string> ground_truth_field() const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<FieldSpec> fields_;
};

}  // namespace msb::core
