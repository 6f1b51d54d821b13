#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msb/core/json.hpp"
#include "msb/core/sketchbook.hpp"
#include "msb/scoring/backend.hpp"

namespace msb::helpers {

enum class Relation { Synonym, Antonym };

std::string_view to_string(Relation r);
std::optional<Relation> relation_from_string(std::string_view name);

class WordRelationProvider {
 public:
  virtual ~WordRelationProvider() = default;
  virtual std::vector<std::string> lookup(const std::string& term, Relation relation) const = 0;
};

// Lines of "<term>\t<relation>\t<word>,<word>,..."; '#' starts a comment.
class WordRelationTable : public WordRelationProvider {
 public:
  static WordRelationTable parse(std::istream& in);
  static WordRelationTable load(const std::string& path);

  void add(const std::string& term, Relation relation, const std::vector<std::string>& words);
  std::vector<std::string> lookup(const std::string& term, Relation relation) const override;

 private:
  std::map<std::pair<std::string, Relation>, std::vector<std::string>> entries_;
};

// Path of the bundled table: MSB_WORD_RELATIONS when set, else the copy in the source tree.
std::string default_word_relations_path();
const WordRelationProvider& default_word_relations();

// Lowercased, de-duplicated words in provider order; unknown terms give [].
// Throws EmptyTerm.
std::vector<std::string> brainstorm(const std::string& term, Relation relation,
                                    const WordRelationProvider& provider = default_word_relations());

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct ConceptCorrelations {
  std::vector<std::string> concept_ids;
  std::vector<std::optional<double>> with_truth;
  std::vector<std::vector<std::optional<double>>> matrix;  // symmetric
  std::size_t n_rows = 0;
};

// Over the labeled rows of a dataset. Throws TooFewChildren (fewer than two
// concepts) or UnlabeledDataset.
ConceptCorrelations compare_concepts(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                                     const std::vector<std::string>& concept_refs,
                                     const std::string& dataset);

Json to_json(const ConceptCorrelations& c);

// The subject may be a concept, a sketch, or the sketchbook id. Throws UnknownSubject.
const core::Note& add_note(core::Sketchbook& sb, const std::string& subject_id, std::string text);
std::vector<core::Note> list_notes(const core::Sketchbook& sb,
                                   const std::optional<std::string>& subject_id = std::nullopt);

std::vector<core::HistoryEvent> get_history(const core::Sketchbook& sb, std::uint64_t since_seq = 0);

}  // namespace msb::helpers
