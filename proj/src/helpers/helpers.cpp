#include "msb/helpers/helpers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"

#ifndef MSB_DEFAULT_WORD_RELATIONS
#define MSB_DEFAULT_WORD_RELATIONS "data/word_relations.tsv"
#endif

namespace msb::helpers {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(Relation r) { return r == Relation::Synonym ? "synonym" : "antonym"; }

std::optional<Relation> relation_from_string(std::string_view name) {
  const auto n = lower(std::string(name));
  if (n == "synonym" || n == "synonyms") return Relation::Synonym;
  if (n == "antonym" || n == "antonyms") return Relation::Antonym;
  return std::nullopt;
}

WordRelationTable WordRelationTable::parse(std::istream& in) {
  WordRelationTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) {
      throw Error(ErrorCode::CorruptDocument,
                  "word relation line " + std::to_string(line_no) + " needs three tab-separated fields",
                  "word_relations", static_cast<long long>(line_no));
    }
    const auto relation = relation_from_string(trim(line.substr(a + 1, b - a - 1)));
    if (!relation) {
      throw Error(ErrorCode::CorruptDocument,
                  "word relation line " + std::to_string(line_no) + " has an unknown relation",
                  "word_relations", static_cast<long long>(line_no));
    }
    std::vector<std::string> words;
    std::string_view rest(line);
    rest.remove_prefix(b + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      words.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    t.add(trim(line.substr(0, a)), *relation, words);
  }
  return t;
}

WordRelationTable WordRelationTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open word relations '" + path + "'", "word_relations");
  return parse(in);
}

void WordRelationTable::add(const std::string& term, Relation relation,
                            const std::vector<std::string>& words) {
  auto& slot = entries_[{lower(term), relation}];
  for (const auto& w : words) {
    if (!w.empty()) slot.push_back(w);
  }
}

std::vector<std::string> WordRelationTable::lookup(const std::string& term, Relation relation) const {
  auto it = entries_.find({lower(trim(term)), relation});
  return it == entries_.end() ? std::vector<std::string>{} : it->second;
}

std::string default_word_relations_path() {
  if (const char* env = std::getenv("MSB_WORD_RELATIONS"); env && *env) return env;
  return MSB_DEFAULT_WORD_RELATIONS;
}

const WordRelationProvider& default_word_relations() {
  static std::once_flag once;
  static WordRelationTable table;
  std::call_once(once, [] {
    std::ifstream in(default_word_relations_path());
    if (in) table = WordRelationTable::parse(in);
  });
  return table;
}

std::vector<std::string> brainstorm(const std::string& term, Relation relation,
                                    const WordRelationProvider& provider) {
  if (trim(term).empty()) throw Error(ErrorCode::EmptyTerm, "brainstorm needs a term", "term");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& w : provider.lookup(term, relation)) {
    auto word = lower(trim(w));
    if (!word.empty() && seen.insert(word).second) out.push_back(std::move(word));
  }
  return out;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "correlated vectors differ in length", "scores");
  }
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

ConceptCorrelations compare_concepts(core::Sketchbook& sb, scoring::ScorerRegistry& scorers,
                                     const std::vector<std::string>& concept_refs,
                                     const std::string& dataset) {
  if (concept_refs.size() < 2) {
    throw Error(ErrorCode::TooFewChildren, "correlation needs at least two concepts", "concepts");
  }
  ConceptCorrelations out;
  for (const auto& ref : concept_refs) out.concept_ids.push_back(concepts::resolve_concept(sb, ref).id);
  const auto& ds = core::dataset_or_throw(sb, dataset);
  if (!core::is_labeled(sb.schema, ds)) {
    throw Error(ErrorCode::UnlabeledDataset, "dataset '" + dataset + "' carries no labels", "dataset");
  }
  const auto truth_col = core::ground_truth_column(sb.schema, ds);
  std::vector<std::size_t> rows;
  std::vector<double> truth;
  for (std::size_t r = 0; r < truth_col.size(); ++r) {
    if (truth_col[r]) {
      rows.push_back(r);
      truth.push_back(*truth_col[r]);
    }
  }
  out.n_rows = rows.size();

  std::vector<std::vector<double>> scores;
  for (const auto& id : out.concept_ids) {
    const auto all = concepts::score_concept(sb, scorers, id, dataset).scores;
    std::vector<double> s;
    s.reserve(rows.size());
    for (std::size_t r : rows) s.push_back(all[r]);
    out.with_truth.push_back(pearson(s, truth));
    scores.push_back(std::move(s));
  }
  const std::size_t k = scores.size();
  out.matrix.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const bool varies = pearson(scores[i], scores[i]).has_value();
    out.matrix[i][i] = varies ? std::optional<double>(1.0) : std::nullopt;
    for (std::size_t j = i + 1; j < k; ++j) {
      out.matrix[i][j] = out.matrix[j][i] = pearson(scores[i], scores[j]);
    }
  }
  return out;
}

Json to_json(const ConceptCorrelations& c) {
  auto value = [](const std::optional<double>& v) { return v ? Json(*v) : Json("undefined"); };
  Json rows = Json::array();
  for (std::size_t i = 0; i < c.concept_ids.size(); ++i) {
    Json corr = Json::object();
    for (std::size_t j = 0; j < c.concept_ids.size(); ++j) corr[c.concept_ids[j]] = value(c.matrix[i][j]);
    rows.push_back({{"concept_id", c.concept_ids[i]},
                    {"corr_with_truth", value(c.with_truth[i])},
                    {"correlations", std::move(corr)}});
  }
  return Json{{"n_rows", c.n_rows}, {"concepts", std::move(rows)}};
}

const core::Note& add_note(core::Sketchbook& sb, const std::string& subject_id, std::string text) {
  const bool known = subject_id == sb.id || sb.concepts.count(subject_id) || sb.sketches.count(subject_id);
  if (!known) {
    throw Error(ErrorCode::UnknownSubject,
                "'" + subject_id + "' is not a concept, sketch or this sketchbook", "subject_id");
  }
  core::Note note;
  note.id = sb.allocate_id("n");
  note.subject_id = subject_id;
  note.text = std::move(text);
  note.timestamp = core::utc_timestamp();
  sb.history.append(core::EventKind::NoteAdded, note.id, "note on " + subject_id);
  sb.notes.push_back(std::move(note));
  return sb.notes.back();
}

std::vector<core::Note> list_notes(const core::Sketchbook& sb,
                                   const std::optional<std::string>& subject_id) {
  std::vector<core::Note> out;
  for (const auto& n : sb.notes) {
    if (!subject_id || n.subject_id == *subject_id) out.push_back(n);
  }
  return out;
}

std::vector<core::HistoryEvent> get_history(const core::Sketchbook& sb, std::uint64_t since_seq) {
  return sb.history.since(since_seq);
}

}  // namespace msb::helpers
