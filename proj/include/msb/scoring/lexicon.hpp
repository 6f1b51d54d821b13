#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "msb/scoring/backend.hpp"

namespace msb::scoring {

// Deterministic offline scorer: 1.0 iff any keyword of the term occurs in the
// text as a case-insensitive substring. Unknown terms score 0.0 everywhere
// and count one warning.
class LexiconScorer final : public ScorerBackend {
 public:
  explicit LexiconScorer(const LexiconConfig& config);

  BackendKind kind() const override { return BackendKind::Lexicon; }
  ScoreBatch score(const ScoreRequest& request) override;

  bool knows(const std::string& term) const;

 private:
  std::map<std::string, std::vector<std::string>> table_;  // folded term -> folded keywords
};

// Lexicon file: one `<term>\t<keyword1>,<keyword2>,...` per line.
std::map<std::string, std::vector<std::string>> read_lexicon(std::istream& in);

}  // namespace msb::scoring
