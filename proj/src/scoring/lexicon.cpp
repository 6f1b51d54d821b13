#include "msb/scoring/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "msb/core/error.hpp"

namespace msb::scoring {
namespace {

std::string lower_trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::map<std::string, std::vector<std::string>> read_lexicon(std::istream& in) {
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw Error(ErrorCode::BadConfig,
                  "lexicon line " + std::to_string(line_no) + ": expected '<term>\\t<keywords>'",
                  "table_file");
    }
    auto& keywords = out[line.substr(0, tab)];
    std::string_view rest = std::string_view(line).substr(tab + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      auto comma = rest.find(',', pos);
      if (comma == std::string_view::npos) comma = rest.size();
      if (comma > pos) keywords.emplace_back(rest.substr(pos, comma - pos));
      pos = comma + 1;
    }
  }
  return out;
}

LexiconScorer::LexiconScorer(const LexiconConfig& config) {
  auto merge = [&](const std::map<std::string, std::vector<std::string>>& src) {
    for (const auto& [term, keywords] : src) {
      auto& dst = table_[lower_trimmed(term)];
      for (const auto& k : keywords) {
        auto folded = lower_trimmed(k);
        if (!folded.empty()) dst.push_back(std::move(folded));
      }
    }
  };
  if (!config.table_file.empty()) {
    std::ifstream in(config.table_file);
    if (!in) {
      throw Error(ErrorCode::IoError, "cannot open lexicon '" + config.table_file + "'",
                  "table_file");
    }
    merge(read_lexicon(in));
  }
  merge(config.table);
}

bool LexiconScorer::knows(const std::string& term) const {
  return table_.count(lower_trimmed(term)) > 0;
}

ScoreBatch LexiconScorer::score(const ScoreRequest& request) {
  if (request.term.empty()) throw Error(ErrorCode::EmptyTerm, "concept term is empty", "term");
  ScoreBatch out;
  out.scores.assign(request.texts.size(), 0.0);
  auto it = table_.find(lower_trimmed(request.term));
  if (it == table_.end()) {
    out.warnings = 1;
    return out;
  }
  for (std::size_t i = 0; i < request.texts.size(); ++i) {
    const std::string text = lower_trimmed(request.texts[i]);
    for (const auto& k : it->second) {
      if (text.find(k) != std::string::npos) {
        out.scores[i] = 1.0;
        break;
      }
    }
  }
  return out;
}

}  // namespace msb::scoring
