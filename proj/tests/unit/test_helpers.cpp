#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"
#include "msb/core/random.hpp"
#include "msb/helpers/helpers.hpp"
#include "msb/sketch/ops.hpp"
#include "support/fixtures.hpp"

using namespace msb;
using namespace msb::helpers;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no msb::Error thrown";
  return ErrorCode::NotFound;
}

// Scores each text by looking it up in a fixed map.
class MapBackend : public scoring::ScorerBackend {
 public:
  explicit MapBackend(std::map<std::string, std::map<std::string, double>> by_term)
      : by_term_(std::move(by_term)) {}
  scoring::BackendKind kind() const override { return scoring::BackendKind::Lexicon; }
  scoring::ScoreBatch score(const scoring::ScoreRequest& r) override {
    scoring::ScoreBatch out;
    for (const auto& t : r.texts) out.scores.push_back(by_term_.at(r.term).at(t));
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, double>> by_term_;
};

double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST(Brainstorm, BundledTable) {
  EXPECT_EQ(brainstorm("hate", Relation::Synonym), (std::vector<std::string>{"hatred", "loathing"}));
  EXPECT_EQ(brainstorm("HATE", Relation::Synonym), brainstorm("hate", Relation::Synonym));
  EXPECT_TRUE(brainstorm("qwzx", Relation::Synonym).empty());
  EXPECT_EQ(brainstorm("hate", Relation::Antonym), (std::vector<std::string>{"love", "affection"}));
  EXPECT_EQ(code_of([] { brainstorm("", Relation::Synonym); }), ErrorCode::EmptyTerm);
}

TEST(Brainstorm, DeduplicatesAndLowercases) {
  std::istringstream in("# comment\nfunny\tsynonym\tHumorous,comical,humorous\nfunny\tsynonym\tcomical,witty\n");
  const auto table = WordRelationTable::parse(in);
  EXPECT_EQ(brainstorm("funny", Relation::Synonym, table),
            (std::vector<std::string>{"humorous", "comical", "witty"}));
  EXPECT_TRUE(brainstorm("funny", Relation::Antonym, table).empty());
  // Pure function of its inputs.
  EXPECT_EQ(brainstorm("funny", Relation::Synonym, table), brainstorm("funny", Relation::Synonym, table));
}

TEST(Pearson, MatchesCovarianceOracle) {
  core::Rng rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-1, 1);
      b[i] = 0.3 * a[i] + rng.uniform(-1, 1);
    }
    const auto r = pearson(a, b);
    ASSERT_TRUE(r);
    EXPECT_NEAR(*r, oracle_pearson(a, b), 1e-10);
    EXPECT_TRUE(*r >= -1.0 && *r <= 1.0);
    EXPECT_NEAR(*pearson(a, a), 1.0, 1e-12);
  }
  EXPECT_FALSE(pearson({1, 1, 1}, {0, 1, 2}));
  EXPECT_FALSE(pearson({1}, {2}));
}

class Correlations : public ::testing::Test {
 protected:
  core::Sketchbook sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;

  void SetUp() override {
    const auto& train = sb.datasets.at("train");
    std::map<std::string, std::map<std::string, double>> by_term;
    for (const auto& row : train.rows) {
      const auto text = core::cell_text(row[0]);
      const double y = std::get<double>(row[1]);
      by_term["truth"][text] = y;
      by_term["inverse"][text] = 1.0 - y;
      by_term["flat"][text] = 0.5;
    }
    scoring::BackendConfig map_backend;
    map_backend.id = "map";
    core::add_backend(sb, map_backend);
    scorers.install("map", std::make_shared<MapBackend>(by_term));
    for (const char* term : {"truth", "inverse", "flat"}) {
      concepts::create_concept(sb, scorers,
                               {term, "text", "map", concepts::OutputKind::Continuous, {concepts::Calibrate{0, 1}}, term});
    }
    concepts::create_concept(sb, scorers, {"sunny", "text", "lex", std::nullopt, {}, "sunny"});
  }
};

TEST_F(Correlations, WithTruth) {
  const auto c = compare_concepts(sb, scorers, {"truth", "inverse", "flat", "sunny"}, "train");
  EXPECT_NEAR(*c.with_truth[0], 1.0, 1e-12);
  EXPECT_NEAR(*c.with_truth[1], -1.0, 1e-12);
  EXPECT_FALSE(c.with_truth[2]);
  EXPECT_EQ(c.n_rows, sb.datasets.at("train").size());
  const auto j = to_json(c);
  EXPECT_EQ(j.dump().find("null"), std::string::npos);
  EXPECT_NE(j.dump().find("undefined"), std::string::npos);
}

TEST_F(Correlations, MatrixSymmetricUnitDiagonal) {
  const auto c = compare_concepts(sb, scorers, {"truth", "inverse", "sunny"}, "train");
  ASSERT_EQ(c.matrix.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(*c.matrix[i][i], 1.0, 1e-12);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(c.matrix[i][j], c.matrix[j][i]);
      EXPECT_TRUE(*c.matrix[i][j] >= -1.0 && *c.matrix[i][j] <= 1.0);
    }
  }
  EXPECT_NEAR(*c.matrix[0][1], -1.0, 1e-12);
}

TEST_F(Correlations, Errors) {
  EXPECT_EQ(code_of([&] { compare_concepts(sb, scorers, {"truth"}, "train"); }), ErrorCode::TooFewChildren);
  core::add_dataset(sb, fx::text_dataset("fresh", {"sunny"}, {}));
  EXPECT_EQ(code_of([&] { compare_concepts(sb, scorers, {"sunny", "sunny"}, "fresh"); }),
            ErrorCode::UnlabeledDataset);
}

TEST(Notes, RoundTripAndOrder) {
  auto sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;
  const auto c = concepts::create_concept(sb, scorers, {"sunny", "text", "lex", std::nullopt, {}, ""}).concept_def;
  add_note(sb, c.id, "too literal?");
  add_note(sb, sb.id, "try weather words");
  const auto& third = add_note(sb, c.id, "fine after all");
  EXPECT_EQ(third.id[0], 'n');
  const auto on_c = list_notes(sb, c.id);
  ASSERT_EQ(on_c.size(), 2u);
  EXPECT_EQ(on_c[0].text, "too literal?");
  const auto all = list_notes(sb);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[1].subject_id, sb.id);
  EXPECT_EQ(code_of([&] { add_note(sb, "c999", "x"); }), ErrorCode::UnknownSubject);
}

TEST(Notes, DeletedSubjectRejected) {
  auto sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;
  const auto c = concepts::create_concept(sb, scorers, {"sunny", "text", "lex", std::nullopt, {}, ""}).concept_def;
  concepts::delete_concept(sb, c.id);
  EXPECT_EQ(code_of([&] { add_note(sb, c.id, "x"); }), ErrorCode::UnknownSubject);
}

TEST(HistoryLog, OrderedGapFreeAndPersistent) {
  auto sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;
  const auto start = sb.history.last_seq();
  concepts::create_concept(sb, scorers, {"sunny", "text", "lex", std::nullopt, {}, ""});
  concepts::create_concept(sb, scorers, {"warm", "text", "lex", std::nullopt, {}, ""});
  sketch::train_sketch(sb, scorers, {{"sunny", "warm"}, std::nullopt, std::nullopt, "", ""});
  const auto events = get_history(sb, start);
  ASSERT_GE(events.size(), 3u);
  EXPECT_EQ(events[0].kind, core::EventKind::ConceptCreated);
  EXPECT_EQ(events[2].kind, core::EventKind::SketchTrained);
  const auto all = get_history(sb);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].seq, i + 1);
  EXPECT_TRUE(get_history(sb, sb.history.last_seq()).empty());
  const auto copy = core::import_sketchbook(core::export_sketchbook(sb));
  EXPECT_EQ(get_history(copy).size(), all.size());
}
