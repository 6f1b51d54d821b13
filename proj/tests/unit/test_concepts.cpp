#include <gtest/gtest.h>

#include <functional>

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"
#include "msb/core/random.hpp"
#include "msb/sketch/ops.hpp"
#include "support/fixtures.hpp"

using namespace msb;
using namespace msb::concepts;
using fx::CountingBackend;

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

// Returns fixed raw scores whatever the request.
class FixedBackend : public scoring::ScorerBackend {
 public:
  FixedBackend(scoring::BackendKind kind, std::vector<double> scores) : kind_(kind), scores_(std::move(scores)) {}
  scoring::BackendKind kind() const override { return kind_; }
  scoring::ScoreBatch score(const scoring::ScoreRequest&) override { return {scores_, 0}; }

 private:
  scoring::BackendKind kind_;
  std::vector<double> scores_;
};

ConceptSpec lex(const std::string& term, std::vector<Transform> chain = {}, std::string id = {}) {
  return ConceptSpec{term, "text", "lex", std::nullopt, std::move(chain), std::move(id)};
}

}  // namespace

TEST(Transforms, NormalizeExamples) {
  EXPECT_EQ(normalize(std::vector<double>{0.25, 0.5, 0.75}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(normalize(std::vector<double>{0.3, 0.3}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(normalize(std::vector<double>{-1, 1}), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(code_of([] { normalize(std::vector<double>{}); }), ErrorCode::EmptyScores);
}

TEST(Transforms, CalibrateExamples) {
  const auto c = calibrate(std::vector<double>{0.1, 0.5, 0.9}, 0.2, 0.8);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_NEAR(c[1], 0.5, 1e-15);
  EXPECT_EQ(c[2], 1.0);
  EXPECT_EQ(calibrate(std::vector<double>{0.2, 0.8}, 0.2, 0.8), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(code_of([] { calibrate(std::vector<double>{0.5}, 0.3, 0.3); }), ErrorCode::BadBounds);
  EXPECT_EQ(code_of([] { calibrate(std::vector<double>{0.5}, 0.4, 0.3); }), ErrorCode::BadBounds);
}

TEST(Transforms, BinarizeExamples) {
  EXPECT_EQ(binarize(std::vector<double>{0.4, 0.6}, 0.5), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(binarize(std::vector<double>{0.5}, 0.5), (std::vector<double>{1.0}));
}

TEST(Transforms, RandomizedProperties) {
  core::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(30);
    std::vector<double> s(n);
    for (auto& v : s) v = rng.uniform(-3.0, 3.0);
    if (trial % 10 == 0) std::fill(s.begin(), s.end(), s[0]);
    for (double v : normalize(s)) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
    const double lo = rng.uniform(-2.0, 1.0), hi = lo + rng.uniform(0.01, 2.0);
    for (double v : calibrate(s, lo, hi)) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
    const double t = rng.uniform(-3.0, 3.0);
    const auto b = binarize(s, t);
    EXPECT_EQ(binarize(b, 0.5), b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(b[i], s[i] >= t ? 1.0 : 0.0);
  }
}

TEST(Transforms, ChainAppliesLeftToRight) {
  const std::vector<Transform> chain{Normalize{}, Binarize{0.5}};
  EXPECT_EQ(apply_chain({-0.2, 0.3, 0.8}, chain), (std::vector<double>{0.0, 1.0, 1.0}));
  EXPECT_NE(chain_fingerprint(chain), chain_fingerprint({Binarize{0.5}, Normalize{}}));
  EXPECT_EQ(code_of([] { validate_chain({Calibrate{1.0, 0.0}}); }), ErrorCode::BadBounds);
}

TEST(Combine, Examples) {
  const std::vector<std::vector<double>> kids{{1, 0, 1}, {1, 1, 0}};
  EXPECT_EQ(combine(LogicOp::And, kids), (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(combine(LogicOp::Or, kids), (std::vector<double>{1, 1, 1}));
}

class ConceptEngine : public ::testing::Test {
 protected:
  core::Sketchbook sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;
};

TEST_F(ConceptEngine, LexiconConceptScoresTrain) {
  const auto created = create_concept(sb, scorers, lex("sunny"));
  ASSERT_TRUE(created.scores);
  const auto& ds = sb.datasets.at("train");
  ASSERT_EQ(created.scores->scores.size(), ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const bool has = core::cell_text(ds.at(r, 0)).find("sunny") != std::string::npos;
    EXPECT_EQ(created.scores->scores[r], has ? 1.0 : 0.0);
  }
  EXPECT_EQ(created.concept_def.output_kind, OutputKind::Binary);
  EXPECT_EQ(created.concept_def.id[0], 'c');
  EXPECT_EQ(sb.history.events().back().kind, core::EventKind::ConceptCreated);
}

TEST_F(ConceptEngine, ProfanityTwoRows) {
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", fx::text_dataset("train", {"damn it", "hello"}, {}));
  auto small = core::create_sketchbook("g", std::move(datasets), fx::text_schema());
  core::add_backend(small, fx::lexicon_backend("lex", {{"profanity", {"damn"}}}));
  EXPECT_EQ(create_concept(small, scorers, lex("profanity")).scores->scores, (std::vector<double>{1.0, 0.0}));
}

TEST_F(ConceptEngine, CreationErrorsRegisterNothing) {
  const auto before = sb.history.size();
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, {"", "text", "lex", {}, {}, ""}); }), ErrorCode::EmptyTerm);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, {"a", "nope", "lex", {}, {}, ""}); }), ErrorCode::UnknownField);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, {"a", "text", "zzz", {}, {}, ""}); }), ErrorCode::UnknownBackend);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, {"a", "label", "lex", {}, {}, ""}); }), ErrorCode::KindMismatch);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, lex("a", {Calibrate{1, 1}})); }), ErrorCode::BadBounds);
  EXPECT_EQ(code_of([&] {
              create_concept(sb, scorers, {"a", "text", "lex", OutputKind::Binary, {Normalize{}}, ""});
            }),
            ErrorCode::InconsistentTransforms);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, lex("a"), "nosuch"); }), ErrorCode::UnknownDataset);
  EXPECT_TRUE(sb.concepts.empty());
  EXPECT_EQ(sb.history.size(), before);
}

TEST_F(ConceptEngine, PromptBackendRejectsImageField) {
  core::Schema schema;
  schema.add("post_image", core::InputKind::Image);
  core::Dataset ds{"train", {"post_image"}, {{std::string("a.png")}}};
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", ds);
  auto img = core::create_sketchbook("g", std::move(datasets), schema);
  scoring::BackendConfig prompt;
  prompt.id = "gpt";
  prompt.kind = scoring::BackendKind::Prompt;
  core::add_backend(img, prompt);
  EXPECT_EQ(code_of([&] { create_concept(img, scorers, {"cartoon", "post_image", "gpt", {}, {}, ""}); }),
            ErrorCode::KindMismatch);
}

TEST_F(ConceptEngine, EmbeddingConceptWithNormalize) {
  core::Schema schema;
  schema.add("post_image", core::InputKind::Image);
  core::Dataset ds{"train", {"post_image"}, {{std::string("a.png")}, {std::string("b.png")}, {std::string("c.png")}}};
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", ds);
  auto img = core::create_sketchbook("g", std::move(datasets), schema);
  scoring::BackendConfig emb;
  emb.id = "emb";
  emb.kind = scoring::BackendKind::Embedding;
  core::add_backend(img, emb);
  scorers.install("emb", std::make_shared<FixedBackend>(scoring::BackendKind::Embedding,
                                                        std::vector<double>{-0.2, 0.3, 0.8}));
  const auto raw = create_concept(img, scorers, {"cartoon", "post_image", "emb", {}, {}, ""});
  EXPECT_EQ(raw.concept_def.output_kind, OutputKind::Continuous);
  EXPECT_EQ(raw.scores->scores, (std::vector<double>{-0.2, 0.3, 0.8}));
  const auto normalized = create_concept(img, scorers, {"cartoon", "post_image", "emb", {}, {Normalize{}}, ""});
  ASSERT_EQ(normalized.scores->scores.size(), 3u);
  EXPECT_EQ(normalized.scores->scores[0], 0.0);
  EXPECT_NEAR(normalized.scores->scores[1], 0.5, 1e-15);
  EXPECT_EQ(normalized.scores->scores[2], 1.0);
}

TEST_F(ConceptEngine, CachedScoresNeedNoBackendCalls) {
  auto counting = std::make_shared<CountingBackend>(scoring::make_backend(sb.backends.at("lex")));
  scorers.install("lex", counting);
  const auto c = create_concept(sb, scorers, lex("sunny")).concept_def;
  EXPECT_EQ(counting->calls, 1);
  const auto a = score_concept(sb, scorers, c.id, "train");
  const auto b = score_concept(sb, scorers, c.id, "train");
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.cache_key, b.cache_key);
  // Same term and field with a different chain reuses the raw scores.
  create_concept(sb, scorers, lex("sunny", {Binarize{0.7}}));
  EXPECT_EQ(counting->calls, 1);
  score_concept(sb, scorers, c.id, "test");
  EXPECT_EQ(counting->calls, 2);
  score_concept(sb, scorers, c.id, "train", {.rescore = true});
  EXPECT_EQ(counting->calls, 3);
}

TEST_F(ConceptEngine, ThresholdChangesNeedNoBackendCalls) {
  auto counting = std::make_shared<CountingBackend>(scoring::make_backend(sb.backends.at("lex")));
  scorers.install("lex", counting);
  const auto c = create_concept(sb, scorers, lex("sunny", {Calibrate{0.0, 2.0}})).concept_def;
  const int after_create = counting->calls;
  const auto half = preview_transforms(sb, scorers, c.id, "train", {Binarize{0.5}});
  const auto high = preview_transforms(sb, scorers, c.id, "train", {Binarize{0.7}});
  EXPECT_EQ(counting->calls, after_create);
  EXPECT_EQ(half.scores, high.scores);
  // Preview leaves the concept untouched.
  EXPECT_EQ(sb.concepts.at(c.id).transforms.size(), 1u);

  set_transforms(sb, c.id, {Binarize{0.7}});
  EXPECT_EQ(sb.concepts.at(c.id).output_kind, OutputKind::Binary);
  EXPECT_EQ(score_concept(sb, scorers, c.id, "train").scores, high.scores);
  EXPECT_EQ(counting->calls, after_create);
  EXPECT_EQ(sb.history.events().back().kind, core::EventKind::ConceptRefined);
}

TEST_F(ConceptEngine, SetTransformsKeepsCompoundChildrenBinary) {
  const auto a = create_concept(sb, scorers, lex("sunny")).concept_def;
  const auto b = create_concept(sb, scorers, lex("warm")).concept_def;
  create_compound(sb, LogicOp::And, {a.id, b.id});
  EXPECT_EQ(code_of([&] { set_transforms(sb, a.id, {Calibrate{0, 2}}); }), ErrorCode::InconsistentTransforms);
  set_transforms(sb, a.id, {Calibrate{0, 2}, Binarize{0.25}});
  EXPECT_EQ(sb.concepts.at(a.id).output_kind, OutputKind::Binary);
}

TEST_F(ConceptEngine, ResolveByIdOrUniqueTerm) {
  const auto a = create_concept(sb, scorers, lex("sunny", {}, "sun")).concept_def;
  EXPECT_EQ(resolve_concept(sb, "sunny").id, "sun");
  EXPECT_EQ(resolve_concept(sb, "sun").id, "sun");
  create_concept(sb, scorers, lex("sunny", {Binarize{0.5}}));
  EXPECT_EQ(code_of([&] { resolve_concept(sb, "sunny"); }), ErrorCode::AmbiguousConcept);
  EXPECT_EQ(code_of([&] { resolve_concept(sb, "zzz"); }), ErrorCode::UnknownConcept);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, lex("warm", {}, "sun")); }), ErrorCode::DuplicateId);
}

TEST_F(ConceptEngine, CompoundErrors) {
  const auto a = create_concept(sb, scorers, lex("sunny")).concept_def;
  const auto cont = create_concept(sb, scorers, lex("warm", {Calibrate{0, 2}})).concept_def;
  EXPECT_EQ(code_of([&] { create_compound(sb, LogicOp::And, {a.id}); }), ErrorCode::TooFewChildren);
  EXPECT_EQ(code_of([&] { create_compound(sb, LogicOp::And, {a.id, cont.id}); }), ErrorCode::NonBinaryChild);
  EXPECT_EQ(code_of([&] { create_compound(sb, LogicOp::Or, {a.id, "nope"}); }), ErrorCode::UnknownConcept);
  create_concept(sb, scorers, lex("warm", {}, "warm_bin"));
  const auto both = create_compound(sb, LogicOp::Or, {a.id, "warm_bin"});
  EXPECT_EQ(both.term, "(sunny OR warm)");
  EXPECT_EQ(both.output_kind, OutputKind::Binary);
}

TEST_F(ConceptEngine, CompoundMatchesBooleanOracle) {
  // Rows enumerate every assignment of four keywords.
  const std::vector<std::string> words{"alpha", "bravo", "charlie", "delta"};
  std::vector<std::string> texts;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::string t = "row";
    for (unsigned k = 0; k < 4; ++k) {
      if (mask & (1u << k)) t += " " + words[k];
    }
    texts.push_back(t);
  }
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", fx::text_dataset("train", texts, {}));
  auto book = core::create_sketchbook("g", std::move(datasets), fx::text_schema());
  std::map<std::string, std::vector<std::string>> table;
  for (const auto& w : words) table[w] = {w};
  core::add_backend(book, fx::lexicon_backend("lex", table));
  std::vector<std::string> leaves;
  for (const auto& w : words) leaves.push_back(create_concept(book, scorers, lex(w)).concept_def.id);

  // Random expression trees of depth <= 3 over the leaves.
  core::Rng rng(5);
  struct Node {
    std::string id;
    std::function<bool(unsigned)> eval;
  };
  std::function<Node(int)> build = [&](int depth) -> Node {
    if (depth == 0 || rng.below(3) == 0) {
      const std::size_t k = rng.below(4);
      return {leaves[k], [k](unsigned mask) { return ((mask >> k) & 1u) != 0; }};
    }
    const auto op = rng.below(2) ? LogicOp::And : LogicOp::Or;
    const std::size_t arity = 2 + rng.below(2);
    std::vector<Node> kids;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < arity; ++i) {
      kids.push_back(build(depth - 1));
      ids.push_back(kids.back().id);
    }
    const auto c = create_compound(book, op, ids);
    return {c.id, [op, kids](unsigned mask) {
              bool acc = op == LogicOp::And;
              for (const auto& k : kids) acc = op == LogicOp::And ? (acc && k.eval(mask)) : (acc || k.eval(mask));
              return acc;
            }};
  };
  for (int trial = 0; trial < 40; ++trial) {
    const Node root = build(3);
    const auto scores = score_concept(book, scorers, root.id, "train").scores;
    for (unsigned mask = 0; mask < 16; ++mask) EXPECT_EQ(scores[mask], root.eval(mask) ? 1.0 : 0.0) << root.id;
  }
}

TEST_F(ConceptEngine, ViewOrdering) {
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", fx::text_dataset("train", {"a", "b", "c"}, {}));
  auto book = core::create_sketchbook("g", std::move(datasets), fx::text_schema());
  scoring::BackendConfig emb;
  emb.id = "lex";
  core::add_backend(book, emb);
  scorers.install("lex", std::make_shared<FixedBackend>(scoring::BackendKind::Lexicon, std::vector<double>{0.1, 0.9, 0.5}));
  const auto c = create_concept(book, scorers, lex("x", {Calibrate{0, 1}})).concept_def;
  EXPECT_EQ(concept_view(book, scorers, c.id, "train").row_index, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(concept_view(book, scorers, c.id, "train", false).row_index, (std::vector<std::size_t>{0, 2, 1}));
  const auto table = concept_view(book, scorers, c.id, "train");
  EXPECT_EQ(table.columns.back(), "score");
  EXPECT_EQ(std::get<double>(table.rows[0].back()), 0.9);
}

TEST(SortedOrder, TiesKeepRowOrder) {
  EXPECT_EQ(core::sorted_order(std::vector<double>{0.5, 0.5}, true), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(core::sorted_order(std::vector<double>{0.5, 0.5}, false), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(core::sorted_order(std::vector<double>{}, true).empty());
}

TEST_F(ConceptEngine, EmptyDatasetGivesEmptyView) {
  core::add_dataset(sb, fx::text_dataset("empty", {}, {}));
  const auto c = create_concept(sb, scorers, lex("sunny")).concept_def;
  const auto table = concept_view(sb, scorers, c.id, "empty");
  EXPECT_TRUE(table.rows.empty());
}

TEST_F(ConceptEngine, DeleteRespectsUsersAndRetiresId) {
  const auto a = create_concept(sb, scorers, lex("sunny")).concept_def;
  const auto b = create_concept(sb, scorers, lex("warm")).concept_def;
  const auto both = create_compound(sb, LogicOp::And, {a.id, b.id});
  EXPECT_EQ(code_of([&] { delete_concept(sb, a.id); }), ErrorCode::ConceptInUse);
  delete_concept(sb, both.id);
  const auto s = sketch::train_sketch(sb, scorers, {{a.id}, std::nullopt, std::nullopt, "", ""});
  EXPECT_EQ(code_of([&] { delete_concept(sb, a.id); }), ErrorCode::ConceptInUse);
  sketch::delete_sketch(sb, s.id);
  delete_concept(sb, a.id);
  EXPECT_EQ(sb.concepts.count(a.id), 0u);
  EXPECT_EQ(code_of([&] { create_concept(sb, scorers, lex("sunny", {}, a.id)); }), ErrorCode::DuplicateId);
  EXPECT_EQ(sb.history.events().back().kind, core::EventKind::ConceptDeleted);
}

TEST_F(ConceptEngine, TwoPhaseScoringMatchesDirect) {
  const auto c = create_concept(sb, scorers, lex("warm"), "train", false).concept_def;
  auto tasks = pending_tasks(sb, c.id, "test");
  ASSERT_EQ(tasks.size(), 1u);
  EXPECT_EQ(tasks[0].raw_key, raw_cache_key(c, "test"));
  store_raw(sb, tasks[0], run_task(scorers, tasks[0]));
  EXPECT_TRUE(pending_tasks(sb, c.id, "test").empty());
  core::Sketchbook fresh = fx::weather_sketchbook();
  const auto direct = create_concept(fresh, scorers, lex("warm"), "test");
  EXPECT_EQ(score_concept(sb, scorers, c.id, "test").scores, direct.scores->scores);
}
