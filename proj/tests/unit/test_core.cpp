#include <gtest/gtest.h>

#include <sstream>

#include "msb/concepts/engine.hpp"
#include "msb/core/error.hpp"
#include "msb/core/sketchbook.hpp"
#include "msb/sketch/ops.hpp"
#include "support/fixtures.hpp"

using namespace msb;
using core::InputKind;

namespace {

core::Schema memes_schema() {
  core::Schema s;
  s.add("text", InputKind::Text);
  s.add("img_url", InputKind::Image);
  s.add("overall_rating", InputKind::GroundTruth);
  return s;
}

std::string memes_csv(std::size_t rows) {
  std::ostringstream out;
  out << "text,img_url,overall_rating\n";
  for (std::size_t i = 0; i < rows; ++i) {
    out << "\"meme " << i << ", with a comma\",https://img.example/" << i << ".png," << (i % 5) / 4.0
        << "\n";
  }
  return out.str();
}

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

}  // namespace

TEST(Schema, RejectsSecondGroundTruth) {
  core::Schema s;
  s.add("a", InputKind::GroundTruth);
  EXPECT_EQ(code_of([&] { s.add("b", InputKind::GroundTruth); }), ErrorCode::DuplicateGroundTruth);
}

TEST(Schema, KeepsDeclarationOrder) {
  const auto s = memes_schema();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.fields()[1].name, "img_url");
  EXPECT_EQ(s.ground_truth_field(), "overall_rating");
  EXPECT_EQ(s.index_of("overall_rating"), 2u);
}

TEST(Ingest, FortyRowFile) {
  const auto ds = core::ingest_csv_text(memes_csv(40), memes_schema(), "train");
  ASSERT_EQ(ds.size(), 40u);
  EXPECT_EQ(core::cell_text(ds.at(3, 0)), "meme 3, with a comma");
  EXPECT_DOUBLE_EQ(std::get<double>(ds.at(4, 2)), 1.0);
}

TEST(Ingest, BadNumericNamesRowAndField) {
  auto csv = memes_csv(10);
  // Replace the label of data row 7.
  const auto pos = csv.find("/7.png,") + 7;
  csv.replace(pos, csv.find('\n', pos) - pos, "abc");
  try {
    core::ingest_csv_text(csv, memes_schema(), "train");
    FAIL() << "expected BadNumeric";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadNumeric);
    EXPECT_EQ(e.field(), "overall_rating");
    EXPECT_EQ(e.detail(), 7);
  }
}

TEST(Ingest, HeaderMissingField) {
  try {
    core::ingest_csv_text("text,overall_rating\nhi,1\n", memes_schema(), "train");
    FAIL() << "expected HeaderMissingField";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HeaderMissingField);
    EXPECT_EQ(e.field(), "img_url");
  }
}

TEST(Ingest, EmptyFile) {
  EXPECT_EQ(code_of([] { core::ingest_csv_text("", memes_schema(), "t"); }), ErrorCode::EmptyFile);
}

TEST(Ingest, GroundTruthOutOfRange) {
  EXPECT_EQ(code_of([] {
              core::ingest_csv_text("text,img_url,overall_rating\nx,y,1.5\n", memes_schema(), "t");
            }),
            ErrorCode::GroundTruthOutOfRange);
}

TEST(Ingest, EmptyCellsAreMissingAndExtraColumnsDropped) {
  const auto ds = core::ingest_csv_text("extra,text,img_url,overall_rating\nz,hello,,\n",
                                        memes_schema(), "t");
  ASSERT_EQ(ds.columns.size(), 3u);
  EXPECT_EQ(core::cell_text(ds.at(0, 0)), "hello");
  EXPECT_TRUE(core::is_missing(ds.at(0, 1)));
  EXPECT_TRUE(core::is_missing(ds.at(0, 2)));
  EXPECT_FALSE(core::is_labeled(memes_schema(), ds));
}

TEST(Ingest, QuotedNewlinesAndEscapedQuotes) {
  const auto records = core::parse_csv_records("a,b\n\"x\ny\",\"say \"\"hi\"\"\"\n");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[1][0], "x\ny");
  EXPECT_EQ(records[1][1], "say \"hi\"");
}

TEST(Sketchbook, CreateWithTwoDatasets) {
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", core::ingest_csv_text(memes_csv(40), memes_schema(), "train"));
  datasets.emplace("test", core::ingest_csv_text(memes_csv(10), memes_schema(), "test"));
  const auto sb = core::create_sketchbook("Detect hateful memes on social media.", std::move(datasets),
                                          memes_schema());
  EXPECT_EQ(sb.datasets.size(), 2u);
  EXPECT_FALSE(sb.id.empty());
  ASSERT_EQ(sb.history.size(), 1u);
  EXPECT_EQ(sb.history.events()[0].kind, core::EventKind::SketchbookCreated);
}

TEST(Sketchbook, MissingColumnNamesField) {
  auto ds = fx::text_dataset("train", {"a"}, {1.0});
  ds.columns = {"body", "label"};
  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", ds);
  try {
    core::create_sketchbook("g", std::move(datasets), fx::text_schema());
    FAIL() << "expected SchemaMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    EXPECT_EQ(e.field(), "text");
  }
}

TEST(Sketchbook, NoDatasets) {
  EXPECT_EQ(code_of([] { core::create_sketchbook("g", {}, fx::text_schema()); }),
            ErrorCode::EmptyDatasets);
}

TEST(Sketchbook, IdsShareOneNamespaceAndAreNeverReused) {
  auto sb = fx::weather_sketchbook();
  const auto a = sb.allocate_id("c");
  sb.retired_ids.insert(a);
  const auto b = sb.allocate_id("s");
  EXPECT_NE(a.substr(1), b.substr(1));
  EXPECT_EQ(code_of([&] { sb.check_new_id(a); }), ErrorCode::DuplicateId);
  EXPECT_EQ(code_of([&] { sb.check_new_id("bad id!"); }), ErrorCode::InvalidId);
}

TEST(History, GapFreeAndSince) {
  core::History h;
  for (int i = 0; i < 5; ++i) h.append(core::EventKind::NoteAdded, "n", "x");
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h.events()[i].seq, i + 1);
  EXPECT_EQ(h.since(3).size(), 2u);
  EXPECT_TRUE(h.since(h.last_seq()).empty());
  auto events = h.events();
  events.erase(events.begin() + 2);
  EXPECT_EQ(code_of([&] { core::History::restore(events); }), ErrorCode::CorruptDocument);
}

class Persistence : public ::testing::Test {
 protected:
  core::Sketchbook sb = fx::weather_sketchbook();
  scoring::ScorerRegistry scorers;

  void SetUp() override {
    concepts::create_concept(sb, scorers, {"sunny", "text", "lex", std::nullopt, {}, "sun"});
    concepts::create_concept(sb, scorers, {"warm", "text", "lex", std::nullopt, {}, "warm"});
    concepts::create_concept(sb, scorers,
                             {"warm", "text", "lex", std::nullopt, {concepts::Calibrate{0.0, 2.0}}, "warm_half"});
    sketch::train_sketch(sb, scorers, {{"sun", "warm_half"}, std::nullopt, std::nullopt, "", ""});
  }
};

TEST_F(Persistence, RoundTripPredictsBitIdentically) {
  const auto& sid = sb.sketches.begin()->first;
  const auto before = sketch::predict(sb, scorers, sid, "test");
  auto copy = core::import_sketchbook_text(core::export_sketchbook_text(sb));
  scoring::ScorerRegistry fresh;
  const auto after = sketch::predict(copy, fresh, sid, "test");
  ASSERT_EQ(before.size(), after.size());
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]) << i;
  EXPECT_EQ(core::export_sketchbook(copy), core::export_sketchbook(sb));
}

TEST_F(Persistence, HistorySurvivesRoundTrip) {
  const auto copy = core::import_sketchbook(core::export_sketchbook(sb));
  ASSERT_EQ(copy.history.size(), sb.history.size());
  for (std::size_t i = 0; i < sb.history.size(); ++i) {
    EXPECT_EQ(copy.history.events()[i].seq, sb.history.events()[i].seq);
    EXPECT_EQ(copy.history.events()[i].summary, sb.history.events()[i].summary);
  }
}

TEST_F(Persistence, UnknownVersion) {
  auto doc = core::export_sketchbook(sb);
  doc["format_version"] = 99;
  EXPECT_EQ(code_of([&] { core::import_sketchbook(doc); }), ErrorCode::VersionMismatch);
}

TEST_F(Persistence, TruncatedDocument) {
  const auto text = core::export_sketchbook_text(sb);
  EXPECT_EQ(code_of([&] { core::import_sketchbook_text(text.substr(0, text.size() / 2)); }),
            ErrorCode::CorruptDocument);
}
