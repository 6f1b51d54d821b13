#include "msb/eval/bench.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "msb/concepts/engine.hpp"
#include "msb/core/dataset.hpp"
#include "msb/core/error.hpp"
#include "msb/core/sketchbook.hpp"
#include "msb/eval/views.hpp"
#include "msb/sketch/ops.hpp"

namespace msb::eval {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kMetrics = {"mae", "accuracy", "f1", "precision", "recall", "auroc"};

[[noreturn]] void bad_config(const std::string& message, const std::string& field) {
  throw Error(ErrorCode::BadConfig, message, field);
}

double metric_value(const MetricsReport& m, const std::string& metric, double label_max) {
  if (metric == "mae") return m.mae * label_max;
  if (metric == "accuracy") return m.accuracy;
  if (metric == "f1") return m.f1;
  if (metric == "precision") return m.precision;
  if (metric == "recall") return m.recall;
  if (!m.auroc) {
    throw Error(ErrorCode::SingleClass, "evaluation sample holds a single class; auroc is undefined",
                "metric");
  }
  return *m.auroc;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

core::Dataset read_scaled(const fs::path& path, const core::Schema& schema, double label_max,
                          const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'", name + "_csv");
  std::ostringstream text;
  text << in.rdbuf();
  const auto gt = schema.ground_truth_field();
  if (!gt || label_max == 1.0) return core::ingest_csv_text(text.str(), schema, name);

  // Read labels as plain numbers, then bring them onto [0, 1].
  core::Schema raw;
  for (const auto& f : schema.fields()) {
    raw.add(f.name, f.name == *gt ? core::InputKind::Numeric : f.kind);
  }
  auto ds = core::ingest_csv_text(text.str(), raw, name);
  const std::size_t col = *ds.column_index(*gt);
  for (auto& row : ds.rows) {
    if (auto* v = std::get_if<double>(&row[col])) *v /= label_max;
  }
  core::validate_dataset(schema, ds);
  return ds;
}

core::Dataset subset(const core::Dataset& ds, const std::vector<std::size_t>& rows) {
  core::Dataset out;
  out.name = ds.name;
  out.columns = ds.columns;
  for (std::size_t r : rows) out.rows.push_back(ds.rows[r]);
  return out;
}

}  // namespace

bool Gate::passes(double observed) const {
  if (op == "<") return observed < value;
  if (op == "<=") return observed <= value;
  if (op == ">") return observed > value;
  return observed >= value;
}

Gate parse_gate(const std::string& text) {
  const auto pos = text.find_first_of("<>");
  if (pos == std::string::npos || pos == 0) bad_config("gate '" + text + "' has no comparison", "gate");
  Gate g;
  g.metric = text.substr(0, pos);
  std::size_t rest = pos + 1;
  g.op = text.substr(pos, 1);
  if (rest < text.size() && text[rest] == '=') {
    g.op += "=";
    ++rest;
  }
  if (std::find(kMetrics.begin(), kMetrics.end(), g.metric) == kMetrics.end()) {
    bad_config("gate names unknown metric '" + g.metric + "'", "gate");
  }
  const std::string number = text.substr(rest);
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), g.value);
  if (number.empty() || ec != std::errc{} || ptr != number.data() + number.size()) {
    bad_config("gate threshold '" + number + "' is not a number", "gate");
  }
  return g;
}

BenchConfig bench_config_from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) bad_config("bench config must be an object", "");
  BenchConfig c;
  try {
    c.name = j.value("name", std::string("bench"));
    if (!j.contains("train_csv") || !j.contains("eval_csv")) {
      bad_config("train_csv and eval_csv are required", j.contains("train_csv") ? "eval_csv" : "train_csv");
    }
    c.train_csv = resolve(base_dir, j.at("train_csv").get<std::string>());
    c.eval_csv = resolve(base_dir, j.at("eval_csv").get<std::string>());
    if (!j.contains("schema")) bad_config("schema is required", "schema");
    c.schema = core::schema_from_json(j.at("schema"));
    if (!c.schema.ground_truth_field()) bad_config("schema needs a ground_truth field", "schema");
    c.label_max = j.value("label_max", 1.0);
    if (!(c.label_max > 0.0)) bad_config("label_max must be positive", "label_max");

    for (const auto& b : j.value("backends", Json::array())) {
      auto cfg = scoring::backend_config_from_json(b);
      if (cfg.kind == scoring::BackendKind::Embedding) {
        bad_config("bench resamples rows, so row-keyed embedding backends cannot be used",
                   "backends");
      }
      if (!cfg.lexicon.table_file.empty()) {
        cfg.lexicon.table_file = resolve(base_dir, cfg.lexicon.table_file).string();
      }
      c.backends.push_back(std::move(cfg));
    }
    if (c.backends.empty()) bad_config("at least one backend is required", "backends");

    for (const auto& group : j.value("concepts", Json::array())) {
      BenchConcepts bc;
      bc.field = group.at("field").get<std::string>();
      bc.backend = group.value("backend", c.backends.front().id);
      bc.terms = group.at("terms").get<std::vector<std::string>>();
      for (const auto& t : group.value("transforms", Json::array())) {
        bc.transforms.push_back(concepts::transform_from_json(t));
      }
      c.concepts.push_back(std::move(bc));
    }
    if (c.concepts.empty()) bad_config("at least one concept group is required", "concepts");

    const auto kind_name = j.value("kind", std::string("linear_regression"));
    auto kind = sketch::aggregator_from_string(kind_name);
    if (!kind || *kind == sketch::AggregatorKind::ManualWeights) {
      bad_config("unknown aggregator '" + kind_name + "'", "kind");
    }
    c.kind = *kind;
    c.seed = j.value("seed", c.seed);
    c.options = sketch::train_options_from_json(j.value("options", Json::object()));
    c.options.seed = c.seed;
    c.metric = j.value("metric", c.metric);
    if (std::find(kMetrics.begin(), kMetrics.end(), c.metric) == kMetrics.end()) {
      bad_config("unknown metric '" + c.metric + "'", "metric");
    }
    c.train_limit = j.value("train_limit", c.train_limit);
    c.eval_limit = j.value("eval_limit", c.eval_limit);
    if (c.train_limit < 2 || c.eval_limit < 1) bad_config("sample limits are too small", "train_limit");
    if (j.contains("gate") && !j.at("gate").is_null()) c.gate = parse_gate(j.at("gate").get<std::string>());
    c.reference = j.value("reference", Json::object());
  } catch (const Json::exception& e) {
    bad_config(std::string("malformed bench config: ") + e.what(), "");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadConfig) throw;
    bad_config(e.what(), e.field());
  }
  return c;
}

BenchConfig load_bench_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) bad_config("cannot read bench config '" + path.string() + "'", "config");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    bad_config(std::string("bench config is not valid JSON: ") + e.what(), "config");
  }
  return bench_config_from_json(j, path.parent_path());
}

std::vector<std::size_t> stratified_sample(const std::vector<double>& labels, std::size_t limit,
                                           core::Rng& rng) {
  if (labels.size() <= limit) {
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);

  const double total = static_cast<double>(labels.size());
  std::vector<std::size_t> quota;
  std::vector<std::pair<double, std::size_t>> remainders;  // (remainder, group position)
  std::size_t assigned = 0;
  for (const auto& [label, members] : groups) {
    const double exact = static_cast<double>(limit) * static_cast<double>(members.size()) / total;
    const auto q = static_cast<std::size_t>(exact);
    remainders.emplace_back(exact - static_cast<double>(q), quota.size());
    quota.push_back(q);
    assigned += q;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < limit && k < remainders.size(); ++k, ++assigned) {
    ++quota[remainders[k].second];
  }

  std::vector<std::size_t> out;
  std::size_t g = 0;
  for (const auto& [label, members] : groups) {
    for (std::size_t pick : rng.sample_without_replacement(members.size(), quota[g++])) {
      out.push_back(members[pick]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

BenchReport run_bench(const BenchConfig& config, scoring::ScorerRegistry& scorers) {
  // Surface missing credentials before touching the data.
  for (const auto& b : config.backends) scorers.get(b);
  const auto train_all = read_scaled(config.train_csv, config.schema, config.label_max, "train");
  const auto eval_all = read_scaled(config.eval_csv, config.schema, config.label_max, "eval");

  core::Rng rng(config.seed);
  const auto train_rows =
      rng.sample_without_replacement(train_all.size(), std::min(config.train_limit, train_all.size()));

  const auto truth = core::ground_truth_column(config.schema, eval_all);
  std::vector<std::size_t> labeled;
  std::vector<double> labels;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    if (!truth[r]) continue;
    labeled.push_back(r);
    labels.push_back(*truth[r]);
  }
  std::vector<std::size_t> eval_rows;
  for (std::size_t i : stratified_sample(labels, config.eval_limit, rng)) eval_rows.push_back(labeled[i]);

  std::map<std::string, core::Dataset> datasets;
  datasets.emplace("train", subset(train_all, train_rows));
  datasets.emplace("eval", subset(eval_all, eval_rows));
  auto sb = core::create_sketchbook("benchmark: " + config.name, std::move(datasets), config.schema);
  for (const auto& b : config.backends) core::add_backend(sb, b);

  std::vector<std::string> ids;
  for (const auto& group : config.concepts) {
    for (const auto& term : group.terms) {
      concepts::ConceptSpec spec;
      spec.term = term;
      spec.input_field = group.field;
      spec.backend_id = group.backend;
      spec.transforms = group.transforms;
      ids.push_back(concepts::create_concept(sb, scorers, spec, "train").concept_def.id);
    }
  }

  sketch::TrainRequest request;
  request.concepts = ids;
  request.kind = config.kind;
  request.options = config.options;
  request.dataset = "train";
  const auto model = sketch::train_sketch(sb, scorers, request);

  BenchReport report;
  report.name = config.name;
  report.metric = config.metric;
  report.metrics = evaluate_sketch(sb, scorers, model.id, "eval");
  report.value = metric_value(report.metrics, config.metric, config.label_max);
  report.n_train = train_rows.size();
  report.n_eval = eval_rows.size();
  report.gate = config.gate;
  if (config.gate) {
    report.gate_passed =
        config.gate->passes(metric_value(report.metrics, config.gate->metric, config.label_max));
  }
  if (const auto* lin = std::get_if<sketch::LinearModel>(&model.params)) {
    report.weights = lin->weights;
    report.intercept = lin->intercept;
  }
  report.reference = config.reference;
  return report;
}

Json to_json(const BenchReport& r) {
  Json j{{"name", r.name},
         {"metric", r.metric},
         {"value", r.value},
         {"metrics", to_json(r.metrics)},
         {"n_train", r.n_train},
         {"n_eval", r.n_eval}};
  if (r.gate) {
    j["gate"] = {{"metric", r.gate->metric},
                 {"op", r.gate->op},
                 {"value", r.gate->value},
                 {"passed", r.gate_passed.value_or(false)}};
  }
  if (r.intercept) {
    j["weights"] = r.weights;
    j["intercept"] = *r.intercept;
  }
  if (!r.reference.empty()) j["reference"] = r.reference;
  return j;
}

}  // namespace msb::eval
