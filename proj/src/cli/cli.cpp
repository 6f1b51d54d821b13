#include "msb/cli/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "msb/core/error.hpp"
#include "msb/core/sketchbook.hpp"
#include "msb/core/table.hpp"
#include "msb/eval/bench.hpp"
#include "msb/service/api.hpp"
#include "msb/service/http.hpp"

namespace msb::cli {
namespace {

namespace fs = std::filesystem;
using service::Request;
using service::Response;

constexpr auto kPollInterval = std::chrono::milliseconds(100);
constexpr auto kJobTimeout = std::chrono::minutes(30);
constexpr int kPendingRetries = 8;

// A failed API call, carried to the top level for exit status 1.
struct Failure {
  Json body;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path.string() + "'", "path");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    const auto j = std::min(s.find(sep, i), s.size());
    out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

double to_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError(what, "'" + s + "' is not a number");
}

// Inline JSON, a JSON file, or nothing.
std::optional<Json> json_argument(const std::string& value, fs::path* origin = nullptr) {
  if (!value.empty() && (value.front() == '{' || value.front() == '[')) return Json::parse(value);
  if (fs::is_regular_file(value)) {
    if (origin) *origin = fs::absolute(value).parent_path();
    return Json::parse(read_file(value));
  }
  return std::nullopt;
}

Json schema_argument(const std::string& value) {
  if (auto j = json_argument(value)) return *j;
  Json schema = Json::object();
  for (const auto& part : split(value, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      throw CLI::ValidationError("--schema", "expected field:kind pairs, got '" + part + "'");
    }
    schema[part.substr(0, colon)] = part.substr(colon + 1);
  }
  return schema;
}

std::string absolute_if_local(const std::string& path, const fs::path& base) {
  if (path.empty()) return path;
  const fs::path candidate = fs::path(path).is_absolute() ? fs::path(path) : base / path;
  return fs::exists(candidate) ? fs::absolute(candidate).string() : path;
}

// JSON config, or "lexicon:<id>:<table file>".
Json backend_argument(const std::string& value) {
  fs::path base = fs::current_path();
  Json j;
  if (auto parsed = json_argument(value, &base)) {
    j = *parsed;
  } else {
    const auto parts = split(value, ':');
    if (parts.size() != 3 || parts[0] != "lexicon") {
      throw CLI::ValidationError("--backend", "expected a JSON config or lexicon:<id>:<table file>");
    }
    j = Json{{"id", parts[1]}, {"kind", "lexicon"}, {"table_file", parts[2]}};
  }
  if (j.contains("table_file")) j["table_file"] = absolute_if_local(j["table_file"].get<std::string>(), base);
  if (j.contains("term_file")) j["term_file"] = absolute_if_local(j["term_file"].get<std::string>(), base);
  if (j.contains("sidecars")) {
    for (auto& [name, path] : j["sidecars"].items()) path = absolute_if_local(path.get<std::string>(), base);
  }
  return j;
}

Json transform_argument(const std::string& value) {
  const auto parts = split(value, ':');
  if (parts[0] == "normalize" && parts.size() == 1) return Json{{"type", "normalize"}};
  if (parts[0] == "calibrate" && parts.size() == 3) {
    return Json{{"type", "calibrate"},
                {"lo", to_number(parts[1], "--transform")},
                {"hi", to_number(parts[2], "--transform")}};
  }
  if (parts[0] == "binarize" && parts.size() <= 2) {
    return Json{{"type", "binarize"},
                {"threshold", parts.size() == 2 ? to_number(parts[1], "--transform") : 0.5}};
  }
  throw CLI::ValidationError("--transform",
                             "expected normalize, calibrate:<lo>:<hi> or binarize[:<threshold>]");
}

class Session {
 public:
  std::string data_dir;
  std::string sketchbook;
  std::string output = "table";
  std::string remote;

  Session(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  bool json() const { return output == "json"; }
  std::ostream& out() { return out_; }

  Response call(Request r) {
    if (!remote.empty()) return service::send_remote(remote, r);
    if (!api_) {
      store_ = std::make_unique<service::Store>(data_dir);
      scorers_ = std::make_unique<scoring::ScorerRegistry>();
      jobs_ = std::make_unique<service::JobManager>(2);
      api_ = std::make_unique<service::Api>(*store_, *scorers_, *jobs_);
    }
    return api_->handle(r);
  }

  // Fails on an error status; waits out pending scoring jobs and retries.
  Json request(const std::string& method, const std::string& path, const Json& body = nullptr,
               std::map<std::string, std::string> query = {}) {
    Request r{method, path, std::move(query), body.is_null() ? "" : body.dump(), {}};
    for (int attempt = 0;; ++attempt) {
      Response res = call(r);
      if (res.status < 400) return res.body;
      const bool pending = res.body.contains("jobs") &&
                           res.body["error"].value("code", "") == "ScoresPending";
      if (!pending || attempt >= kPendingRetries) throw Failure{res.body};
      for (const auto& job : res.body["jobs"]) {
        const Json done = await(job);
        if (done["state"] == "failed") throw Failure{Json{{"error", done["error"]}}};
      }
    }
  }

  Json await(Json job) {
    const auto deadline = std::chrono::steady_clock::now() + kJobTimeout;
    while (job["state"] == "queued" || job["state"] == "running") {
      if (std::chrono::steady_clock::now() > deadline) {
        throw Error(ErrorCode::EndpointError, "timed out waiting for job " + job["id"].get<std::string>());
      }
      std::this_thread::sleep_for(kPollInterval);
      job = request("GET", "/jobs/" + job["id"].get<std::string>());
    }
    return job;
  }

  std::string active_file() const { return (fs::path(data_dir) / "active_sketchbook").string(); }

  std::string require_sketchbook() {
    if (!sketchbook.empty()) return sketchbook;
    std::ifstream in(active_file());
    std::string id;
    if (in && std::getline(in, id) && !id.empty()) return id;
    throw Error(ErrorCode::UnknownSketchbook,
                "no active sketchbook; run `msb init` or pass --sketchbook", "sketchbook");
  }

  void set_active(const std::string& id) {
    fs::create_directories(data_dir);
    std::ofstream(active_file()) << id << '\n';
  }

  std::string sb_path(const std::string& rest = {}) { return "/sketchbooks/" + require_sketchbook() + rest; }

  void emit_json(const Json& j) { out_ << j.dump() << '\n'; }
  void emit_table(const Json& table) { out_ << core::render_text(core::table_from_json(table)); }

  ~Session() {
    if (jobs_) jobs_->shutdown();
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::unique_ptr<service::Store> store_;
  std::unique_ptr<scoring::ScorerRegistry> scorers_;
  std::unique_ptr<service::JobManager> jobs_;
  std::unique_ptr<service::Api> api_;
};

std::string fmt(const Json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream s;
    s.precision(6);
    s << v.get<double>();
    return s.str();
  }
  return v.dump();
}

void print_metrics(std::ostream& out, const Json& m) {
  for (const char* k : {"mae", "accuracy", "f1", "precision", "recall", "auroc", "n_rows", "threshold"}) {
    out << k << ": " << fmt(m[k]) << '\n';
  }
}

Json metrics_table(const Json& sketches) {
  Json t{{"columns", {"sketch_id", "mae", "accuracy", "f1", "precision", "recall", "auroc", "n_rows"}},
         {"rows", Json::array()}};
  std::size_t i = 0;
  for (const auto& s : sketches) {
    Json values = Json::array();
    for (const auto& c : t["columns"]) values.push_back(s[c.get<std::string>()]);
    t["rows"].push_back({{"row", i++}, {"values", values}});
  }
  return t;
}

Json correlation_table(const Json& result) {
  Json t{{"columns", Json::array({"concept_id", "corr_with_truth"})}, {"rows", Json::array()}};
  for (const auto& c : result["concepts"]) t["columns"].push_back(c["concept_id"]);
  std::size_t i = 0;
  for (const auto& c : result["concepts"]) {
    Json values{c["concept_id"], c["corr_with_truth"]};
    for (const auto& [k, v] : c["correlations"].items()) values.push_back(v);
    t["rows"].push_back({{"row", i++}, {"values", values}});
  }
  return t;
}

std::string escape_note(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == '\n' ? ' ' : c);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session session(out, err);
  const char* env_dir = std::getenv("MSB_DATA_DIR");
  session.data_dir = env_dir && *env_dir ? env_dir : "msb-data";

  CLI::App app{"msb: sketch models from human-readable concepts", "msb"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--data-dir", session.data_dir, "Sketchbook storage directory (MSB_DATA_DIR)");
  app.add_option("-s,--sketchbook", session.sketchbook, "Sketchbook id (default: the active one)");
  app.add_option("-o,--output", session.output, "Output mode")->check(CLI::IsMember({"table", "json"}));
  app.add_option("--remote", session.remote, "Drive a running msb_server at this URL");

  std::function<int()> action;

  // init
  auto* init = app.add_subcommand("init", "Create a sketchbook and make it active");
  std::string goal, schema_arg, init_id;
  std::vector<std::string> dataset_args, backend_args;
  init->add_option("--goal", goal, "Modeling goal")->required();
  init->add_option("--schema", schema_arg, "field:kind,... or a JSON schema (file or inline)")->required();
  init->add_option("--dataset", dataset_args, "name=path.csv (repeatable)")->required();
  init->add_option("--backend", backend_args, "Backend config JSON or lexicon:<id>:<table>");
  init->add_option("--id", init_id, "Sketchbook id");
  init->callback([&] {
    action = [&] {
      Json body{{"goal", goal}, {"schema", schema_argument(schema_arg)}, {"datasets", Json::object()}};
      if (!init_id.empty()) body["id"] = init_id;
      for (const auto& d : dataset_args) {
        const auto eq = d.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--dataset", "expected name=path.csv");
        body["datasets"][d.substr(0, eq)] = {{"csv", read_file(d.substr(eq + 1))}};
      }
      body["backends"] = Json::array();
      for (const auto& b : backend_args) body["backends"].push_back(backend_argument(b));
      const Json res = session.request("POST", "/sketchbooks", body);
      session.set_active(res["id"].get<std::string>());
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  // add-dataset / add-backend
  auto* add_ds = app.add_subcommand("add-dataset", "Add a CSV dataset to the sketchbook");
  std::string ds_name, ds_csv;
  add_ds->add_option("--name", ds_name)->required();
  add_ds->add_option("--csv", ds_csv)->required()->check(CLI::ExistingFile);
  add_ds->callback([&] {
    action = [&] {
      const Json res = session.request("POST", session.sb_path("/datasets"),
                                       Json{{"name", ds_name}, {"csv", read_file(ds_csv)}});
      if (session.json()) session.emit_json(res);
      else out << res["name"].get<std::string>() << ": " << res["rows"] << " rows\n";
      return kExitOk;
    };
  });
  auto* add_be = app.add_subcommand("add-backend", "Register a scorer backend");
  std::string be_arg;
  add_be->add_option("config", be_arg, "Backend config JSON or lexicon:<id>:<table>")->required();
  add_be->callback([&] {
    action = [&] {
      const Json res = session.request("POST", session.sb_path("/backends"), backend_argument(be_arg));
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  // concept ...
  auto* concept_cmd = app.add_subcommand("concept", "Create, score and inspect concepts");
  concept_cmd->require_subcommand(1);
  std::string c_term, c_field, c_backend, c_kind, c_id, c_dataset, c_ref, c_op;
  std::vector<std::string> c_transforms, c_list;
  bool c_rescore = false, c_ascending = false;

  auto* c_create = concept_cmd->add_subcommand("create", "Create a concept and score it on train");
  c_create->add_option("--term", c_term)->required();
  c_create->add_option("--field", c_field)->required();
  c_create->add_option("--backend", c_backend)->required();
  c_create->add_option("--output-kind", c_kind)->check(CLI::IsMember({"binary", "continuous"}));
  c_create->add_option("--transform", c_transforms,
                       "normalize | calibrate:<lo>:<hi> | binarize[:<t>], applied in order");
  c_create->add_option("--id", c_id);
  c_create->add_option("--dataset", c_dataset);
  c_create->callback([&] {
    action = [&] {
      Json body{{"term", c_term}, {"input_field", c_field}, {"backend_id", c_backend}};
      if (!c_kind.empty()) body["output_kind"] = c_kind;
      body["transforms"] = Json::array();
      for (const auto& t : c_transforms) body["transforms"].push_back(transform_argument(t));
      if (!c_id.empty()) body["id"] = c_id;
      if (!c_dataset.empty()) body["dataset"] = c_dataset;
      Json res = session.request("POST", session.sb_path("/concepts"), body);
      if (!res["job"].is_null()) {
        const Json job = session.await(res["job"]);
        res["job"] = job;
        if (job["state"] == "failed") throw Failure{Json{{"error", job["error"]}}};
      }
      if (session.json()) session.emit_json(res);
      else out << res["concept"]["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  auto* c_compound = concept_cmd->add_subcommand("compound", "Combine binary concepts with AND / OR");
  c_compound->add_option("--op", c_op)->required()->check(CLI::IsMember({"AND", "OR", "and", "or"}));
  c_compound->add_option("--children", c_list)->required()->delimiter(',');
  c_compound->add_option("--id", c_id);
  c_compound->callback([&] {
    action = [&] {
      Json body{{"op", c_op}, {"children", c_list}};
      if (!c_id.empty()) body["id"] = c_id;
      const Json res = session.request("POST", session.sb_path("/concepts/compound"), body);
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  auto* c_score = concept_cmd->add_subcommand("score", "Score a concept on a dataset");
  c_score->add_option("--concept", c_ref)->required();
  c_score->add_option("--dataset", c_dataset);
  c_score->add_flag("--rescore", c_rescore, "Call the backend again instead of using cached scores");
  c_score->callback([&] {
    action = [&] {
      std::map<std::string, std::string> q;
      if (!c_dataset.empty()) q["dataset"] = c_dataset;
      if (c_rescore) q["rescore"] = "true";
      Json job = session.await(session.request("POST", session.sb_path("/concepts/" + c_ref + "/score"),
                                               nullptr, q));
      if (job["state"] == "failed") throw Failure{Json{{"error", job["error"]}}};
      if (session.json()) {
        session.emit_json(job);
      } else {
        const auto& r = job["result"];
        out << r["concept_id"].get<std::string>() << " on " << r["dataset"].get<std::string>() << ": "
            << r["scores"].size() << " scores, " << r["warnings"] << " warnings\n";
      }
      return kExitOk;
    };
  });

  auto* c_view = concept_cmd->add_subcommand("view", "Rows sorted by concept score");
  c_view->add_option("--concept", c_ref)->required();
  c_view->add_option("--dataset", c_dataset);
  c_view->add_flag("--ascending", c_ascending);
  c_view->callback([&] {
    action = [&] {
      std::map<std::string, std::string> q{{"desc", c_ascending ? "false" : "true"}};
      if (!c_dataset.empty()) q["dataset"] = c_dataset;
      const Json res = session.request("GET", session.sb_path("/concepts/" + c_ref + "/view"), nullptr, q);
      if (session.json()) session.emit_json(res);
      else session.emit_table(res["table"]);
      return kExitOk;
    };
  });

  auto* c_compare = concept_cmd->add_subcommand("compare", "Correlations between concepts and truth");
  c_compare->add_option("--concepts", c_list)->required()->delimiter(',');
  c_compare->add_option("--dataset", c_dataset);
  c_compare->callback([&] {
    action = [&] {
      std::map<std::string, std::string> q{{"ids", join(c_list)}};
      if (!c_dataset.empty()) q["dataset"] = c_dataset;
      const Json res = session.request("GET", session.sb_path("/concept-correlations"), nullptr, q);
      if (session.json()) session.emit_json(res);
      else session.emit_table(correlation_table(res));
      return kExitOk;
    };
  });

  auto* c_listcmd = concept_cmd->add_subcommand("list", "List concepts");
  c_listcmd->callback([&] {
    action = [&] {
      const Json res = session.request("GET", session.sb_path("/concepts"));
      if (session.json()) {
        session.emit_json(res);
      } else {
        for (const auto& c : res["concepts"]) {
          out << c["id"].get<std::string>() << '\t' << c["term"].get<std::string>() << '\t'
              << c["output_kind"].get<std::string>() << '\n';
        }
      }
      return kExitOk;
    };
  });

  auto* c_delete = concept_cmd->add_subcommand("delete", "Delete an unused concept");
  c_delete->add_option("--concept", c_ref)->required();
  c_delete->callback([&] {
    action = [&] {
      const Json res = session.request("DELETE", session.sb_path("/concepts/" + c_ref));
      if (session.json()) session.emit_json(res);
      else out << "deleted " << res["deleted"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  // sketch ...
  auto* sketch_cmd = app.add_subcommand("sketch", "Train, view, test and compare sketches");
  sketch_cmd->require_subcommand(1);
  std::vector<std::string> s_concepts, s_ids, s_weights;
  std::string s_kind, s_id, s_dataset, s_ref, s_sort, s_options;
  double s_intercept = 0.0, s_threshold = 0.5;
  std::optional<std::uint64_t> s_seed;
  bool s_ascending = false;

  auto* s_create = sketch_cmd->add_subcommand("create", "Train a sketch over concepts");
  s_create->add_option("--concepts", s_concepts)->required()->delimiter(',');
  s_create->add_option("--kind", s_kind, "linear_regression (default), logistic_regression, "
                                         "decision_tree, random_forest, mlp");
  s_create->add_option("--id", s_id);
  s_create->add_option("--dataset", s_dataset);
  s_create->add_option("--seed", s_seed);
  s_create->add_option("--options", s_options, "Training options as JSON");
  s_create->callback([&] {
    action = [&] {
      Json body{{"concepts", s_concepts}};
      if (!s_kind.empty()) body["kind"] = s_kind;
      if (!s_id.empty()) body["id"] = s_id;
      if (!s_dataset.empty()) body["dataset"] = s_dataset;
      if (s_seed) body["seed"] = *s_seed;
      if (!s_options.empty()) body["options"] = *json_argument(s_options);
      const Json res = session.request("POST", session.sb_path("/sketches"), body);
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  auto* s_manual = sketch_cmd->add_subcommand("manual", "Linear sketch with hand-set weights");
  s_manual->add_option("--concepts", s_concepts)->required()->delimiter(',');
  s_manual->add_option("--weights", s_weights)->required()->delimiter(',');
  s_manual->add_option("--intercept", s_intercept);
  s_manual->add_option("--id", s_id);
  s_manual->callback([&] {
    action = [&] {
      Json weights = Json::array();
      for (const auto& w : s_weights) weights.push_back(to_number(w, "--weights"));
      Json body{{"concepts", s_concepts}, {"weights", weights}, {"intercept", s_intercept}};
      if (!s_id.empty()) body["id"] = s_id;
      const Json res = session.request("POST", session.sb_path("/sketches"), body);
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  auto* s_view = sketch_cmd->add_subcommand("view", "Predictions with error columns");
  s_view->add_option("--sketch", s_ref)->required();
  s_view->add_option("--dataset", s_dataset);
  s_view->add_option("--sort", s_sort, "prediction, ground_truth, diff, abs_diff or a concept");
  s_view->add_flag("--ascending", s_ascending);
  s_view->callback([&] {
    action = [&] {
      std::map<std::string, std::string> q{{"desc", s_ascending ? "false" : "true"}};
      if (!s_dataset.empty()) q["dataset"] = s_dataset;
      if (!s_sort.empty()) q["sort"] = s_sort;
      const Json res = session.request("GET", session.sb_path("/sketches/" + s_ref + "/view"), nullptr, q);
      if (session.json()) session.emit_json(res);
      else session.emit_table(res["table"]);
      return kExitOk;
    };
  });

  auto* s_test = sketch_cmd->add_subcommand("test", "Run a sketch on a (held-out) dataset");
  s_test->add_option("--sketch", s_ref)->required();
  s_test->add_option("--dataset", s_dataset);
  s_test->add_option("--sort", s_sort);
  s_test->callback([&] {
    action = [&] {
      Json body = Json::object();
      if (!s_dataset.empty()) body["dataset"] = s_dataset;
      if (!s_sort.empty()) body["sort"] = s_sort;
      const Json res = session.request("POST", session.sb_path("/sketches/" + s_ref + "/test"), body);
      if (session.json()) {
        session.emit_json(res);
      } else {
        session.emit_table(res["view"]);
        if (!res["metrics"].is_null()) {
          out << '\n';
          print_metrics(out, res["metrics"]);
        }
      }
      return kExitOk;
    };
  });

  auto* s_compare = sketch_cmd->add_subcommand("compare", "Metrics for several sketches");
  s_compare->add_option("--sketches", s_ids)->required()->delimiter(',');
  s_compare->add_option("--dataset", s_dataset);
  s_compare->add_option("--threshold", s_threshold);
  s_compare->callback([&] {
    action = [&] {
      std::map<std::string, std::string> q{{"ids", join(s_ids)}};
      if (!s_dataset.empty()) q["dataset"] = s_dataset;
      std::ostringstream t;
      t.precision(17);
      t << s_threshold;
      q["threshold"] = t.str();
      const Json res = session.request("GET", session.sb_path("/compare"), nullptr, q);
      if (session.json()) session.emit_json(res);
      else session.emit_table(metrics_table(res["sketches"]));
      return kExitOk;
    };
  });

  // note ...
  auto* note_cmd = app.add_subcommand("note", "Scratch notes on concepts and sketches");
  note_cmd->require_subcommand(1);
  std::string n_subject, n_text;
  auto* n_add = note_cmd->add_subcommand("add", "Attach a note");
  n_add->add_option("--subject", n_subject)->required();
  n_add->add_option("--text", n_text)->required();
  n_add->callback([&] {
    action = [&] {
      const Json res = session.request("POST", session.sb_path("/notes"),
                                       Json{{"subject_id", n_subject}, {"text", n_text}});
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });
  auto* n_list = note_cmd->add_subcommand("list", "List notes, optionally for one subject");
  n_list->add_option("--subject", n_subject);
  n_list->callback([&] {
    action = [&] {
      std::map<std::string, std::string> q;
      if (!n_subject.empty()) q["subject"] = n_subject;
      const Json res = session.request("GET", session.sb_path("/notes"), nullptr, q);
      if (session.json()) {
        session.emit_json(res);
      } else {
        for (const auto& n : res["notes"]) {
          out << n["id"].get<std::string>() << '\t' << n["subject_id"].get<std::string>() << '\t'
              << n["timestamp"].get<std::string>() << '\t' << escape_note(n["text"].get<std::string>())
              << '\n';
        }
      }
      return kExitOk;
    };
  });

  // history
  auto* history_cmd = app.add_subcommand("history", "Session event log");
  std::uint64_t h_since = 0;
  history_cmd->add_option("--since", h_since);
  history_cmd->callback([&] {
    action = [&] {
      const Json res = session.request("GET", session.sb_path("/history"), nullptr,
                                       {{"since", std::to_string(h_since)}});
      if (session.json()) {
        session.emit_json(res);
      } else {
        for (const auto& e : res["events"]) {
          out << e["seq"] << '\t' << e["timestamp"].get<std::string>() << '\t'
              << e["kind"].get<std::string>() << '\t' << e["subject_id"].get<std::string>() << '\t'
              << e["summary"].get<std::string>() << '\n';
        }
      }
      return kExitOk;
    };
  });

  // export / import
  auto* export_cmd = app.add_subcommand("export", "Write the sketchbook document");
  std::string x_out;
  export_cmd->add_option("--out", x_out, "File to write (default: stdout)");
  export_cmd->callback([&] {
    action = [&] {
      const Json res = session.request("GET", session.sb_path("/export"));
      if (x_out.empty()) {
        out << res.dump(2) << '\n';
      } else {
        std::ofstream f(x_out, std::ios::binary);
        f << res.dump(2) << '\n';
        if (!f) throw Error(ErrorCode::IoError, "cannot write '" + x_out + "'", "out");
        if (!session.json()) out << "wrote " << x_out << '\n';
      }
      return kExitOk;
    };
  });
  auto* import_cmd = app.add_subcommand("import", "Load a sketchbook document and make it active");
  std::string i_file;
  import_cmd->add_option("--file", i_file)->required()->check(CLI::ExistingFile);
  import_cmd->callback([&] {
    action = [&] {
      Json doc;
      try {
        doc = Json::parse(read_file(i_file));
      } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::CorruptDocument, std::string("document is not valid JSON: ") + e.what(),
                    "file");
      }
      const Json res = session.request("POST", "/sketchbooks/import", doc);
      session.set_active(res["id"].get<std::string>());
      if (session.json()) session.emit_json(res);
      else out << res["id"].get<std::string>() << '\n';
      return kExitOk;
    };
  });

  // brainstorm
  auto* brainstorm_cmd = app.add_subcommand("brainstorm", "Synonyms or antonyms of a term");
  std::string b_term, b_relation = "synonym";
  brainstorm_cmd->add_option("--term", b_term)->required();
  brainstorm_cmd->add_option("--relation", b_relation)->check(CLI::IsMember({"synonym", "antonym"}));
  brainstorm_cmd->callback([&] {
    action = [&] {
      const Json res = session.request("GET", "/helpers/brainstorm", nullptr,
                                       {{"term", b_term}, {"relation", b_relation}});
      if (session.json()) {
        session.emit_json(res);
      } else {
        for (const auto& w : res["words"]) out << w.get<std::string>() << '\n';
      }
      return kExitOk;
    };
  });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark task config");
  std::string bench_config, bench_out;
  bench_cmd->add_option("config", bench_config, "Task config JSON")->required();
  bench_cmd->add_option("--out", bench_out, "Also write the report here");
  bench_cmd->callback([&] {
    action = [&]() -> int {
      eval::BenchConfig config;
      try {
        config = eval::load_bench_config(bench_config);
      } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return kExitUsage;
      }
      scoring::ScorerRegistry scorers;
      const auto report = eval::run_bench(config, scorers);
      const Json doc = eval::to_json(report);
      if (!bench_out.empty()) {
        std::ofstream f(bench_out, std::ios::binary);
        f << doc.dump(2) << '\n';
      }
      if (session.json()) {
        session.emit_json(doc);
      } else {
        out << report.name << ": " << report.metric << " = " << fmt(Json(report.value)) << " (train "
            << report.n_train << ", eval " << report.n_eval << ")\n";
        if (report.gate) {
          out << "gate " << report.gate->metric << report.gate->op << report.gate->value << ": "
              << (report.gate_passed.value_or(false) ? "passed" : "FAILED") << '\n';
        }
      }
      return report.gate_passed.value_or(true) ? kExitOk : kExitDomainError;
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const Failure& f) {
    const auto& e = f.body.contains("error") ? f.body["error"] : f.body;
    if (session.json()) {
      err << f.body.dump() << '\n';
    } else {
      err << "error: " << fmt(e.value("code", Json("Error"))) << ": " << fmt(e.value("message", Json("")));
      if (!e.value("field", std::string()).empty()) err << " (field " << e["field"].get<std::string>() << ")";
      err << '\n';
    }
    return kExitDomainError;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    if (session.json()) {
      err << service::error_body(e).dump() << '\n';
    } else {
      err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    }
    return kExitDomainError;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON argument: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace msb::cli
