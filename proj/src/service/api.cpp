#include "msb/service/api.hpp"

#include <algorithm>
#include <set>

#include "msb/concepts/engine.hpp"
#include "msb/eval/views.hpp"
#include "msb/helpers/helpers.hpp"
#include "msb/sketch/ops.hpp"

namespace msb::service {
namespace {

constexpr std::size_t kIdempotencyCapacity = 1024;

class PendingScores : public Error {
 public:
  explicit PendingScores(std::vector<Job> jobs)
      : Error(ErrorCode::ScoresPending, "concept scores are still being computed; poll the jobs",
              "dataset"),
        jobs_(std::move(jobs)) {}
  const std::vector<Job>& jobs() const noexcept { return jobs_; }

 private:
  std::vector<Job> jobs_;
};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string::npos ? path.size() : j;
    if (end > i) out.push_back(path.substr(i, end - i));
    i = end;
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    const auto j = std::min(s.find(',', i), s.size());
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("request body is not valid JSON: ") + e.what(), "body");
  }
}

std::string query(const Request& r, const std::string& name, const std::string& fallback = {}) {
  auto it = r.query.find(name);
  return it == r.query.end() ? fallback : it->second;
}

bool query_flag(const Request& r, const std::string& name, bool fallback) {
  auto it = r.query.find(name);
  if (it == r.query.end() || it->second.empty()) return fallback;
  const auto& v = it->second;
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw Error(ErrorCode::BadRequest, "flag '" + name + "' must be true or false", name);
}

std::string required_string(const Json& j, const char* name, const char* alt = nullptr) {
  for (const char* key : {name, alt}) {
    if (key && j.contains(key)) {
      if (!j.at(key).is_string()) throw Error(ErrorCode::BadRequest, std::string(key) + " must be a string", key);
      return j.at(key).get<std::string>();
    }
  }
  throw Error(ErrorCode::BadRequest, std::string("missing '") + name + "'", name);
}

std::vector<std::string> string_list(const Json& j, const char* name) {
  if (!j.contains(name)) throw Error(ErrorCode::BadRequest, std::string("missing '") + name + "'", name);
  const auto& v = j.at(name);
  if (v.is_string()) return split_list(v.get<std::string>());
  if (!v.is_array()) throw Error(ErrorCode::BadRequest, std::string(name) + " must be a list", name);
  return v.get<std::vector<std::string>>();
}

std::optional<concepts::OutputKind> output_kind_field(const Json& j) {
  if (!j.contains("output_kind") || j.at("output_kind").is_null()) return std::nullopt;
  const auto& v = j.at("output_kind");
  auto kind = v.is_string() ? concepts::output_kind_from_string(v.get<std::string>()) : std::nullopt;
  if (!kind) throw Error(ErrorCode::BadRequest, "output_kind must be binary or continuous", "output_kind");
  return kind;
}

std::vector<concepts::Transform> transforms_field(const Json& j) {
  std::vector<concepts::Transform> out;
  const auto list = j.value("transforms", Json::array());
  if (!list.is_array()) throw Error(ErrorCode::BadRequest, "transforms must be a list", "transforms");
  for (const auto& t : list) out.push_back(concepts::transform_from_json(t));
  return out;
}

Json scores_json(const concepts::ConceptScores& s) {
  return Json{{"concept_id", s.concept_id},
              {"dataset", s.dataset},
              {"scores", s.scores},
              {"warnings", s.warnings},
              {"cache_key", s.cache_key}};
}

Json summary(const core::Sketchbook& sb) {
  Json datasets = Json::array();
  for (const auto& [name, ds] : sb.datasets) {
    datasets.push_back({{"name", name},
                        {"rows", ds.size()},
                        {"labeled", core::is_labeled(sb.schema, ds)}});
  }
  Json backends = Json::array();
  for (const auto& [id, b] : sb.backends) backends.push_back(scoring::to_json(b));
  Json concept_list = Json::array();
  for (const auto& [id, c] : sb.concepts) concept_list.push_back(concepts::to_json(c));
  Json sketches = Json::array();
  for (const auto& [id, s] : sb.sketches) sketches.push_back(sketch::to_json(s));
  return Json{{"id", sb.id},
              {"goal", sb.goal},
              {"schema", core::schema_to_json(sb.schema)},
              {"datasets", std::move(datasets)},
              {"backends", std::move(backends)},
              {"concepts", std::move(concept_list)},
              {"sketches", std::move(sketches)},
              {"notes", sb.notes.size()},
              {"history_length", sb.history.size()}};
}

core::Dataset dataset_from_body(const Json& j, const std::string& name, const core::Schema& schema) {
  if (j.contains("csv")) return core::ingest_csv_text(j.at("csv").get<std::string>(), schema, name);
  Json copy = j;
  copy["name"] = name;
  return core::dataset_from_json(copy, schema);
}

bool needs_prompt(const std::vector<concepts::RawScoreTask>& tasks) {
  return std::any_of(tasks.begin(), tasks.end(), [](const auto& t) {
    return t.backend.kind == scoring::BackendKind::Prompt;
  });
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSketchbook:
    case ErrorCode::UnknownJob:
    case ErrorCode::NotFound:
    case ErrorCode::UnknownConcept:
    case ErrorCode::UnknownSketch:
    case ErrorCode::UnknownDataset:
    case ErrorCode::UnknownBackend:
    case ErrorCode::UnknownSubject:
      return 404;
    case ErrorCode::DuplicateId:
    case ErrorCode::ConceptInUse:
    case ErrorCode::ScoresPending:
      return 409;
    case ErrorCode::EndpointUnreachable:
    case ErrorCode::EndpointError:
    case ErrorCode::RetriesExhausted:
      return 502;
    case ErrorCode::MissingCredentials:
      return 503;
    case ErrorCode::IoError:
    case ErrorCode::DataDirUnwritable:
    case ErrorCode::BindFailure:
      return 500;
    default:
      return 400;
  }
}

Json error_body(const Error& e) {
  Json err{{"code", to_string(e.code())}, {"message", e.what()}, {"field", e.field()}};
  if (e.detail()) err["detail"] = *e.detail();
  return Json{{"error", std::move(err)}};
}

Api::Api(Store& store, scoring::ScorerRegistry& scorers, JobManager& jobs)
    : store_(store), scorers_(scorers), jobs_(jobs) {}

Response Api::handle(const Request& request) {
  auto key = request.headers.find("idempotency-key");
  if (key != request.headers.end() && request.method != "GET" && !key->second.empty()) {
    return with_idempotency(request, key->second);
  }
  try {
    return route(request);
  } catch (const PendingScores& e) {
    Response r{http_status(e.code()), error_body(e)};
    Json jobs = Json::array();
    for (const auto& j : e.jobs()) jobs.push_back(to_json(j, false));
    r.body["jobs"] = std::move(jobs);
    return r;
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(e)};
  } catch (const Json::exception& e) {
    return {400, error_body(Error(ErrorCode::BadRequest, std::string("malformed request: ") + e.what()))};
  } catch (const std::exception& e) {
    return {500, Json{{"error", {{"code", "InternalError"}, {"message", e.what()}, {"field", ""}}}}};
  }
}

Response Api::with_idempotency(const Request& request, const std::string& key) {
  const std::string slot = request.method + " " + request.path + " " + key;
  std::promise<Response> promise;
  std::optional<std::shared_future<Response>> earlier;
  {
    std::lock_guard lock(idem_mu_);
    if (auto it = idem_.find(slot); it != idem_.end()) {
      earlier = it->second;
    } else {
      idem_.emplace(slot, promise.get_future().share());
      idem_order_.push_back(slot);
      while (idem_order_.size() > kIdempotencyCapacity) {
        idem_.erase(idem_order_.front());
        idem_order_.pop_front();
      }
    }
  }
  if (earlier) return earlier->get();
  Request plain = request;
  plain.headers.erase("idempotency-key");
  Response r = handle(plain);
  promise.set_value(r);
  if (r.status >= 400) {
    // Failed attempts are not replayed; the client may retry for real.
    std::lock_guard lock(idem_mu_);
    idem_.erase(slot);
  }
  return r;
}

Response Api::route(const Request& r) {
  const auto p = split_path(r.path);
  const auto& m = r.method;
  auto body = [&] { return parse_body(r.body); };

  if (p.size() == 1 && p[0] == "health" && m == "GET") return {200, Json{{"status", "ok"}}};

  if (p.size() == 2 && p[0] == "jobs" && m == "GET") {
    auto job = jobs_.get(p[1]);
    if (!job) throw Error(ErrorCode::UnknownJob, "no job '" + p[1] + "'", "job_id");
    return {200, to_json(*job)};
  }

  if (p.size() == 2 && p[0] == "helpers" && p[1] == "brainstorm" && m == "GET") {
    const auto relation_name = query(r, "relation", "synonym");
    auto relation = helpers::relation_from_string(relation_name);
    if (!relation) {
      throw Error(ErrorCode::BadRequest, "relation must be synonym or antonym", "relation");
    }
    const auto term = query(r, "term");
    return {200, Json{{"term", term},
                      {"relation", helpers::to_string(*relation)},
                      {"words", helpers::brainstorm(term, *relation)}}};
  }

  if (p.empty() || p[0] != "sketchbooks") {
    throw Error(ErrorCode::NotFound, "no route for " + m + " " + r.path, "path");
  }

  if (p.size() == 1) {
    if (m == "POST") return create_sketchbook(body());
    if (m == "GET") return {200, Json{{"sketchbooks", store_.list()}}};
  }
  if (p.size() == 2 && p[1] == "import" && m == "POST") return import_sketchbook(body());
  if (p.size() < 2) throw Error(ErrorCode::NotFound, "no route for " + m + " " + r.path, "path");

  const std::string& sb = p[1];
  if (p.size() == 2 && m == "GET") {
    return {200, store_.access(sb, [](core::Sketchbook& s) { return summary(s); })};
  }
  if (p.size() == 3) {
    const auto& what = p[2];
    if (what == "datasets" && m == "POST") return add_dataset(sb, body());
    if (what == "backends" && m == "POST") return add_backend(sb, body());
    if (what == "concepts" && m == "POST") return create_concept(sb, body());
    if (what == "concepts" && m == "GET") {
      return {200, store_.access(sb, [](core::Sketchbook& s) {
                Json list = Json::array();
                for (const auto& [id, c] : s.concepts) list.push_back(concepts::to_json(c));
                return Json{{"concepts", std::move(list)}};
              })};
    }
    if (what == "sketches" && m == "POST") return create_sketch(sb, body());
    if (what == "sketches" && m == "GET") {
      return {200, store_.access(sb, [](core::Sketchbook& s) {
                Json list = Json::array();
                for (const auto& [id, sk] : s.sketches) list.push_back(sketch::to_json(sk));
                return Json{{"sketches", std::move(list)}};
              })};
    }
    if (what == "compare" && m == "GET") return compare(sb, r);
    if (what == "concept-correlations" && m == "GET") return concept_correlations(sb, r);
    if (what == "notes" && m == "POST") {
      const Json j = body();
      const auto subject = required_string(j, "subject_id", "subject");
      const auto text = required_string(j, "text");
      return {201, store_.mutate(sb, [&](core::Sketchbook& s) {
                return core::to_json(helpers::add_note(s, subject, text));
              })};
    }
    if (what == "notes" && m == "GET") {
      std::optional<std::string> subject;
      if (r.query.count("subject")) subject = query(r, "subject");
      return {200, store_.access(sb, [&](core::Sketchbook& s) {
                Json list = Json::array();
                for (const auto& n : helpers::list_notes(s, subject)) list.push_back(core::to_json(n));
                return Json{{"notes", std::move(list)}};
              })};
    }
    if (what == "history" && m == "GET") {
      std::uint64_t since = 0;
      if (const auto s = query(r, "since"); !s.empty()) {
        try {
          since = std::stoull(s);
        } catch (const std::exception&) {
          throw Error(ErrorCode::BadRequest, "since must be a sequence number", "since");
        }
      }
      return {200, store_.access(sb, [&](core::Sketchbook& s) {
                Json events = Json::array();
                for (const auto& e : helpers::get_history(s, since)) events.push_back(core::to_json(e));
                return Json{{"events", std::move(events)}, {"last_seq", s.history.last_seq()}};
              })};
    }
    if (what == "export" && m == "GET") {
      return {200, store_.access(sb, [](core::Sketchbook& s) { return core::export_sketchbook(s); })};
    }
  }
  if (p.size() >= 4 && p[2] == "concepts") {
    const std::string& cid = p[3];
    if (p.size() == 4 && cid == "compound" && m == "POST") return create_compound(sb, body());
    if (p.size() == 4 && m == "GET") {
      return {200, store_.access(sb, [&](core::Sketchbook& s) {
                return concepts::to_json(concepts::resolve_concept(s, cid));
              })};
    }
    if (p.size() == 4 && m == "DELETE") {
      store_.mutate(sb, [&](core::Sketchbook& s) { concepts::delete_concept(s, cid); });
      return {200, Json{{"deleted", cid}}};
    }
    if (p.size() == 5 && p[4] == "score" && m == "POST") return score_concept(sb, cid, r);
    if (p.size() == 5 && p[4] == "view" && m == "GET") return concept_view(sb, cid, r);
    if (p.size() == 5 && p[4] == "preview" && m == "POST") return preview_transforms(sb, cid, body());
    if (p.size() == 4 && m == "PATCH") {
      const Json j = body();
      auto chain = transforms_field(j);
      const auto kind = output_kind_field(j);
      return {200, store_.mutate(sb, [&](core::Sketchbook& s) {
                return concepts::to_json(concepts::set_transforms(s, cid, std::move(chain), kind));
              })};
    }
  }
  if (p.size() >= 4 && p[2] == "sketches") {
    const std::string& sid = p[3];
    if (p.size() == 4 && m == "GET") {
      return {200, store_.access(sb, [&](core::Sketchbook& s) {
                return sketch::to_json(sketch::sketch_or_throw(s, sid));
              })};
    }
    if (p.size() == 4 && m == "DELETE") {
      store_.mutate(sb, [&](core::Sketchbook& s) { sketch::delete_sketch(s, sid); });
      return {200, Json{{"deleted", sid}}};
    }
    if (p.size() == 5 && p[4] == "view" && m == "GET") return sketch_view(sb, sid, r);
    if (p.size() == 5 && p[4] == "test" && m == "POST") return test_sketch(sb, sid, r);
  }
  throw Error(ErrorCode::NotFound, "no route for " + m + " " + r.path, "path");
}

Response Api::create_sketchbook(const Json& j) {
  if (!j.contains("schema")) throw Error(ErrorCode::BadRequest, "missing 'schema'", "schema");
  const auto schema = core::schema_from_json(j.at("schema"));
  std::map<std::string, core::Dataset> datasets;
  if (j.contains("datasets")) {
    const auto& d = j.at("datasets");
    if (d.is_object()) {
      for (const auto& [name, spec] : d.items()) datasets.emplace(name, dataset_from_body(spec, name, schema));
    } else if (d.is_array()) {
      for (const auto& spec : d) {
        const auto name = required_string(spec, "name");
        datasets.emplace(name, dataset_from_body(spec, name, schema));
      }
    } else {
      throw Error(ErrorCode::BadRequest, "datasets must be an object or a list", "datasets");
    }
  }
  auto sb = core::create_sketchbook(j.value("goal", std::string()), std::move(datasets), schema,
                                    j.value("id", std::string()));
  for (const auto& b : j.value("backends", Json::array())) {
    core::add_backend(sb, scoring::backend_config_from_json(b));
  }
  Json out = summary(sb);
  store_.insert(std::move(sb));
  return {201, std::move(out)};
}

Response Api::import_sketchbook(const Json& j) {
  auto sb = core::import_sketchbook(j.contains("document") ? j.at("document") : j);
  Json out = summary(sb);
  store_.insert(std::move(sb));
  return {201, std::move(out)};
}

Response Api::add_dataset(const std::string& sb, const Json& j) {
  const auto name = required_string(j, "name");
  return {201, store_.mutate(sb, [&](core::Sketchbook& s) {
            if (j.contains("schema") && core::schema_to_json(core::schema_from_json(j.at("schema"))) !=
                                            core::schema_to_json(s.schema)) {
              throw Error(ErrorCode::SchemaMismatch,
                          "uploaded schema differs from the sketchbook schema", "schema");
            }
            auto ds = dataset_from_body(j, name, s.schema);
            const auto rows = ds.size();
            core::add_dataset(s, std::move(ds));
            return Json{{"name", name}, {"rows", rows}, {"labeled", core::is_labeled(s.schema, s.datasets.at(name))}};
          })};
}

Response Api::add_backend(const std::string& sb, const Json& j) {
  auto config = scoring::backend_config_from_json(j);
  return {201, store_.mutate(sb, [&](core::Sketchbook& s) {
            core::add_backend(s, config);
            return scoring::to_json(config);
          })};
}

Response Api::create_concept(const std::string& sb, const Json& j) {
  concepts::ConceptSpec spec;
  spec.term = required_string(j, "term");
  spec.input_field = required_string(j, "input_field", "field");
  spec.backend_id = required_string(j, "backend_id", "backend");
  spec.output_kind = output_kind_field(j);
  spec.transforms = transforms_field(j);
  spec.id = j.value("id", std::string());
  const auto dataset_hint = j.value("dataset", std::string());

  // Prompt-backed concepts are registered first and scored by a job.
  struct Outcome {
    concepts::CreatedConcept created;
    bool deferred = false;
    std::string dataset;
  };
  auto outcome = store_.mutate(sb, [&](core::Sketchbook& s) {
    Outcome o;
    o.dataset = dataset_hint.empty() ? concepts::default_dataset(s) : dataset_hint;
    auto backend = s.backends.find(spec.backend_id);
    bool slow = backend != s.backends.end() && backend->second.kind == scoring::BackendKind::Prompt;
    if (slow) {
      concepts::Concept probe;
      probe.term = spec.term;
      probe.input_field = spec.input_field;
      probe.backend_id = spec.backend_id;
      slow = !s.cache.raw.count(concepts::raw_cache_key(probe, o.dataset));
    }
    o.deferred = slow;
    o.created = concepts::create_concept(s, scorers_, spec, o.dataset, !slow);
    return o;
  });

  Json out{{"concept", concepts::to_json(outcome.created.concept_def)}};
  out["scores"] = outcome.created.scores ? scores_json(*outcome.created.scores) : Json(nullptr);
  out["job"] = Json(nullptr);
  if (outcome.deferred) {
    out["job"] = to_json(start_scoring(sb, outcome.created.concept_def.id, outcome.dataset, false), false);
  }
  return {201, std::move(out)};
}

Response Api::create_compound(const std::string& sb, const Json& j) {
  const auto op_name = required_string(j, "op", "operator");
  const auto op = concepts::logic_op_from_string(op_name);
  if (!op) throw Error(ErrorCode::BadRequest, "op must be AND or OR", "op");
  const auto children = string_list(j, "children");
  const auto id = j.value("id", std::string());
  return {201, store_.mutate(sb, [&](core::Sketchbook& s) {
            return concepts::to_json(concepts::create_compound(s, *op, children, id));
          })};
}

Job Api::start_scoring(const std::string& sb, const std::string& concept_ref, const std::string& dataset,
                       bool rescore) {
  struct Plan {
    std::string concept_id;
    std::string dataset;
    std::string key;
    bool slow = false;
  };
  const auto plan = store_.access(sb, [&](core::Sketchbook& s) {
    Plan pl;
    pl.concept_id = concepts::resolve_concept(s, concept_ref).id;
    pl.dataset = dataset.empty() ? concepts::default_dataset(s) : dataset;
    core::dataset_or_throw(s, pl.dataset);
    pl.key = concepts::cache_key(s, s.concepts.at(pl.concept_id), pl.dataset);
    pl.slow = needs_prompt(concepts::pending_tasks(s, pl.concept_id, pl.dataset, rescore));
    return pl;
  });

  Job job;
  job.sketchbook_id = sb;
  job.concept_id = plan.concept_id;
  job.dataset = plan.dataset;
  job.cache_key = plan.key;

  if (!plan.slow) {
    try {
      job.result = store_.access(sb, [&](core::Sketchbook& s) {
        return concepts::score_concept(s, scorers_, plan.concept_id, plan.dataset, {rescore});
      });
      job.state = JobState::Done;
    } catch (const Error& e) {
      job.state = JobState::Failed;
      job.error = JobError{std::string(to_string(e.code())), e.what(), e.field()};
    }
    job.id = jobs_.record(job);
    return job;
  }

  auto work = [this, sb, plan, rescore] {
    const auto tasks = store_.access(sb, [&](core::Sketchbook& s) {
      return concepts::pending_tasks(s, plan.concept_id, plan.dataset, rescore);
    });
    std::vector<concepts::RawScores> results;
    for (const auto& task : tasks) results.push_back(concepts::run_task(scorers_, task));
    return store_.mutate(sb, [&](core::Sketchbook& s) {
      for (std::size_t i = 0; i < tasks.size(); ++i) concepts::store_raw(s, tasks[i], std::move(results[i]));
      return concepts::score_concept(s, scorers_, plan.concept_id, plan.dataset);
    });
  };
  const auto id = jobs_.submit(job, std::move(work));
  return *jobs_.get(id);
}

void Api::require_scores(const std::string& sb, const std::vector<std::string>& concept_refs,
                         const std::string& dataset) {
  const auto slow = store_.access(sb, [&](core::Sketchbook& s) {
    std::vector<std::string> out;
    for (const auto& ref : concept_refs) {
      const auto& c = concepts::resolve_concept(s, ref);
      if (needs_prompt(concepts::pending_tasks(s, c.id, dataset))) out.push_back(c.id);
    }
    return out;
  });
  if (slow.empty()) return;
  std::vector<Job> started;
  for (const auto& id : slow) started.push_back(start_scoring(sb, id, dataset, false));
  throw PendingScores(std::move(started));
}

Response Api::score_concept(const std::string& sb, const std::string& concept_id, const Request& r) {
  const Job job = start_scoring(sb, concept_id, query(r, "dataset"), query_flag(r, "rescore", false));
  const bool finished = job.state == JobState::Done || job.state == JobState::Failed;
  return {finished ? 200 : 202, to_json(job)};
}

Response Api::concept_view(const std::string& sb, const std::string& concept_id, const Request& r) {
  const bool descending = query_flag(r, "desc", true);
  auto dataset = query(r, "dataset");
  if (dataset.empty()) dataset = store_.access(sb, [](core::Sketchbook& s) { return concepts::default_dataset(s); });
  require_scores(sb, {concept_id}, dataset);
  return {200, store_.access(sb, [&](core::Sketchbook& s) {
            const auto& c = concepts::resolve_concept(s, concept_id);
            Json out{{"concept", concepts::to_json(c)}, {"dataset", dataset}, {"descending", descending}};
            out["table"] = core::to_json(concepts::concept_view(s, scorers_, c.id, dataset, descending));
            return out;
          })};
}

Response Api::preview_transforms(const std::string& sb, const std::string& concept_id,
                                 const Json& j) {
  const auto chain = transforms_field(j);
  const bool descending = j.value("descending", true);
  auto dataset = j.value("dataset", std::string());
  if (dataset.empty()) dataset = store_.access(sb, [](core::Sketchbook& s) { return concepts::default_dataset(s); });
  require_scores(sb, {concept_id}, dataset);
  return {200, store_.access(sb, [&](core::Sketchbook& s) {
            const auto scores = concepts::preview_transforms(s, scorers_, concept_id, dataset, chain);
            const auto& ds = core::dataset_or_throw(s, dataset);
            core::Table table;
            table.columns = ds.columns;
            table.columns.push_back("score");
            for (std::size_t row : core::sorted_order(scores.scores, descending)) {
              auto cells = ds.rows[row];
              cells.emplace_back(scores.scores[row]);
              table.row_index.push_back(row);
              table.rows.push_back(std::move(cells));
            }
            Json transforms = Json::array();
            for (const auto& t : chain) transforms.push_back(concepts::to_json(t));
            return Json{{"concept_id", scores.concept_id},
                        {"dataset", dataset},
                        {"transforms", std::move(transforms)},
                        {"scores", scores.scores},
                        {"table", core::to_json(table)}};
          })};
}

Response Api::concept_correlations(const std::string& sb, const Request& r) {
  const auto ids = split_list(query(r, "ids"));
  auto dataset = query(r, "dataset");
  if (dataset.empty()) dataset = store_.access(sb, [](core::Sketchbook& s) { return concepts::default_dataset(s); });
  if (ids.size() >= 2) require_scores(sb, ids, dataset);
  return {200, store_.access(sb, [&](core::Sketchbook& s) {
            Json out = helpers::to_json(helpers::compare_concepts(s, scorers_, ids, dataset));
            out["dataset"] = dataset;
            return out;
          })};
}

Response Api::create_sketch(const std::string& sb, const Json& j) {
  const auto concept_refs = string_list(j, "concepts");
  const auto id = j.value("id", std::string());
  std::optional<sketch::AggregatorKind> kind;
  if (j.contains("kind") && !j.at("kind").is_null()) {
    const auto name = j.at("kind").get<std::string>();
    kind = sketch::aggregator_from_string(name);
    if (!kind) throw Error(ErrorCode::BadRequest, "unknown aggregator '" + name + "'", "kind");
  }
  const bool manual = j.contains("weights") || kind == sketch::AggregatorKind::ManualWeights;
  if (manual) {
    const auto weights = j.value("weights", std::vector<double>{});
    const double intercept = j.value("intercept", 0.0);
    return {201, store_.mutate(sb, [&](core::Sketchbook& s) {
              return sketch::to_json(sketch::manual_sketch(s, concept_refs, weights, intercept, id));
            })};
  }
  sketch::TrainRequest request;
  request.concepts = concept_refs;
  request.kind = kind;
  request.id = id;
  request.dataset = j.value("dataset", std::string());
  if (j.contains("options") || j.contains("seed")) {
    auto options = sketch::train_options_from_json(j.value("options", Json::object()));
    if (j.contains("seed")) options.seed = j.at("seed").get<std::uint64_t>();
    request.options = options;
  }
  const auto dataset = request.dataset.empty()
                           ? store_.access(sb, [](core::Sketchbook& s) { return concepts::default_dataset(s); })
                           : request.dataset;
  require_scores(sb, concept_refs, dataset);
  return {201, store_.mutate(sb, [&](core::Sketchbook& s) {
            return sketch::to_json(sketch::train_sketch(s, scorers_, request));
          })};
}

Response Api::sketch_view(const std::string& sb, const std::string& sketch_id, const Request& r) {
  const auto sort = query(r, "sort");
  const bool descending = query_flag(r, "desc", true);
  auto [dataset, refs] = store_.access(sb, [&](core::Sketchbook& s) {
    const auto& sk = sketch::sketch_or_throw(s, sketch_id);
    auto d = query(r, "dataset");
    if (d.empty()) d = sk.train_dataset.empty() ? concepts::default_dataset(s) : sk.train_dataset;
    return std::pair{d, sk.concept_ids};
  });
  require_scores(sb, refs, dataset);
  return {200, store_.access(sb, [&, dataset = dataset](core::Sketchbook& s) {
            Json out{{"sketch_id", sketch_id}, {"dataset", dataset}, {"sort", sort}, {"descending", descending}};
            out["table"] = core::to_json(eval::sketch_view(s, scorers_, sketch_id, dataset, sort, descending));
            return out;
          })};
}

Response Api::test_sketch(const std::string& sb, const std::string& sketch_id, const Request& r) {
  const Json j = parse_body(r.body);
  auto dataset = j.value("dataset", query(r, "dataset"));
  const auto sort = j.value("sort", query(r, "sort"));
  const bool descending = j.value("desc", query_flag(r, "desc", true));
  const auto refs = store_.access(sb, [&](core::Sketchbook& s) {
    const auto& sk = sketch::sketch_or_throw(s, sketch_id);
    if (dataset.empty()) dataset = s.datasets.count("test") ? "test" : concepts::default_dataset(s);
    core::dataset_or_throw(s, dataset);
    return sk.concept_ids;
  });
  require_scores(sb, refs, dataset);
  return {200, store_.access(sb, [&](core::Sketchbook& s) {
            Json out{{"sketch_id", sketch_id}, {"dataset", dataset}};
            out.update(eval::to_json(eval::test_sketch(s, scorers_, sketch_id, dataset, sort, descending)));
            return out;
          })};
}

Response Api::compare(const std::string& sb, const Request& r) {
  const auto ids = split_list(query(r, "ids"));
  auto dataset = query(r, "dataset");
  double threshold = 0.5;
  if (const auto t = query(r, "threshold"); !t.empty()) {
    try {
      threshold = std::stod(t);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadRequest, "threshold must be a number", "threshold");
    }
  }
  const auto refs = store_.access(sb, [&](core::Sketchbook& s) {
    if (dataset.empty()) dataset = s.datasets.count("test") ? "test" : concepts::default_dataset(s);
    std::vector<std::string> all;
    std::set<std::string> seen;
    for (const auto& id : ids) {
      auto it = s.sketches.find(id);
      if (it == s.sketches.end()) continue;  // reported by compare_sketches
      for (const auto& c : it->second.concept_ids) {
        if (seen.insert(c).second) all.push_back(c);
      }
    }
    return all;
  });
  require_scores(sb, refs, dataset);
  return {200, store_.access(sb, [&](core::Sketchbook& s) {
            return Json{{"dataset", dataset},
                        {"threshold", threshold},
                        {"sketches", eval::to_json(eval::compare_sketches(s, scorers_, ids, dataset, threshold))}};
          })};
}

}  // namespace msb::service
