#pragma once

#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "msb/core/error.hpp"
#include "msb/core/json.hpp"
#include "msb/scoring/backend.hpp"
#include "msb/service/jobs.hpp"
#include "msb/service/store.hpp"

namespace msb::service {

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
};

struct Response {
  int status = 200;
  Json body;
};

int http_status(ErrorCode code);
// {"error": {"code", "message", "field"}} plus "row"/"index" detail when present.
Json error_body(const Error& e);

// Transport-independent request router shared by the HTTP server and the CLI.
class Api {
 public:
  Api(Store& store, scoring::ScorerRegistry& scorers, JobManager& jobs);

  Response handle(const Request& request);

  Store& store() noexcept { return store_; }
  JobManager& jobs() noexcept { return jobs_; }

 private:
  Response route(const Request& request);
  Response with_idempotency(const Request& request, const std::string& key);

  Response create_sketchbook(const Json& body);
  Response import_sketchbook(const Json& body);
  Response add_dataset(const std::string& sb, const Json& body);
  Response add_backend(const std::string& sb, const Json& body);
  Response create_concept(const std::string& sb, const Json& body);
  Response create_compound(const std::string& sb, const Json& body);
  Response score_concept(const std::string& sb, const std::string& concept_id, const Request& r);
  Response concept_view(const std::string& sb, const std::string& concept_id, const Request& r);
  Response preview_transforms(const std::string& sb, const std::string& concept_id, const Json& body);
  Response concept_correlations(const std::string& sb, const Request& r);
  Response create_sketch(const std::string& sb, const Json& body);
  Response sketch_view(const std::string& sb, const std::string& sketch_id, const Request& r);
  Response test_sketch(const std::string& sb, const std::string& sketch_id, const Request& r);
  Response compare(const std::string& sb, const Request& r);

  // Starts scoring; finished inline unless a prompt backend has to be called.
  Job start_scoring(const std::string& sb, const std::string& concept_ref, const std::string& dataset,
                    bool rescore);
  // Throws ScoresPending (after starting jobs) while any of the concepts still
  // needs prompt-backend calls on the dataset.
  void require_scores(const std::string& sb, const std::vector<std::string>& concept_refs,
                      const std::string& dataset);

  Store& store_;
  scoring::ScorerRegistry& scorers_;
  JobManager& jobs_;

  std::mutex idem_mu_;
  std::map<std::string, std::shared_future<Response>> idem_;
  std::deque<std::string> idem_order_;
};

}  // namespace msb::service
