#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "msb/concepts/concept.hpp"
#include "msb/core/json.hpp"

namespace msb::service {

enum class JobState { Queued, Running, Done, Failed };

std::string_view to_string(JobState s);

struct JobError {
  std::string code;
  std::string message;
  std::string field;
};

struct Job {
  std::string id;
  std::string sketchbook_id;
  std::string concept_id;
  std::string dataset;
  std::string cache_key;
  JobState state = JobState::Queued;
  std::optional<JobError> error;
  std::optional<concepts::ConceptScores> result;
};

Json to_json(const Job& job, bool include_scores = true);

// Scoring jobs on a bounded worker pool. A job whose cache key matches one
// that is still queued or running is not started again; its id is returned.
class JobManager {
 public:
  using Work = std::function<concepts::ConceptScores()>;

  explicit JobManager(std::size_t workers = 2);
  ~JobManager();

  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  std::string submit(Job job, Work work);
  // Registers an already finished job (the synchronous fast path).
  std::string record(Job job);

  std::optional<Job> get(const std::string& id) const;
  // Blocks until the job leaves Queued/Running or the timeout passes.
  std::optional<Job> wait(const std::string& id, std::chrono::milliseconds timeout);

  // Runs the remaining queue to completion and joins the workers.
  void shutdown();

 private:
  void worker();
  std::string next_id();

  mutable std::mutex mu_;
  std::condition_variable queue_cv_;
  std::condition_variable done_cv_;
  std::deque<std::pair<std::string, Work>> queue_;
  std::map<std::string, Job> jobs_;
  std::map<std::string, std::string> active_by_key_;
  std::uint64_t serial_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace msb::service
