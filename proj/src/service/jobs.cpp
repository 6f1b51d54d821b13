#include "msb/service/jobs.hpp"

#include "msb/core/error.hpp"

namespace msb::service {

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "unknown";
}

Json to_json(const Job& job, bool include_scores) {
  Json j{{"id", job.id},
         {"sketchbook_id", job.sketchbook_id},
         {"concept_id", job.concept_id},
         {"dataset", job.dataset},
         {"state", to_string(job.state)}};
  if (job.error) {
    j["error"] = {{"code", job.error->code}, {"message", job.error->message}, {"field", job.error->field}};
  }
  if (job.result) {
    Json r{{"concept_id", job.result->concept_id},
           {"dataset", job.result->dataset},
           {"warnings", job.result->warnings},
           {"cache_key", job.result->cache_key}};
    if (include_scores) r["scores"] = job.result->scores;
    j["result"] = std::move(r);
  }
  return j;
}

JobManager::JobManager(std::size_t workers) {
  if (workers == 0) workers = 1;
  for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { worker(); });
}

JobManager::~JobManager() { shutdown(); }

std::string JobManager::next_id() { return "job-" + std::to_string(++serial_); }

std::string JobManager::submit(Job job, Work work) {
  std::lock_guard lock(mu_);
  if (!job.cache_key.empty()) {
    if (auto it = active_by_key_.find(job.cache_key); it != active_by_key_.end()) return it->second;
  }
  if (stopping_) throw Error(ErrorCode::BadRequest, "the job queue is shutting down");
  job.id = next_id();
  job.state = JobState::Queued;
  if (!job.cache_key.empty()) active_by_key_[job.cache_key] = job.id;
  queue_.emplace_back(job.id, std::move(work));
  const std::string id = job.id;
  jobs_.emplace(id, std::move(job));
  queue_cv_.notify_one();
  return id;
}

std::string JobManager::record(Job job) {
  std::lock_guard lock(mu_);
  job.id = next_id();
  const std::string id = job.id;
  jobs_.emplace(id, std::move(job));
  return id;
}

std::optional<Job> JobManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::optional<Job> JobManager::wait(const std::string& id, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  auto finished = [&] {
    auto it = jobs_.find(id);
    return it == jobs_.end() || it->second.state == JobState::Done || it->second.state == JobState::Failed;
  };
  done_cv_.wait_for(lock, timeout, finished);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

void JobManager::worker() {
  for (;;) {
    std::pair<std::string, Work> item;
    {
      std::unique_lock lock(mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      item = std::move(queue_.front());
      queue_.pop_front();
      jobs_.at(item.first).state = JobState::Running;
    }
    std::optional<concepts::ConceptScores> result;
    std::optional<JobError> error;
    try {
      result = item.second();
    } catch (const Error& e) {
      error = JobError{std::string(msb::to_string(e.code())), e.what(), e.field()};
    } catch (const std::exception& e) {
      error = JobError{"InternalError", e.what(), {}};
    }
    {
      std::lock_guard lock(mu_);
      Job& job = jobs_.at(item.first);
      job.state = error ? JobState::Failed : JobState::Done;
      job.error = std::move(error);
      job.result = std::move(result);
      if (!job.cache_key.empty()) active_by_key_.erase(job.cache_key);
    }
    done_cv_.notify_all();
  }
}

void JobManager::shutdown() {
  {
    std::lock_guard lock(mu_);
    if (stopping_ && threads_.empty()) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  threads_.clear();
}

}  // namespace msb::service
