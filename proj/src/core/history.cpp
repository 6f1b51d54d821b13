#include "msb/core/history.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <utility>

#include "msb/core/error.hpp"

namespace msb::core {
namespace {

constexpr std::array kEventNames = {
    std::pair{EventKind::SketchbookCreated, "SketchbookCreated"},
    std::pair{EventKind::DatasetAdded, "DatasetAdded"},
    std::pair{EventKind::BackendAdded, "BackendAdded"},
    std::pair{EventKind::ConceptCreated, "ConceptCreated"},
    std::pair{EventKind::ConceptDeleted, "ConceptDeleted"},
    std::pair{EventKind::ConceptRefined, "ConceptRefined"},
    std::pair{EventKind::SketchTrained, "SketchTrained"},
    std::pair{EventKind::SketchDeleted, "SketchDeleted"},
    std::pair{EventKind::NoteAdded, "NoteAdded"},
};

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "SketchbookCreated";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kEventNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

const HistoryEvent& History::append(EventKind kind, std::string subject_id, std::string summary) {
  events_.push_back(
      HistoryEvent{last_seq() + 1, utc_timestamp(), kind, std::move(subject_id), std::move(summary)});
  return events_.back();
}

std::vector<HistoryEvent> History::since(std::uint64_t seq) const {
  std::vector<HistoryEvent> out;
  for (const auto& e : events_) {
    if (e.seq > seq) out.push_back(e);
  }
  return out;
}

History History::restore(std::vector<HistoryEvent> events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].seq != i + 1) {
      throw Error(ErrorCode::CorruptDocument, "history sequence has a gap at event " +
                                                  std::to_string(i + 1));
    }
  }
  History h;
  h.events_ = std::move(events);
  return h;
}

}  // namespace msb::core
