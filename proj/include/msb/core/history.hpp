#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace msb::core {

enum class EventKind {
  SketchbookCreated,
  DatasetAdded,
  BackendAdded,
  ConceptCreated,
  ConceptDeleted,
  ConceptRefined,
  SketchTrained,
  SketchDeleted,
  NoteAdded,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view name);

struct HistoryEvent {
  std::uint64_t seq = 0;
  std::string timestamp;  // ISO-8601 UTC
  EventKind kind = EventKind::SketchbookCreated;
  std::string subject_id;
  std::string summary;
};

// Append-only log with gap-free sequence numbers starting at 1.
class History {
 public:
  const HistoryEvent& append(EventKind kind, std::string subject_id, std::string summary);

  const std::vector<HistoryEvent>& events() const noexcept { return events_; }
  std::vector<HistoryEvent> since(std::uint64_t seq) const;
  std::uint64_t last_seq() const noexcept { return events_.empty() ? 0 : events_.back().seq; }
  std::size_t size() const noexcept { return events_.size(); }

  // Rebuilds a log from stored events; throws CorruptDocument on gaps.
  static History restore(std::vector<HistoryEvent> events);

 private:
  std::vector<HistoryEvent> events_;
};

std::string utc_timestamp();

}  // namespace msb::core
