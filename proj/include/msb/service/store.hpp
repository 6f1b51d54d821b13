#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <type_traits>
#include <vector>

#include "msb/core/sketchbook.hpp"

namespace msb::service {

// Sketchbooks on disk as <dir>/<id>.json, loaded on first use and written
// through after every mutation. Each sketchbook has its own writer lock.
class Store {
 public:
  // Throws DataDirUnwritable.
  explicit Store(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }

  // Throws DuplicateId when the id exists in memory or on disk.
  void insert(core::Sketchbook sb);
  bool exists(const std::string& id);
  std::vector<std::string> list();

  // Runs f(Sketchbook&) under the sketchbook's lock and persists afterwards.
  template <class F>
  auto mutate(const std::string& id, F&& f) {
    return run(id, std::forward<F>(f), true);
  }

  // Runs f under the lock; persists only when the raw score cache changed size,
  // so views that trigger scoring keep their backend results.
  template <class F>
  auto access(const std::string& id, F&& f) {
    return run(id, std::forward<F>(f), false);
  }

  // Writes every loaded sketchbook.
  void flush();

 private:
  struct Slot {
    std::mutex mu;
    core::Sketchbook sb;
  };

  std::shared_ptr<Slot> slot(const std::string& id);
  std::filesystem::path path_for(const std::string& id) const;
  void persist(const core::Sketchbook& sb);

  template <class F>
  auto run(const std::string& id, F&& f, bool always_persist) {
    auto s = slot(id);
    std::lock_guard lock(s->mu);
    const auto raw_before = s->sb.cache.raw.size();
    const auto history_before = s->sb.history.size();
    auto changed = [&] {
      return always_persist || s->sb.cache.raw.size() != raw_before ||
             s->sb.history.size() != history_before;
    };
    if constexpr (std::is_void_v<std::invoke_result_t<F, core::Sketchbook&>>) {
      f(s->sb);
      if (changed()) persist(s->sb);
    } else {
      auto result = f(s->sb);
      if (changed()) persist(s->sb);
      return result;
    }
  }

  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> loaded_;
};

}  // namespace msb::service
