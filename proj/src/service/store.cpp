#include "msb/service/store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "msb/core/error.hpp"

namespace msb::service {
namespace fs = std::filesystem;

namespace {

bool safe_id(const std::string& id) {
  if (id.empty() || id.front() == '.') return false;
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

[[noreturn]] void unknown(const std::string& id) {
  throw Error(ErrorCode::UnknownSketchbook, "no sketchbook '" + id + "'", "sketchbook_id");
}

}  // namespace

Store::Store(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  const auto probe = dir_ / ".write-probe";
  {
    std::ofstream out(probe);
    if (ec || !out || !(out << "ok")) {
      throw Error(ErrorCode::DataDirUnwritable, "cannot write to data directory '" + dir_.string() + "'",
                  "data_dir");
    }
  }
  fs::remove(probe, ec);
}

fs::path Store::path_for(const std::string& id) const { return dir_ / (id + ".json"); }

void Store::persist(const core::Sketchbook& sb) {
  const auto target = path_for(sb.id);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << core::export_sketchbook_text(sb);
    if (!out.flush()) {
      throw Error(ErrorCode::IoError, "failed writing '" + tmp.string() + "'", "data_dir");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::IoError, "failed replacing '" + target.string() + "'", "data_dir");
}

std::shared_ptr<Store::Slot> Store::slot(const std::string& id) {
  std::lock_guard lock(mu_);
  if (auto it = loaded_.find(id); it != loaded_.end()) return it->second;
  if (!safe_id(id)) unknown(id);
  std::ifstream in(path_for(id), std::ios::binary);
  if (!in) unknown(id);
  std::ostringstream text;
  text << in.rdbuf();
  auto s = std::make_shared<Slot>();
  s->sb = core::import_sketchbook_text(text.str());
  loaded_.emplace(id, s);
  return s;
}

void Store::insert(core::Sketchbook sb) {
  if (!safe_id(sb.id)) throw Error(ErrorCode::InvalidId, "bad sketchbook id '" + sb.id + "'", "id");
  std::lock_guard lock(mu_);
  if (loaded_.count(sb.id) || fs::exists(path_for(sb.id))) {
    throw Error(ErrorCode::DuplicateId, "sketchbook '" + sb.id + "' already exists", "id");
  }
  auto s = std::make_shared<Slot>();
  s->sb = std::move(sb);
  persist(s->sb);
  loaded_.emplace(s->sb.id, std::move(s));
}

bool Store::exists(const std::string& id) {
  {
    std::lock_guard lock(mu_);
    if (loaded_.count(id)) return true;
  }
  return safe_id(id) && fs::exists(path_for(id));
}

std::vector<std::string> Store::list() {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : loaded_) ids.push_back(id);
  }
  for (const auto& entry : fs::directory_iterator(dir_)) {
    const auto p = entry.path();
    if (p.extension() != ".json") continue;
    auto id = p.stem().string();
    if (safe_id(id)) ids.push_back(std::move(id));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void Store::flush() {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : loaded_) slots.push_back(s);
  }
  for (const auto& s : slots) {
    std::lock_guard lock(s->mu);
    persist(s->sb);
  }
}

}  // namespace msb::service
