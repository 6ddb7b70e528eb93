#include "satbench/recording_store.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "satbench/error.hpp"

namespace satbench {

using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", utc);
}

bool ends_without_newline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in || in.tellg() <= 0) return false;
  in.seekg(-1, std::ios::end);
  return in.get() != '\n';
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  const bool needs_separator = ends_without_newline(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot open recording store " + path.string() + " for append");
  if (needs_separator) out << '\n';
  out << line << '\n';
  out.flush();
  if (!out) throw StoreError("write to recording store " + path.string() + " failed");
}

}  // namespace

RecordingStore::RecordingStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    std::ofstream create(path_, std::ios::binary | std::ios::app);
    if (!create) throw StoreError("cannot create recording store " + path_.string());
    return;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json entry = json::parse(line);
      const std::string key = entry.at("cache_key").get<std::string>();
      if (index_.contains(key)) {
        ++duplicate_lines_;
        continue;
      }
      const json& r = entry.at("response");
      ChatResponse response;
      response.text = r.at("text").get<std::string>();
      response.latency_ms = r.value("latency_ms", 0.0);
      response.attempt_count = r.value("attempt_count", 1);
      response.truncated_input = r.value("truncated_input", false);
      index_.emplace(key, entries_.size());
      entries_.push_back(Entry{line, std::move(response)});
    } catch (const json::exception&) {
      ++corrupt_lines_;
    }
  }
}

std::optional<ChatResponse> RecordingStore::lookup(const std::string& cache_key) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(cache_key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].response;
}

bool RecordingStore::record(const BackendDescriptor& backend, const ChatRequest& request,
                            const ChatResponse& response) {
  std::unique_lock lock(mutex_);
  if (index_.contains(request.cache_key())) return false;
  const json entry = {{"cache_key", request.cache_key()},
                      {"backend", backend.label()},
                      {"request", json::parse(request.canonical_json())},
                      {"response",
                       {{"text", response.text},
                        {"latency_ms", response.latency_ms},
                        {"attempt_count", response.attempt_count},
                        {"truncated_input", response.truncated_input}}},
                      {"timestamp", utc_timestamp()}};
  std::string line = entry.dump(-1, ' ', false, json::error_handler_t::replace);
  append_line(path_, line);
  index_.emplace(request.cache_key(), entries_.size());
  entries_.push_back(Entry{std::move(line), response});
  return true;
}

std::size_t RecordingStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void RecordingStore::compact() {
  std::unique_lock lock(mutex_);
  const std::filesystem::path tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    for (const Entry& entry : entries_) out << entry.line << '\n';
    out.flush();
    if (!out) throw StoreError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec) throw StoreError("cannot replace " + path_.string() + ": " + ec.message());
  duplicate_lines_ = 0;
  corrupt_lines_ = 0;
}

ReplayBackend::ReplayBackend(BackendDescriptor descriptor, std::shared_ptr<RecordingStore> store,
                             std::shared_ptr<ChatBackend> upstream)
    : descriptor_(std::move(descriptor)), store_(std::move(store)), upstream_(std::move(upstream)) {
  if (!store_) throw ConfigError("replay backend " + descriptor_.label() + " has no store");
}

ChatResponse ReplayBackend::do_complete(const ChatRequest& request) {
  if (auto recorded = store_->lookup(request.cache_key())) {
    ++hits_;
    recorded->attempt_count = 1;
    return *recorded;
  }
  ++misses_;
  if (!upstream_) {
    throw BackendError(BackendFailure::kMissingRecording,
                       "missing recording for cache_key " + request.cache_key());
  }
  // The request is already fitted, so the upstream guard is a no-op.
  ChatResponse response = upstream_->complete(request);
  store_->record(descriptor_, request, response);
  return response;
}

}  // namespace satbench
