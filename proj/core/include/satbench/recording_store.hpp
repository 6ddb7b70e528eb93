#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "satbench/backend.hpp"

namespace satbench {

/// Append-only JSONL cache of chat exchanges keyed by ChatRequest::cache_key.
/// Each line is {cache_key, request, response, timestamp}; the first line for
/// a key wins and later duplicates are ignored.
class RecordingStore {
 public:
  /// Opens (creating if needed) the file and indexes existing lines.
  explicit RecordingStore(std::filesystem::path path);

  std::optional<ChatResponse> lookup(const std::string& cache_key) const;

  /// Returns false when the key was already recorded. Throws StoreError.
  bool record(const BackendDescriptor& backend, const ChatRequest& request,
              const ChatResponse& response);

  std::size_t size() const;
  /// Lines skipped at open because their key was already present.
  std::size_t duplicate_lines() const noexcept { return duplicate_lines_; }
  /// Unparseable lines skipped at open (e.g. a torn final write).
  std::size_t corrupt_lines() const noexcept { return corrupt_lines_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Rewrites the file with one line per key, in first-seen order.
  void compact();

 private:
  struct Entry {
    std::string line;
    ChatResponse response;
  };

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Entry> entries_;
  std::size_t duplicate_lines_ = 0;
  std::size_t corrupt_lines_ = 0;
};

/// Serves responses from a RecordingStore. Without an upstream it is strict:
/// a miss throws BackendError(kMissingRecording). With an upstream, misses are
/// forwarded and recorded.
class ReplayBackend final : public ChatBackend {
 public:
  ReplayBackend(BackendDescriptor descriptor, std::shared_ptr<RecordingStore> store,
                std::shared_ptr<ChatBackend> upstream = nullptr);

  const BackendDescriptor& descriptor() const noexcept override { return descriptor_; }
  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  BackendDescriptor descriptor_;
  std::shared_ptr<RecordingStore> store_;
  std::shared_ptr<ChatBackend> upstream_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace satbench
