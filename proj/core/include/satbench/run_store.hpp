#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "satbench/corpus.hpp"
#include "satbench/parser.hpp"
#include "satbench/prompt.hpp"

namespace satbench {

/// Identity of one experiment cell: backend x prompt language x dataset x strategy.
struct CellKey {
  std::string backend;  // BackendDescriptor::label()
  std::string model;
  Language prompt_language = Language::kEnglish;
  std::string dataset;
  Strategy strategy = Strategy::kZeroShot;

  /// "backend|en|dataset|cot"
  std::string id() const;
  bool operator==(const CellKey&) const = default;
};

/// One prompt/response round trip.
struct Exchange {
  Phase phase = Phase::kSingle;
  std::string prompt;
  std::string response;
  bool truncated_input = false;
  double latency_ms = 0.0;
  int attempts = 0;

  bool operator==(const Exchange&) const = default;
};

/// The durable per-article result of one cell.
struct RunRecord {
  CellKey cell;
  /// Position of the cell in its plan; orders reports.
  std::size_t cell_index = 0;
  std::string article_id;
  Language article_language = Language::kEnglish;
  Label gold = Label::kSatire;
  /// One exchange for zero-shot, two (analysis, prediction) for CoT. A failed
  /// record holds the exchanges that completed before the failure.
  std::vector<Exchange> exchanges;
  std::optional<std::string> analysis_text;
  /// Parsed from the final exchange only; kUnparseable for failed records.
  ParsedPrediction parsed;
  bool truncated_input = false;
  double latency_ms = 0.0;
  bool failed = false;
  std::string error;
};

std::string to_json_line(const RunRecord& record);
/// Throws StoreError on malformed input.
RunRecord run_record_from_json(std::string_view line);

/// Append-only JSONL run store with at most one record per (cell, article).
///
/// Opening scans existing keys. A torn final line (no trailing newline and
/// not valid JSON) left by a crash is dropped and truncated away. Appends are
/// serialized and flushed line by line.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path path);

  bool contains(const std::string& cell_id, const std::string& article_id) const;

  /// Throws StoreError on a duplicate key or a failed write.
  void append(const RunRecord& record);

  std::vector<RunRecord> records() const;
  std::size_t size() const;
  bool recovered_torn_tail() const noexcept { return recovered_torn_tail_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::set<std::pair<std::string, std::string>> keys_;
  std::vector<RunRecord> records_;
  std::ofstream out_;
  bool recovered_torn_tail_ = false;
};

}  // namespace satbench
