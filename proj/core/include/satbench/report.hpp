#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "satbench/evaluator.hpp"
#include "satbench/run_store.hpp"

namespace satbench {

struct ReportRow {
  CellKey cell;
  std::size_t cell_index = 0;
  ConfusionMatrix confusion;
  /// Absent when nothing was scored (every record excluded).
  std::optional<MetricsReport> metrics;
  std::size_t records = 0;
  double parse_rate = 0.0;
  double truncation_rate = 0.0;
  double failure_rate = 0.0;
};

struct ReportTable {
  UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong;
  std::vector<ReportRow> rows;
};

/// One row per cell ordered by plan position. Failed records count as
/// unparseable. Throws EvalError on an empty record set.
ReportTable report(const std::vector<RunRecord>& records, UnparseablePolicy policy);

enum class ReportFormat { kMarkdown, kCsv, kJson };

std::optional<ReportFormat> parse_report_format(std::string_view text);

/// Every format prints the same one-decimal values.
std::string render_report(const ReportTable& table, ReportFormat format);

}  // namespace satbench
