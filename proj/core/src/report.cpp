#include "satbench/report.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "satbench/csv.hpp"
#include "satbench/error.hpp"
#include "satbench/unicode.hpp"

namespace satbench {

using nlohmann::json;

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  const std::string lower = unicode::ascii_lower(text);
  if (lower == "md" || lower == "markdown") return ReportFormat::kMarkdown;
  if (lower == "csv") return ReportFormat::kCsv;
  if (lower == "json") return ReportFormat::kJson;
  return std::nullopt;
}

ReportTable report(const std::vector<RunRecord>& records, UnparseablePolicy policy) {
  if (records.empty()) throw EvalError("run store is empty");

  struct Tally {
    ReportRow row;
    std::size_t unparseable = 0;
    std::size_t truncated = 0;
    std::size_t failed = 0;
  };
  std::map<std::string, Tally> cells;
  for (const RunRecord& record : records) {
    auto [it, inserted] = cells.try_emplace(record.cell.id());
    Tally& tally = it->second;
    if (inserted) {
      tally.row.cell = record.cell;
      tally.row.cell_index = record.cell_index;
      tally.row.confusion = ConfusionMatrix(policy);
    }
    const Verdict predicted = record.failed ? Verdict::kUnparseable : record.parsed.label;
    tally.row.confusion.add(record.gold, predicted);
    ++tally.row.records;
    if (predicted == Verdict::kUnparseable) ++tally.unparseable;
    if (record.truncated_input) ++tally.truncated;
    if (record.failed) ++tally.failed;
  }

  ReportTable table;
  table.policy = policy;
  for (auto& [id, tally] : cells) {
    ReportRow& row = tally.row;
    const double n = static_cast<double>(row.records);
    row.parse_rate = 100.0 * static_cast<double>(row.records - tally.unparseable) / n;
    row.truncation_rate = 100.0 * static_cast<double>(tally.truncated) / n;
    row.failure_rate = 100.0 * static_cast<double>(tally.failed) / n;
    if (row.confusion.scored() > 0) row.metrics = metrics(row.confusion);
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.cell_index != b.cell_index) return a.cell_index < b.cell_index;
    return a.cell.id() < b.cell.id();
  });
  return table;
}

namespace {

std::string one_decimal(double value) { return fmt::format("{:.1f}", round1(value)); }

std::string metric_text(const std::optional<MetricsReport>& m, double MetricsReport::*field) {
  return m ? one_decimal((*m).*field) : "n/a";
}

struct Column {
  std::string header;
  std::string (*value)(const ReportRow&);
};

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      {"Model", [](const ReportRow& r) { return r.cell.backend; }},
      {"Prompt", [](const ReportRow& r) { return std::string(to_string(r.cell.prompt_language)); }},
      {"Dataset", [](const ReportRow& r) { return r.cell.dataset; }},
      {"Approach", [](const ReportRow& r) { return std::string(display_name(r.cell.strategy)); }},
      {"Accuracy", [](const ReportRow& r) { return metric_text(r.metrics, &MetricsReport::accuracy); }},
      {"Precision", [](const ReportRow& r) { return metric_text(r.metrics, &MetricsReport::precision); }},
      {"Recall", [](const ReportRow& r) { return metric_text(r.metrics, &MetricsReport::recall); }},
      {"F1-Score", [](const ReportRow& r) { return metric_text(r.metrics, &MetricsReport::f1); }},
      {"Parse rate", [](const ReportRow& r) { return one_decimal(r.parse_rate); }},
      {"Truncation rate", [](const ReportRow& r) { return one_decimal(r.truncation_rate); }},
      {"Failure rate", [](const ReportRow& r) { return one_decimal(r.failure_rate); }},
      {"N", [](const ReportRow& r) { return std::to_string(r.records); }},
  };
  return cols;
}

std::string render_markdown(const ReportTable& table) {
  std::string out = "Unparseable policy: " + std::string(to_string(table.policy)) + "\n\n|";
  std::string rule = "|";
  for (const Column& c : columns()) {
    out += " " + c.header + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (const ReportRow& row : table.rows) {
    out += "|";
    for (const Column& c : columns()) out += " " + c.value(row) + " |";
    out += "\n";
  }
  return out;
}

std::string render_csv(const ReportTable& table) {
  std::string out;
  for (std::size_t i = 0; i < columns().size(); ++i) {
    if (i) out += ",";
    out += csv::escape_field(columns()[i].header);
  }
  out += ",Policy\n";
  for (const ReportRow& row : table.rows) {
    for (std::size_t i = 0; i < columns().size(); ++i) {
      if (i) out += ",";
      out += csv::escape_field(columns()[i].value(row));
    }
    out += "," + std::string(to_string(table.policy)) + "\n";
  }
  return out;
}

std::string render_json(const ReportTable& table) {
  json rows = json::array();
  auto metric = [](const std::optional<MetricsReport>& m, double MetricsReport::*field) {
    return m ? json(round1((*m).*field)) : json(nullptr);
  };
  for (const ReportRow& row : table.rows) {
    rows.push_back({{"model", row.cell.backend},
                    {"model_name", row.cell.model},
                    {"prompt", to_string(row.cell.prompt_language)},
                    {"dataset", row.cell.dataset},
                    {"approach", display_name(row.cell.strategy)},
                    {"accuracy", metric(row.metrics, &MetricsReport::accuracy)},
                    {"precision", metric(row.metrics, &MetricsReport::precision)},
                    {"recall", metric(row.metrics, &MetricsReport::recall)},
                    {"f1", metric(row.metrics, &MetricsReport::f1)},
                    {"parse_rate", round1(row.parse_rate)},
                    {"truncation_rate", round1(row.truncation_rate)},
                    {"failure_rate", round1(row.failure_rate)},
                    {"n", row.records},
                    {"confusion",
                     {{"tp", row.confusion.tp()},
                      {"fp", row.confusion.fp()},
                      {"fn", row.confusion.fn()},
                      {"tn", row.confusion.tn()},
                      {"unparseable", row.confusion.n_unparseable()}}}});
  }
  const json out = {{"policy", to_string(table.policy)}, {"rows", std::move(rows)}};
  return out.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

}  // namespace

std::string render_report(const ReportTable& table, ReportFormat format) {
  switch (format) {
    case ReportFormat::kMarkdown:
      return render_markdown(table);
    case ReportFormat::kCsv:
      return render_csv(table);
    case ReportFormat::kJson:
      return render_json(table);
  }
  return render_markdown(table);
}

}  // namespace satbench
