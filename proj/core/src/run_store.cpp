#include "satbench/run_store.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "satbench/error.hpp"

namespace satbench {

using nlohmann::json;

std::string CellKey::id() const {
  return backend + "|" + std::string(language_code(prompt_language)) + "|" + dataset + "|" +
         std::string(to_string(strategy));
}

namespace {

Language language_from(const json& value) {
  const auto language = parse_language(value.get<std::string>());
  if (!language) throw StoreError("bad language in run record: " + value.dump());
  return *language;
}

json exchange_to_json(const Exchange& exchange) {
  return {{"phase", to_string(exchange.phase)},
          {"prompt", exchange.prompt},
          {"response", exchange.response},
          {"truncated_input", exchange.truncated_input},
          {"latency_ms", exchange.latency_ms},
          {"attempts", exchange.attempts}};
}

Exchange exchange_from_json(const json& j) {
  Exchange exchange;
  const auto phase = parse_phase(j.at("phase").get<std::string>());
  if (!phase) throw StoreError("bad phase in run record");
  exchange.phase = *phase;
  exchange.prompt = j.at("prompt").get<std::string>();
  exchange.response = j.at("response").get<std::string>();
  exchange.truncated_input = j.value("truncated_input", false);
  exchange.latency_ms = j.value("latency_ms", 0.0);
  exchange.attempts = j.value("attempts", 0);
  return exchange;
}

}  // namespace

std::string to_json_line(const RunRecord& record) {
  json exchanges = json::array();
  for (const Exchange& exchange : record.exchanges) exchanges.push_back(exchange_to_json(exchange));
  json parsed = {{"label", to_string(record.parsed.label)}, {"span", nullptr}};
  if (record.parsed.matched_span) {
    parsed["span"] = {record.parsed.matched_span->begin, record.parsed.matched_span->end};
  }
  const json j = {
      {"cell_id", record.cell.id()},
      {"cell",
       {{"backend", record.cell.backend},
        {"model", record.cell.model},
        {"prompt_language", language_code(record.cell.prompt_language)},
        {"dataset", record.cell.dataset},
        {"strategy", to_string(record.cell.strategy)}}},
      {"cell_index", record.cell_index},
      {"article_id", record.article_id},
      {"article_language", language_code(record.article_language)},
      {"gold", to_string(record.gold)},
      {"exchanges", std::move(exchanges)},
      {"analysis_text", record.analysis_text ? json(*record.analysis_text) : json(nullptr)},
      {"parsed", std::move(parsed)},
      {"truncated_input", record.truncated_input},
      {"latency_ms", record.latency_ms},
      {"failed", record.failed},
      {"error", record.error},
  };
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

RunRecord run_record_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    RunRecord record;
    const json& cell = j.at("cell");
    record.cell.backend = cell.at("backend").get<std::string>();
    record.cell.model = cell.at("model").get<std::string>();
    record.cell.prompt_language = language_from(cell.at("prompt_language"));
    record.cell.dataset = cell.at("dataset").get<std::string>();
    const auto strategy = parse_strategy(cell.at("strategy").get<std::string>());
    if (!strategy) throw StoreError("bad strategy in run record");
    record.cell.strategy = *strategy;
    record.cell_index = j.value("cell_index", std::size_t{0});
    record.article_id = j.at("article_id").get<std::string>();
    record.article_language = language_from(j.at("article_language"));
    const auto gold = parse_gold_label(j.at("gold").get<std::string>());
    if (!gold) throw StoreError("bad gold label in run record");
    record.gold = *gold;
    for (const json& exchange : j.at("exchanges")) {
      record.exchanges.push_back(exchange_from_json(exchange));
    }
    if (const json& analysis = j.at("analysis_text"); !analysis.is_null()) {
      record.analysis_text = analysis.get<std::string>();
    }
    const json& parsed = j.at("parsed");
    const auto verdict = parse_verdict(parsed.at("label").get<std::string>());
    if (!verdict) throw StoreError("bad parsed label in run record");
    record.parsed.label = *verdict;
    if (const json& span = parsed.at("span"); !span.is_null()) {
      record.parsed.matched_span = CharSpan{span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    }
    record.parsed.raw = record.exchanges.empty() ? std::string() : record.exchanges.back().response;
    record.truncated_input = j.value("truncated_input", false);
    record.latency_ms = j.value("latency_ms", 0.0);
    record.failed = j.value("failed", false);
    record.error = j.value("error", std::string());
    if (record.failed) record.parsed.raw.clear();
    return record;
  } catch (const json::exception& e) {
    throw StoreError(std::string("malformed run record: ") + e.what());
  }
}

RunStore::RunStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  std::string contents;
  {
    std::ifstream in(path_, std::ios::binary);
    if (in) {
      std::ostringstream buffer;
      buffer << in.rdbuf();
      contents = buffer.str();
    }
  }

  std::size_t pos = 0;
  std::size_t line_number = 0;
  std::size_t valid_bytes = 0;
  while (pos < contents.size()) {
    std::size_t newline = contents.find('\n', pos);
    const bool terminated = newline != std::string::npos;
    if (!terminated) newline = contents.size();
    const std::string_view line = std::string_view(contents).substr(pos, newline - pos);
    ++line_number;
    if (!line.empty()) {
      try {
        RunRecord record = run_record_from_json(line);
        if (!keys_.emplace(record.cell.id(), record.article_id).second) {
          throw StoreError("duplicate run record for " + record.cell.id() + " / " +
                           record.article_id);
        }
        records_.push_back(std::move(record));
      } catch (const StoreError& e) {
        if (!terminated) {
          // A crash mid-write leaves a partial final line; drop it.
          recovered_torn_tail_ = true;
          break;
        }
        throw StoreError(path_.string() + ":" + std::to_string(line_number) + ": " + e.what());
      }
    }
    pos = terminated ? newline + 1 : newline;
    valid_bytes = pos;
  }

  if (recovered_torn_tail_) {
    std::error_code ec;
    std::filesystem::resize_file(path_, valid_bytes, ec);
    if (ec) throw StoreError("cannot truncate torn tail of " + path_.string() + ": " + ec.message());
  }
  const bool needs_newline = !recovered_torn_tail_ && !contents.empty() && contents.back() != '\n';

  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw StoreError("cannot open run store " + path_.string() + " for append");
  if (needs_newline) out_ << '\n';
}

bool RunStore::contains(const std::string& cell_id, const std::string& article_id) const {
  std::lock_guard lock(mutex_);
  return keys_.contains({cell_id, article_id});
}

void RunStore::append(const RunRecord& record) {
  const std::string line = to_json_line(record);
  std::lock_guard lock(mutex_);
  if (!keys_.emplace(record.cell.id(), record.article_id).second) {
    throw StoreError("run record for " + record.cell.id() + " / " + record.article_id +
                     " already stored");
  }
  out_ << line << '\n';
  out_.flush();
  if (!out_) {
    keys_.erase({record.cell.id(), record.article_id});
    throw StoreError("write to run store " + path_.string() + " failed");
  }
  records_.push_back(record);
}

std::vector<RunRecord> RunStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t RunStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

}  // namespace satbench
