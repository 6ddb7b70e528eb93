#include "cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "satbench/config.hpp"
#include "satbench/corpus.hpp"
#include "satbench/error.hpp"
#include "satbench/evaluator.hpp"
#include "satbench/orchestrator.hpp"
#include "satbench/parser.hpp"
#include "satbench/prompt.hpp"
#include "satbench/recording_store.hpp"
#include "satbench/report.hpp"
#include "satbench/run_store.hpp"

namespace satbench::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void print_error(std::ostream& err, std::string_view kind, std::string_view message) {
  err << json{{"error", kind}, {"message", message}}.dump(-1, ' ', false,
                                                          json::error_handler_t::replace)
      << '\n';
}

void require_file(const std::string& path, std::string_view what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path);
}

// ---------------------------------------------------------------- stats

struct StatsOptions {
  std::vector<std::string> datasets;
  std::vector<std::string> merged;
  std::string input_format;
  std::string map;
  std::string language;
  std::string output = "md";
};

struct NamedPath {
  std::string name;
  std::string path;
};

NamedPath split_named(const std::string& value) {
  const std::size_t eq = value.find('=');
  if (eq == std::string::npos) return {fs::path(value).stem().string(), value};
  return {value.substr(0, eq), value.substr(eq + 1)};
}

LoadOptions stats_load_options(const StatsOptions& opts, const std::string& path,
                               const std::string& name) {
  LoadOptions options;
  options.name = name;
  if (!opts.input_format.empty()) {
    const auto format = parse_file_format(opts.input_format);
    if (!format) throw UsageError("unknown --input-format '" + opts.input_format + "'");
    options.format = *format;
  } else {
    options.format = fs::path(path).extension() == ".csv" ? FileFormat::kCsv : FileFormat::kJsonl;
  }
  if (!opts.map.empty()) {
    try {
      options.schema = SchemaMap::parse(opts.map);
    } catch (const CorpusError& e) {
      throw UsageError(e.what());
    }
  }
  if (!opts.language.empty()) {
    options.language = parse_language(opts.language);
    if (!options.language) throw UsageError("unknown --language '" + opts.language + "'");
  }
  return options;
}

Dataset load_reporting(const StatsOptions& opts, const std::string& path, const std::string& name,
                       std::ostream& err) {
  require_file(path, "dataset file");
  LoadResult result = load_dataset(path, stats_load_options(opts, path, name));
  for (const RowError& e : result.errors) {
    print_error(err, "row", path + ":" + std::to_string(e.line) + ": " + e.message);
  }
  return std::move(result.dataset);
}

std::string percent_text(std::size_t count, double pct) {
  return fmt::format("{} ({:.1f}%)", count, pct);
}

int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.datasets.empty() && opts.merged.empty()) {
    throw UsageError("stats needs at least one --dataset or --merged");
  }
  std::vector<DatasetStats> stats;
  for (const std::string& spec : opts.datasets) {
    const NamedPath np = split_named(spec);
    stats.push_back(compute_stats(load_reporting(opts, np.path, np.name, err)));
  }
  for (const std::string& spec : opts.merged) {
    const NamedPath np = split_named(spec);
    const std::size_t plus = np.path.find('+');
    if (plus == std::string::npos || np.name == np.path) {
      throw UsageError("--merged expects NAME=SATIRE_PATH+NONSATIRE_PATH, got '" + spec + "'");
    }
    const std::string satire_path = np.path.substr(0, plus);
    const std::string nonsatire_path = np.path.substr(plus + 1);
    Dataset satire = load_reporting(opts, satire_path, fs::path(satire_path).stem().string(), err);
    Dataset nonsatire =
        load_reporting(opts, nonsatire_path, fs::path(nonsatire_path).stem().string(), err);
    stats.push_back(compute_stats(merge_balanced(satire, nonsatire, np.name)));
  }

  if (opts.output == "json") {
    json rows = json::array();
    for (const DatasetStats& s : stats) {
      rows.push_back({{"name", s.name},
                      {"language", to_string(s.language)},
                      {"n_entries", s.n_entries},
                      {"avg_words", s.avg_words},
                      {"avg_words_rounded", s.avg_words_rounded()},
                      {"n_satire", s.n_satire},
                      {"n_nonsatire", s.n_nonsatire},
                      {"pct_satire", s.pct_satire},
                      {"pct_nonsatire", s.pct_nonsatire}});
    }
    out << json{{"datasets", rows}}.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    return kExitOk;
  }
  if (opts.output != "md") throw UsageError("unknown --output '" + opts.output + "'");

  auto row = [&](std::string_view attribute, auto value_of) {
    out << "| " << attribute << " |";
    for (const DatasetStats& s : stats) out << ' ' << value_of(s) << " |";
    out << '\n';
  };
  row("Attribute", [](const DatasetStats& s) { return s.name; });
  out << "|---|";
  for (std::size_t i = 0; i < stats.size(); ++i) out << "---|";
  out << '\n';
  row("Language", [](const DatasetStats& s) { return std::string(to_string(s.language)); });
  row("Number of Entries", [](const DatasetStats& s) { return std::to_string(s.n_entries); });
  row("Average Words per Article",
      [](const DatasetStats& s) { return std::to_string(s.avg_words_rounded()); });
  row("Satire (%)", [](const DatasetStats& s) { return percent_text(s.n_satire, s.pct_satire); });
  row("Non-Satire (%)",
      [](const DatasetStats& s) { return percent_text(s.n_nonsatire, s.pct_nonsatire); });
  return kExitOk;
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string config;
  std::string store;
  std::string prompts_dir;
  std::string endpoint;
  std::string model;
  std::size_t max_inflight = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sample_size;
  std::string policy;
  bool quiet = false;
};

void apply_overrides(RunConfig& config, const RunOptions& opts) {
  if (!opts.endpoint.empty() || !opts.model.empty()) {
    if (config.backends.size() > 1) {
      throw UsageError("--endpoint/--model need a configuration with exactly one backend");
    }
    if (config.backends.empty()) {
      if (opts.endpoint.empty() || opts.model.empty()) {
        throw UsageError("without configured backends, --endpoint and --model are both required");
      }
      BackendConfig backend;
      backend.descriptor.kind = BackendKind::kHttpEndpoint;
      config.backends.push_back(backend);
    }
    BackendDescriptor& d = config.backends.front().descriptor;
    if (!opts.endpoint.empty()) {
      d.kind = BackendKind::kHttpEndpoint;
      d.endpoint_url = opts.endpoint;
    }
    if (!opts.model.empty()) d.model_name = opts.model;
  }
  if (opts.max_inflight > 0) {
    for (BackendConfig& b : config.backends) b.descriptor.max_inflight = opts.max_inflight;
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.sample_size) config.sample_size = *opts.sample_size;
  if (!opts.policy.empty()) {
    const auto policy = parse_policy(opts.policy);
    if (!policy) throw UsageError("unknown --policy '" + opts.policy + "'");
    config.policy = *policy;
  }
  if (!opts.prompts_dir.empty()) config.prompts_dir = opts.prompts_dir;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  require_file(opts.config, "config file");
  RunConfig config = load_run_config(opts.config);
  apply_overrides(config, opts);

  const TemplateSet templates =
      config.prompts_dir ? TemplateSet::load(*config.prompts_dir) : TemplateSet::bundled();
  for (const std::string& warning : templates.warnings()) print_error(err, "template", warning);

  std::vector<std::string> load_warnings;
  const std::vector<Dataset> datasets = load_datasets(config, &load_warnings);
  for (const std::string& warning : load_warnings) print_error(err, "row", warning);

  const ExperimentPlan experiment = plan(config, datasets);

  ExecutionContext context;
  context.datasets = &datasets;
  context.templates = &templates;
  context.instruction_as_system = config.instruction_as_system;
  context.parallel_cells = config.parallel_cells;
  for (const BackendConfig& b : config.backends) {
    context.backends.emplace(b.descriptor.label(), make_backend(b));
  }
  std::atomic<std::size_t> written{0};
  if (!opts.quiet) {
    context.on_record = [&written, &err](const RunRecord&) {
      const std::size_t n = ++written;
      if (n % 100 == 0) err << "satbench: " << n << " records written\n";
    };
  }

  RunStore store(opts.store);
  if (store.recovered_torn_tail()) {
    print_error(err, "store", "dropped a partially written final record in " + opts.store);
  }
  const ExecutionSummary summary = execute(experiment, store, context);
  out << fmt::format("cells: {}\ncompleted: {}\nskipped: {}\nfailed: {}\nbackend calls: {}\n",
                     experiment.cells.size(), summary.completed, summary.skipped, summary.failed,
                     summary.backend_calls);
  if (summary.all_skipped()) out << "all skipped\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string& store_path, const std::string& format_text,
               const std::string& policy_text, std::ostream& out) {
  require_file(store_path, "run store");
  const auto format = parse_report_format(format_text);
  if (!format) throw UsageError("unknown --format '" + format_text + "'");
  UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong;
  if (!policy_text.empty()) {
    const auto parsed = parse_policy(policy_text);
    if (!parsed) throw UsageError("unknown --policy '" + policy_text + "'");
    policy = *parsed;
  }
  RunStore store(store_path);
  out << render_report(report(store.records(), policy), *format);
  return kExitOk;
}

// ---------------------------------------------------------------- parse-check

std::optional<Verdict> parse_expected(std::string_view text) {
  if (text == "1") return Verdict::kSatire;
  if (text == "0") return Verdict::kNonSatire;
  return parse_verdict(text);
}

std::string span_text(const ParsedPrediction& p) {
  return p.matched_span ? fmt::format("{}-{}", p.matched_span->begin, p.matched_span->end) : "-";
}

int cmd_parse_check(const std::string& input, bool annotated, std::ostream& out) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (input != "-") {
    require_file(input, "input file");
    file.open(input, std::ios::binary);
    in = &file;
  }
  std::size_t total = 0;
  std::size_t agree = 0;
  std::size_t line_number = 0;
  std::string line;
  while (std::getline(*in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!annotated) {
      const ParsedPrediction p = parse_label(line);
      out << to_string(p.label) << '\t' << span_text(p) << '\t' << line << '\n';
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw UsageError(fmt::format("{}:{}: expected '<label>\\t<response>'", input, line_number));
    }
    const auto expected = parse_expected(line.substr(0, tab));
    if (!expected) {
      throw UsageError(fmt::format("{}:{}: unknown label '{}'", input, line_number,
                                   line.substr(0, tab)));
    }
    const std::string response = line.substr(tab + 1);
    const ParsedPrediction p = parse_label(response);
    ++total;
    const bool ok = p.label == *expected;
    if (ok) ++agree;
    out << (ok ? "ok" : "MISMATCH") << '\t' << to_string(*expected) << '\t' << to_string(p.label)
        << '\t' << span_text(p) << '\t' << response << '\n';
  }
  if (!annotated) return kExitOk;
  out << fmt::format("{}/{} agree\n", agree, total);
  return agree == total ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- validate-table

int cmd_validate_table(const std::string& csv_path, const std::string& format, std::ostream& out) {
  require_file(csv_path, "published table");
  std::ifstream in(csv_path, std::ios::binary);
  const std::vector<PublishedRow> rows = read_published_rows(in);
  std::size_t consistent = 0;
  json json_rows = json::array();
  for (const PublishedRow& row : rows) {
    const ConsistencyVerdict v =
        validate_published_row(row.accuracy, row.precision, row.recall, row.f1);
    if (v.consistent) ++consistent;
    if (format == "json") {
      json_rows.push_back({{"line", row.line},
                           {"model", row.model},
                           {"prompt", row.prompt},
                           {"dataset", row.dataset},
                           {"approach", row.approach},
                           {"f1", row.f1},
                           {"recomputed_f1", v.recomputed_f1},
                           {"deviation", v.deviation},
                           {"consistent", v.consistent}});
    } else {
      out << fmt::format("{}\t{}\t{}\t{}\t{}\tF1={:.1f}\trecomputed={:.2f}\t|diff|={:.2f}\n",
                         v.consistent ? "consistent" : "inconsistent", row.model, row.prompt,
                         row.dataset, row.approach, row.f1, v.recomputed_f1, v.deviation);
    }
  }
  if (format == "json") {
    out << json{{"rows", json_rows}, {"consistent", consistent}, {"total", rows.size()}}.dump(2)
        << '\n';
  } else {
    out << fmt::format("{}/{} consistent\n", consistent, rows.size());
  }
  return consistent == rows.size() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- cache

int cmd_cache(const std::string& action, const std::string& path, const std::string& key,
              std::ostream& out) {
  require_file(path, "recording store");
  RecordingStore store(path);
  if (action == "info") {
    out << fmt::format("entries: {}\nduplicate lines: {}\ncorrupt lines: {}\n", store.size(),
                       store.duplicate_lines(), store.corrupt_lines());
    return kExitOk;
  }
  if (action == "compact") {
    const std::size_t dropped = store.duplicate_lines() + store.corrupt_lines();
    store.compact();
    out << fmt::format("entries: {}\ndropped lines: {}\n", store.size(), dropped);
    return kExitOk;
  }
  // lookup
  const auto response = store.lookup(key);
  if (!response) {
    throw BackendError(BackendFailure::kMissingRecording, "missing recording for cache_key " + key);
  }
  out << response->text << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual satire-detection evaluation harness", "satbench"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  StatsOptions stats_opts;
  auto* stats = app.add_subcommand("stats", "Dataset statistics table");
  stats->add_option("--dataset", stats_opts.datasets, "Corpus file, optionally NAME=PATH");
  stats->add_option("--merged", stats_opts.merged,
                    "Merged corpus NAME=SATIRE_PATH+NONSATIRE_PATH");
  stats->add_option("--input-format", stats_opts.input_format,
                    "jsonl or csv (default: by extension)");
  stats->add_option("--map", stats_opts.map, "Column mapping text=COL,label=COL[,id=COL]");
  stats->add_option("--language", stats_opts.language, "Corpus language (en or ar)");
  stats->add_option("--output", stats_opts.output, "md or json")->capture_default_str();

  RunOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "Execute the experiment matrix");
  run_cmd->add_option("--config", run_opts.config, "Run configuration (JSON)")->required();
  run_cmd->add_option("--store", run_opts.store, "Run store (JSONL)")->required();
  run_cmd->add_option("--prompts-dir", run_opts.prompts_dir, "Override the bundled prompts");
  run_cmd->add_option("--endpoint", run_opts.endpoint, "OpenAI-compatible endpoint URL");
  run_cmd->add_option("--model", run_opts.model, "Model name sent to the endpoint");
  run_cmd->add_option("--max-inflight", run_opts.max_inflight, "Concurrent requests per backend")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run_opts.seed, "Sampling seed");
  run_cmd->add_option("--sample-size", run_opts.sample_size, "Articles per dataset")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--policy", run_opts.policy,
                      "count-as-wrong, exclude or count-as-negative");
  run_cmd->add_flag("--quiet", run_opts.quiet, "No progress output");

  std::string report_store;
  std::string report_format = "md";
  std::string report_policy;
  auto* report_cmd = app.add_subcommand("report", "Metrics table from a run store");
  report_cmd->add_option("--store", report_store, "Run store (JSONL)")->required();
  report_cmd->add_option("--format", report_format, "md, csv or json")->capture_default_str();
  report_cmd->add_option("--policy", report_policy, "Unparseable policy");

  std::string parse_input;
  bool parse_annotated = false;
  auto* parse_cmd = app.add_subcommand("parse-check", "Parse model responses, one per line");
  parse_cmd->add_option("--input", parse_input, "Response file, '-' for stdin")->required();
  parse_cmd->add_flag("--annotated", parse_annotated,
                      "Lines are '<expected>\\t<response>'; report agreement");

  std::string table_csv;
  std::string table_format = "text";
  auto* table_cmd = app.add_subcommand("validate-table", "Check published metric rows");
  table_cmd->add_option("--csv", table_csv, "Published rows (CSV)")->required();
  table_cmd->add_option("--format", table_format, "text or json")->capture_default_str();

  std::string cache_path;
  std::string cache_key;
  auto* cache_cmd = app.add_subcommand("cache", "Inspect or compact a recording store");
  cache_cmd->require_subcommand(1);
  auto* cache_info = cache_cmd->add_subcommand("info", "Entry counts");
  auto* cache_compact = cache_cmd->add_subcommand("compact", "Drop duplicate and corrupt lines");
  auto* cache_lookup = cache_cmd->add_subcommand("lookup", "Print a recorded response");
  for (auto* sub : {cache_info, cache_compact, cache_lookup}) {
    sub->add_option("--recordings", cache_path, "Recording store (JSONL)")->required();
  }
  cache_lookup->add_option("--key", cache_key, "cache_key")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*stats) return cmd_stats(stats_opts, out, err);
    if (*run_cmd) return cmd_run(run_opts, out, err);
    if (*report_cmd) return cmd_report(report_store, report_format, report_policy, out);
    if (*parse_cmd) return cmd_parse_check(parse_input, parse_annotated, out);
    if (*table_cmd) {
      if (table_format != "text" && table_format != "json") {
        throw UsageError("unknown --format '" + table_format + "'");
      }
      return cmd_validate_table(table_csv, table_format, out);
    }
    if (*cache_cmd) {
      const std::string action = *cache_info ? "info" : *cache_compact ? "compact" : "lookup";
      return cmd_cache(action, cache_path, cache_key, out);
    }
  } catch (const UsageError& e) {
    print_error(err, "usage", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what());
    return kExitFailure;
  } catch (const CorpusError& e) {
    print_error(err, "corpus", e.what());
    return kExitFailure;
  } catch (const PromptError& e) {
    print_error(err, "prompt", e.what());
    return kExitFailure;
  } catch (const BackendError& e) {
    print_error(err, "backend", e.what());
    return kExitFailure;
  } catch (const StoreError& e) {
    print_error(err, "store", e.what());
    return kExitFailure;
  } catch (const EvalError& e) {
    print_error(err, "eval", e.what());
    return kExitFailure;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return kExitFailure;
  }
  print_error(err, "usage", "no subcommand");
  return kExitUsage;
}

}  // namespace satbench::cli
