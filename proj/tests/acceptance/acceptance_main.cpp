// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is the number of failures not listed in kKnownUnattainable.
// Listed criteria still print FAIL when they fail.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "satbench/csv.hpp"
#include "satbench/evaluator.hpp"
#include "satbench/orchestrator.hpp"
#include "satbench/recording_store.hpp"
#include "satbench/report.hpp"
#include "satbench/run_store.hpp"

namespace satbench::acceptance {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string kDataDir = SATBENCH_DATA_DIR;

// Tolerances.
constexpr double kAvgWordsRelTolerance = 0.05;
constexpr double kPriorTolerance = 0.1;  // one display decimal
constexpr int kOracleStreams = 1000;
constexpr std::size_t kKillAfter = 57;

// Criterion 2 fails on the published data itself: four F1 cells are not
// within 0.15 of 2PR/(P+R) for any rounding of P and R.
const std::set<int> kKnownUnattainable = {2};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "satbench");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

int decimals_of(const std::string& number) {
  const std::size_t dot = number.find('.');
  return dot == std::string::npos ? 0 : static_cast<int>(number.size() - dot - 1);
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

// ---------------------------------------------------------------- 1

Outcome dataset_statistics() {
  testing::TempDir dir;
  std::ifstream table(kDataDir + "/table1.csv");
  const auto rows = csv::read_all(table);
  std::vector<std::string> args = {"stats", "--output", "json"};
  std::map<std::string, std::vector<std::string>> reference;
  std::uint64_t seed = 1;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    reference[f[0]] = f;
    testing::CorpusShape shape;
    shape.name = f[0];
    shape.language = f[1] == "Arabic" ? Language::kArabic : Language::kEnglish;
    shape.avg_words = std::stod(f[3]);
    const std::size_t n_satire = std::stoul(f[4]);
    const std::size_t n_nonsatire = std::stoul(f[5]);
    if (f[0] == "Saadany") {
      // Satire-only source merged with a separate non-satire source.
      shape.n_satire = n_satire;
      testing::write_shaped_corpus(dir / "saadany.jsonl", shape, seed++);
      shape.name = "bbc-arabic";
      shape.n_satire = 0;
      shape.n_nonsatire = n_nonsatire;
      testing::write_shaped_corpus(dir / "bbc-arabic.jsonl", shape, seed++);
      args.push_back("--merged");
      args.push_back("Saadany=" + (dir / "saadany.jsonl").string() + "+" +
                     (dir / "bbc-arabic.jsonl").string());
    } else {
      shape.n_satire = n_satire;
      shape.n_nonsatire = n_nonsatire;
      const fs::path path = dir / (f[0] + ".jsonl");
      testing::write_shaped_corpus(path, shape, seed++);
      args.push_back("--dataset");
      args.push_back(f[0] + "=" + path.string());
    }
  }
  const CliResult r = invoke(args);
  if (r.code != cli::kExitOk) return {false, "stats exited " + std::to_string(r.code) + ": " + r.err};

  const json stats = json::parse(r.out);
  std::string detail;
  bool pass = stats["datasets"].size() == reference.size();
  for (const json& s : stats["datasets"]) {
    const auto& ref = reference.at(s["name"].get<std::string>());
    const bool counts = s["n_entries"].get<std::size_t>() == std::stoul(ref[2]) &&
                        s["n_satire"].get<std::size_t>() == std::stoul(ref[4]) &&
                        s["n_nonsatire"].get<std::size_t>() == std::stoul(ref[5]) &&
                        s["language"] == ref[1];
    // Percentages compared at the precision the reference prints.
    const bool pct = round_to(s["pct_satire"].get<double>(), decimals_of(ref[6])) == std::stod(ref[6]) &&
                     round_to(s["pct_nonsatire"].get<double>(), decimals_of(ref[7])) == std::stod(ref[7]);
    const double avg = s["avg_words"].get<double>();
    const double rel = std::abs(avg - std::stod(ref[3])) / std::stod(ref[3]);
    const bool words = rel <= kAvgWordsRelTolerance;
    pass = pass && counts && pct && words;
    detail += fmt::format("{} {}/{}/{} {:.1f}%/{:.1f}% avg {:.0f} ({:+.2f}%); ", ref[0],
                          s["n_entries"].get<std::size_t>(), s["n_satire"].get<std::size_t>(),
                          s["n_nonsatire"].get<std::size_t>(), s["pct_satire"].get<double>(),
                          s["pct_nonsatire"].get<double>(), avg, 100.0 * (avg / std::stod(ref[3]) - 1));
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 2

Outcome published_table() {
  const CliResult r = invoke({"validate-table", "--csv", kDataDir + "/table2.csv", "--format", "json"});
  const json j = json::parse(r.out);
  std::string detail = fmt::format("{}/{} consistent", j["consistent"].get<int>(), j["total"].get<int>());
  for (const json& row : j["rows"]) {
    if (!row["consistent"]) {
      detail += fmt::format("; {}/{}/{}/{} F1 {:.1f} vs {:.2f}", row["model"].get<std::string>(),
                            row["prompt"].get<std::string>(), row["dataset"].get<std::string>(),
                            row["approach"].get<std::string>(), row["f1"].get<double>(),
                            row["recomputed_f1"].get<double>());
    }
  }
  return {r.code == cli::kExitOk && j["consistent"] == 32 && j["total"] == 32, detail};
}

// ---------------------------------------------------------------- shared run harness

struct Fixture {
  std::vector<Dataset> datasets;
  TemplateSet templates = TemplateSet::bundled();
  BackendDescriptor descriptor = testing::mock_descriptor("scripted");
  ExperimentPlan plan;

  explicit Fixture(std::vector<Dataset> ds) : datasets(std::move(ds)) {
    plan = satbench::plan(testing::config_for({descriptor}, datasets), datasets);
  }

  ExecutionContext context(std::shared_ptr<ChatBackend> backend) const {
    ExecutionContext ctx;
    ctx.datasets = &datasets;
    ctx.templates = &templates;
    ctx.backends.emplace(descriptor.label(), std::move(backend));
    return ctx;
  }
};

Fixture scripted_fixture() {
  // 200 articles, half per language; each half scripted to tp 25, fp 5, fn 15, tn 55,
  // which scales to the 50/10/30/110 matrix.
  return Fixture({testing::scripted_dataset("bilingual-en", Language::kEnglish, {25, 5, 15, 55}, 31),
                  testing::scripted_dataset("bilingual-ar", Language::kArabic, {25, 5, 15, 55}, 32)});
}

std::string run_report(const Fixture& fx, const fs::path& store_path,
                       std::shared_ptr<ChatBackend> backend) {
  RunStore store(store_path);
  execute(fx.plan, store, fx.context(std::move(backend)));
  return render_report(report(store.records(), fx.plan.policy), ReportFormat::kMarkdown);
}

// ---------------------------------------------------------------- 3

Outcome scripted_confusion() {
  const Fixture fx = scripted_fixture();
  testing::TempDir dir;
  RunStore store(dir / "runs.jsonl");
  auto backend = std::make_shared<MockBackend>(
      fx.descriptor, testing::scripted_rule(fx.descriptor.analysis_max_new_tokens));
  execute(fx.plan, store, fx.context(backend));
  const ReportTable table = report(store.records(), fx.plan.policy);

  bool pass = table.rows.size() == fx.plan.cells.size();
  ConfusionMatrix per_configuration(fx.plan.policy);
  for (const ReportRow& row : table.rows) {
    if (!row.metrics) return {false, "cell without metrics: " + row.cell.id()};
    pass = pass && round1(row.metrics->accuracy) == 80.0 && round1(row.metrics->precision) == 83.3 &&
           round1(row.metrics->recall) == 62.5 && round1(row.metrics->f1) == 71.4;
    if (row.cell.prompt_language == Language::kEnglish && row.cell.strategy == Strategy::kZeroShot) {
      per_configuration += row.confusion;
    }
  }
  const MetricsReport m = metrics(per_configuration);
  pass = pass && per_configuration == ConfusionMatrix::from_counts(50, 10, 30, 110);
  pass = pass && round1(m.accuracy) == 80.0 && round1(m.precision) == 83.3 &&
         round1(m.recall) == 62.5 && round1(m.f1) == 71.4;
  const std::string md = render_report(table, ReportFormat::kMarkdown);
  const auto rows_with_values = [&] {
    std::size_t n = 0;
    for (std::size_t pos = 0; (pos = md.find("| 80.0 | 83.3 | 62.5 | 71.4 |", pos)) != std::string::npos; ++pos) ++n;
    return n;
  }();
  pass = pass && rows_with_values == fx.plan.cells.size();
  return {pass, fmt::format("200 articles, {} cells; tp={} fp={} fn={} tn={} -> {:.1f}/{:.1f}/{:.1f}/{:.1f}",
                            fx.plan.cells.size(), per_configuration.tp(), per_configuration.fp(),
                            per_configuration.fn(), per_configuration.tn(), round1(m.accuracy),
                            round1(m.precision), round1(m.recall), round1(m.f1))};
}

// ---------------------------------------------------------------- 4

Outcome always_positive() {
  std::mt19937_64 rng(4);
  const Fixture fx({testing::random_dataset(rng, "balanced-en", Language::kEnglish, 120, 120),
                    testing::random_dataset(rng, "skewed-ar", Language::kArabic, 80, 120)});
  testing::TempDir dir;
  RunStore store(dir / "runs.jsonl");
  execute(fx.plan, store, fx.context(std::make_shared<MockBackend>(fx.descriptor, MockBackend::constant("1"))));
  const ReportTable table = report(store.records(), fx.plan.policy);
  bool pass = !table.rows.empty();
  std::string detail;
  for (const ReportRow& row : table.rows) {
    const double prior = row.cell.dataset == "balanced-en" ? 50.0 : 40.0;
    pass = pass && row.metrics && round1(row.metrics->recall) == 100.0 &&
           std::abs(round1(row.metrics->precision) - prior) <= kPriorTolerance;
    if (row.cell.strategy == Strategy::kZeroShot && row.cell.prompt_language == Language::kEnglish) {
      detail += fmt::format("{}: recall {:.1f} precision {:.1f} (prior {:.1f}); ", row.cell.dataset,
                            row.metrics->recall, row.metrics->precision, prior);
    }
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- 5

Outcome parser_corpus() {
  const CliResult r = invoke({"parse-check", "--annotated", "--input", kDataDir + "/parser_corpus.tsv"});
  const std::size_t last = r.out.rfind('\n', r.out.size() - 2);
  const std::string summary = r.out.substr(last == std::string::npos ? 0 : last + 1);
  std::size_t cases = 0;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) cases += line.starts_with("ok\t") || line.starts_with("MISMATCH\t");
  return {r.code == cli::kExitOk && cases >= 20, summary.substr(0, summary.size() - 1)};
}

// ---------------------------------------------------------------- 6

Outcome oracle_equivalence() {
  std::mt19937_64 rng(6);
  int mismatches = 0;
  for (int s = 0; s < kOracleStreams; ++s) {
    const auto policy = static_cast<UnparseablePolicy>(rng() % 3);
    ConfusionMatrix incremental(policy);
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0, unparseable = 0;
    const std::size_t n = rng() % 300;
    for (std::size_t i = 0; i < n; ++i) {
      const Label gold = rng() % 2 ? Label::kSatire : Label::kNonSatire;
      ParsedPrediction p;
      p.label = static_cast<Verdict>(rng() % 3);
      incremental = accumulate(incremental, gold, p, policy);
      const bool satire = gold == Label::kSatire;
      bool positive = p.label == Verdict::kSatire;
      if (p.label == Verdict::kUnparseable) {
        ++unparseable;
        if (policy == UnparseablePolicy::kExclude) continue;
        positive = policy == UnparseablePolicy::kCountAsWrong && !satire;
      }
      tp += positive && satire;
      fp += positive && !satire;
      fn += !positive && satire;
      tn += !positive && !satire;
    }
    if (incremental != ConfusionMatrix::from_counts(tp, fp, fn, tn, unparseable, policy)) ++mismatches;
  }
  int algebra_failures = 0;
  for (int t = 0; t < kOracleStreams; ++t) {
    const auto policy = static_cast<UnparseablePolicy>(rng() % 3);
    auto draw = [&] {
      return ConfusionMatrix::from_counts(rng() % 500, rng() % 500, rng() % 500, rng() % 500,
                                          rng() % 50, policy);
    };
    const ConfusionMatrix a = draw(), b = draw(), c = draw();
    if ((a + b) + c != a + (b + c) || a + b != b + a) ++algebra_failures;
  }
  return {mismatches == 0 && algebra_failures == 0,
          fmt::format("{} streams, {} mismatches; {} triples, {} algebra failures", kOracleStreams,
                      mismatches, kOracleStreams, algebra_failures)};
}

// ---------------------------------------------------------------- 7

Outcome resume_idempotence() {
  const Fixture fx = scripted_fixture();
  testing::TempDir dir;
  auto rule = testing::scripted_rule(fx.descriptor.analysis_max_new_tokens);

  // Uninterrupted reference.
  auto reference_backend = std::make_shared<ReplayBackend>(
      fx.descriptor, std::make_shared<RecordingStore>(dir / "reference-rec.jsonl"),
      std::make_shared<MockBackend>(fx.descriptor, rule));
  const std::string expected = run_report(fx, dir / "reference.jsonl", reference_backend);

  // Interrupted run: stop after kKillAfter records, then a half-written line.
  const fs::path store_path = dir / "interrupted.jsonl";
  const fs::path rec_path = dir / "interrupted-rec.jsonl";
  std::size_t first_pass = 0;
  {
    RunStore store(store_path);
    auto backend = std::make_shared<ReplayBackend>(
        fx.descriptor, std::make_shared<RecordingStore>(rec_path),
        std::make_shared<MockBackend>(fx.descriptor, rule));
    ExecutionContext ctx = fx.context(backend);
    ctx.stop_after = kKillAfter;
    const ExecutionSummary s = execute(fx.plan, store, ctx);
    first_pass = s.completed + s.failed;
    RunRecord torn = store.records().front();
    torn.article_id = "torn-write";
    const std::string line = to_json_line(torn);
    std::ofstream out(store_path, std::ios::app | std::ios::binary);
    out << line.substr(0, line.size() / 3);
  }

  auto upstream = std::make_shared<MockBackend>(fx.descriptor, rule);
  auto resumed_backend = std::make_shared<ReplayBackend>(
      fx.descriptor, std::make_shared<RecordingStore>(rec_path), upstream);
  RunStore resumed(store_path);
  const bool recovered = resumed.recovered_torn_tail();
  const ExecutionSummary second = execute(fx.plan, resumed, fx.context(resumed_backend));
  const std::string actual =
      render_report(report(resumed.records(), fx.plan.policy), ReportFormat::kMarkdown);

  std::set<std::pair<std::string, std::string>> keys;
  bool unique = true;
  for (const RunRecord& r : resumed.records()) unique = unique && keys.emplace(r.cell.id(), r.article_id).second;
  std::size_t expected_records = 0;
  for (const ExperimentCell& cell : fx.plan.cells) {
    for (const Dataset& d : fx.datasets) expected_records += d.name() == cell.dataset ? d.size() : 0;
  }
  const bool pass = first_pass == kKillAfter && recovered && unique &&
                    resumed.size() == expected_records && second.skipped == kKillAfter &&
                    actual == expected;
  return {pass, fmt::format("stopped at {}, torn tail {}, resumed {} more, {} records for {} keys, report {}",
                            first_pass, recovered ? "dropped" : "NOT dropped", second.completed,
                            resumed.size(), expected_records,
                            actual == expected ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- 8

Outcome cot_plumbing() {
  const Fixture fx = scripted_fixture();
  testing::TempDir dir;
  RunStore store(dir / "runs.jsonl");
  execute(fx.plan, store,
          fx.context(std::make_shared<MockBackend>(
              fx.descriptor, testing::scripted_rule(fx.descriptor.analysis_max_new_tokens))));
  std::size_t cot = 0;
  std::size_t violations = 0;
  std::size_t analysis_would_mislead = 0;
  for (const RunRecord& r : store.records()) {
    if (r.cell.strategy != Strategy::kCoT) continue;
    ++cot;
    const bool shape = r.exchanges.size() == 2 && r.exchanges[0].phase == Phase::kAnalysis &&
                       r.exchanges[1].phase == Phase::kPrediction && r.analysis_text &&
                       *r.analysis_text == r.exchanges[0].response;
    if (!shape) {
      ++violations;
      continue;
    }
    const bool embeds = r.exchanges[1].prompt.find(*r.analysis_text) != std::string::npos;
    const ParsedPrediction second = parse_label(r.exchanges[1].response);
    const bool from_second = r.parsed.raw == r.exchanges[1].response && r.parsed.label == second.label;
    if (!embeds || !from_second) ++violations;
    if (parse_label(r.exchanges[0].response).label != second.label) ++analysis_would_mislead;
  }
  return {cot > 0 && violations == 0 && analysis_would_mislead > 0,
          fmt::format("{} CoT records, {} violations, {} where the analysis text alone parses differently",
                      cot, violations, analysis_would_mislead)};
}

}  // namespace
}  // namespace satbench::acceptance

int main() {
  using namespace satbench::acceptance;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "Dataset statistics", dataset_statistics},
      {2, "Published-table consistency", published_table},
      {3, "Scripted confusion matrix end to end", scripted_confusion},
      {4, "Always-positive backend", always_positive},
      {5, "Parser corpus agreement", parser_corpus},
      {6, "Accumulation oracle equivalence", oracle_equivalence},
      {7, "Resume idempotence", resume_idempotence},
      {8, "CoT plumbing", cot_plumbing},
  };
  int unexpected = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool known = kKnownUnattainable.contains(c.id);
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " ("
              << fmt::format("{:.1f}s", seconds) << "): " << outcome.detail;
    if (!outcome.pass && known) std::cout << " [known: source data inconsistent]";
    std::cout << std::endl;
    if (!outcome.pass && !known) ++unexpected;
    if (outcome.pass && known) {
      std::cout << "NOTE [" << c.id << "] passes but is listed as unattainable" << std::endl;
      ++unexpected;
    }
  }
  return unexpected;
}
