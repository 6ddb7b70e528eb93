#include "satbench/orchestrator.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "satbench/error.hpp"

namespace satbench {

CellKey ExperimentCell::key() const {
  return CellKey{backend.label(), backend.model_name, prompt_language, dataset, strategy};
}

namespace {

const Dataset* find_dataset(const std::vector<Dataset>& datasets, const std::string& name) {
  for (const Dataset& d : datasets) {
    if (d.name() == name) return &d;
  }
  return nullptr;
}

template <typename T, typename NameOf>
std::vector<const T*> select(const std::vector<T>& items, const std::vector<std::string>& wanted,
                             NameOf name_of, const std::string& what) {
  std::vector<const T*> out;
  if (wanted.empty()) {
    for (const T& item : items) out.push_back(&item);
    return out;
  }
  for (const std::string& name : wanted) {
    auto it = std::find_if(items.begin(), items.end(),
                           [&](const T& item) { return name_of(item) == name; });
    if (it == items.end()) throw ConfigError("unknown " + what + " '" + name + "'");
    out.push_back(&*it);
  }
  return out;
}

}  // namespace

ExperimentPlan plan(const RunConfig& config, const std::vector<Dataset>& datasets) {
  const auto backends = select(config.backends, config.select_backends,
                               [](const BackendConfig& b) { return b.descriptor.label(); },
                               "backend");
  const auto dataset_configs = select(config.datasets, config.select_datasets,
                                      [](const DatasetConfig& d) { return d.name; }, "dataset");
  if (backends.empty()) throw ConfigError("plan has no backends");
  if (dataset_configs.empty()) throw ConfigError("plan has no datasets");
  if (config.prompt_languages.empty()) throw ConfigError("plan has no prompt languages");
  if (config.strategies.empty()) throw ConfigError("plan has no strategies");

  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (const DatasetConfig* d : dataset_configs) {
    const Dataset* loaded = find_dataset(datasets, d->name);
    if (!loaded) throw ConfigError("dataset '" + d->name + "' is configured but not loaded");
    smallest = std::min(smallest, loaded->size());
  }
  if (config.sample_size) {
    if (*config.sample_size == 0) throw ConfigError("sample_size must be positive");
    if (*config.sample_size > smallest) {
      throw ConfigError("sample_size " + std::to_string(*config.sample_size) +
                        " exceeds the smallest selected dataset (" + std::to_string(smallest) +
                        " articles)");
    }
  }

  ExperimentPlan out;
  out.sample_size = config.sample_size;
  out.seed = config.seed;
  out.policy = config.policy;
  std::set<std::string> ids;
  for (const BackendConfig* b : backends) {
    b->descriptor.validate();
    for (Language language : config.prompt_languages) {
      for (const DatasetConfig* d : dataset_configs) {
        for (Strategy strategy : config.strategies) {
          ExperimentCell cell{b->descriptor, language, d->name, strategy, out.cells.size()};
          if (!ids.insert(cell.id()).second) throw ConfigError("duplicate cell " + cell.id());
          out.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return out;
}

Dataset articles_for(const ExperimentPlan& plan, const Dataset& dataset) {
  if (!plan.sample_size) return dataset;
  return sample(dataset, *plan.sample_size, plan.seed);
}

RunRecord run_article(const ExperimentCell& cell, const Article& article,
                      const TemplateSet& templates, ChatBackend& backend,
                      bool instruction_as_system, std::size_t* backend_calls) {
  RunRecord record;
  record.cell = cell.key();
  record.cell_index = cell.index;
  record.article_id = article.id;
  record.article_language = article.language;
  record.gold = article.gold;

  auto exchange = [&](const RenderedPrompt& prompt, Phase phase) -> const Exchange& {
    ChatRequest request(cell.backend.model_name, to_messages(prompt, instruction_as_system),
                        cell.backend.decoding_for(phase));
    if (backend_calls) ++*backend_calls;
    ChatResponse response = backend.complete(request);
    record.exchanges.push_back(Exchange{phase, prompt.text, std::move(response.text),
                                        response.truncated_input, response.latency_ms,
                                        response.attempt_count});
    const Exchange& done = record.exchanges.back();
    record.truncated_input = record.truncated_input || done.truncated_input;
    record.latency_ms += done.latency_ms;
    return done;
  };

  try {
    if (cell.strategy == Strategy::kZeroShot) {
      const PromptTemplate& tmpl =
          templates.get(Strategy::kZeroShot, Phase::kSingle, cell.prompt_language);
      const Exchange& answer = exchange(render(tmpl, article), Phase::kSingle);
      record.parsed = parse_label(answer.response);
    } else {
      const PromptTemplate& analysis_tmpl =
          templates.get(Strategy::kCoT, Phase::kAnalysis, cell.prompt_language);
      const PromptTemplate& prediction_tmpl =
          templates.get(Strategy::kCoT, Phase::kPrediction, cell.prompt_language);
      std::string analysis = exchange(render(analysis_tmpl, article), Phase::kAnalysis).response;
      record.analysis_text = analysis;
      const Exchange& answer =
          exchange(render_prediction(prediction_tmpl, article, analysis), Phase::kPrediction);
      record.parsed = parse_label(answer.response);
    }
  } catch (const BackendError& e) {
    record.failed = true;
    record.error = e.what();
    record.parsed = ParsedPrediction{};
  } catch (const PromptError& e) {
    record.failed = true;
    record.error = e.what();
    record.parsed = ParsedPrediction{};
  }
  return record;
}

namespace {

struct SharedProgress {
  std::atomic<std::size_t> completed{0};
  std::atomic<std::size_t> failed{0};
  std::atomic<std::size_t> skipped{0};
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> claimed{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> stopped_early{false};
  std::mutex error_mutex;
  std::exception_ptr error;

  void fail(std::exception_ptr e) {
    std::lock_guard lock(error_mutex);
    if (!error) error = std::move(e);
    stop = true;
  }
};

void run_cell(const ExperimentCell& cell, const Dataset& articles, RunStore& store,
              const ExecutionContext& context, ChatBackend& backend, SharedProgress& progress) {
  const std::string cell_id = cell.id();
  std::vector<const Article*> pending;
  for (const Article& article : articles.articles()) {
    if (store.contains(cell_id, article.id)) {
      ++progress.skipped;
    } else {
      pending.push_back(&article);
    }
  }
  if (pending.empty()) return;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    try {
      while (!progress.stop) {
        if (context.stop_after && progress.claimed.fetch_add(1) >= *context.stop_after) {
          progress.stopped_early = true;
          return;
        }
        const std::size_t i = next.fetch_add(1);
        if (i >= pending.size()) return;
        std::size_t calls = 0;
        RunRecord record = run_article(cell, *pending[i], *context.templates, backend,
                                       context.instruction_as_system, &calls);
        progress.calls += calls;
        store.append(record);
        ++(record.failed ? progress.failed : progress.completed);
        if (context.on_record) context.on_record(record);
      }
    } catch (...) {
      progress.fail(std::current_exception());
    }
  };

  const std::size_t workers = std::min(cell.backend.max_inflight, pending.size());
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
}

}  // namespace

ExecutionSummary execute(const ExperimentPlan& plan, RunStore& store,
                         const ExecutionContext& context) {
  if (!context.datasets || !context.templates) {
    throw ConfigError("execution context needs datasets and templates");
  }

  // Cells on the same dataset share one (possibly sampled) article list.
  std::map<std::string, Dataset> article_sets;
  std::vector<std::pair<const ExperimentCell*, ChatBackend*>> jobs;
  for (const ExperimentCell& cell : plan.cells) {
    const Dataset* dataset = find_dataset(*context.datasets, cell.dataset);
    if (!dataset) throw ConfigError("dataset '" + cell.dataset + "' not loaded");
    if (!article_sets.contains(cell.dataset)) {
      article_sets.emplace(cell.dataset, articles_for(plan, *dataset));
    }
    auto it = context.backends.find(cell.backend.label());
    if (it == context.backends.end() || !it->second) {
      throw ConfigError("no backend instance for '" + cell.backend.label() + "'");
    }
    jobs.emplace_back(&cell, it->second.get());
  }

  SharedProgress progress;
  auto run_job = [&](const ExperimentCell& cell, ChatBackend& backend) {
    try {
      run_cell(cell, article_sets.at(cell.dataset), store, context, backend, progress);
    } catch (...) {
      progress.fail(std::current_exception());
    }
  };

  if (context.parallel_cells) {
    std::vector<std::thread> threads;
    threads.reserve(jobs.size());
    for (auto& [cell, backend] : jobs) threads.emplace_back(run_job, std::cref(*cell), std::ref(*backend));
    for (std::thread& t : threads) t.join();
  } else {
    for (auto& [cell, backend] : jobs) {
      if (progress.stop || progress.stopped_early) break;
      run_job(*cell, *backend);
    }
  }
  if (progress.error) std::rethrow_exception(progress.error);

  ExecutionSummary summary;
  summary.completed = progress.completed;
  summary.failed = progress.failed;
  summary.skipped = progress.skipped;
  summary.backend_calls = progress.calls;
  summary.stopped_early = progress.stopped_early;
  return summary;
}

}  // namespace satbench
