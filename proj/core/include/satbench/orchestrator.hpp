#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "satbench/backend.hpp"
#include "satbench/config.hpp"
#include "satbench/corpus.hpp"
#include "satbench/evaluator.hpp"
#include "satbench/prompt.hpp"
#include "satbench/run_store.hpp"

namespace satbench {

struct ExperimentCell {
  BackendDescriptor backend;
  Language prompt_language = Language::kEnglish;
  std::string dataset;
  Strategy strategy = Strategy::kZeroShot;
  std::size_t index = 0;

  CellKey key() const;
  std::string id() const { return key().id(); }
};

struct ExperimentPlan {
  std::vector<ExperimentCell> cells;
  std::optional<std::size_t> sample_size;
  std::uint64_t seed = 0;
  UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong;
};

/// Cartesian product backends x prompt languages x datasets x strategies in
/// that nesting order. Throws ConfigError on unknown names, duplicate cells,
/// or a sample size larger than the smallest selected dataset.
ExperimentPlan plan(const RunConfig& config, const std::vector<Dataset>& datasets);

struct ExecutionContext {
  const std::vector<Dataset>* datasets = nullptr;
  const TemplateSet* templates = nullptr;
  /// Keyed by BackendDescriptor::label().
  std::map<std::string, std::shared_ptr<ChatBackend>> backends;
  bool instruction_as_system = false;
  bool parallel_cells = false;
  /// Stop scheduling once this many new records were written (crash drills).
  std::optional<std::size_t> stop_after;
  std::function<void(const RunRecord&)> on_record;
};

struct ExecutionSummary {
  std::size_t completed = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  std::size_t backend_calls = 0;
  bool stopped_early = false;

  bool all_skipped() const noexcept { return completed == 0 && failed == 0 && skipped > 0; }
};

/// Runs every (cell, article) pair not yet in `store`. Backend failures become
/// failed records; store failures propagate.
ExecutionSummary execute(const ExperimentPlan& plan, RunStore& store,
                         const ExecutionContext& context);

/// The articles a cell covers: the whole dataset or its seeded sample.
Dataset articles_for(const ExperimentPlan& plan, const Dataset& dataset);

/// Runs one article through one cell. Exposed for tests.
RunRecord run_article(const ExperimentCell& cell, const Article& article,
                      const TemplateSet& templates, ChatBackend& backend,
                      bool instruction_as_system, std::size_t* backend_calls = nullptr);

}  // namespace satbench
