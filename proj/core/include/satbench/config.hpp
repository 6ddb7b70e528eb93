#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "satbench/backend.hpp"
#include "satbench/corpus.hpp"
#include "satbench/evaluator.hpp"
#include "satbench/prompt.hpp"

namespace satbench {

struct MockSpec {
  /// "constant" or "marker".
  std::string rule = "constant";
  std::string response = "1";
  std::string marker;
  std::string hit = "1";
  std::string miss = "0";
};

struct BackendConfig {
  BackendDescriptor descriptor;
  MockSpec mock;
  /// Recording store. For kReplay this is the strict replay source; for the
  /// other kinds responses are replayed on hit and recorded on miss.
  std::optional<std::filesystem::path> recordings;
  int max_attempts = 5;
  int timeout_seconds = 120;
};

struct DatasetConfig {
  std::string name;
  Language language = Language::kEnglish;
  /// Either a single corpus file...
  std::optional<std::filesystem::path> path;
  /// ...or a satire-only and a non-satire-only file merged on load.
  std::optional<std::filesystem::path> satire_path;
  std::optional<std::filesystem::path> nonsatire_path;
  FileFormat format = FileFormat::kJsonl;
  SchemaMap schema;
};

struct RunConfig {
  std::vector<BackendConfig> backends;
  std::vector<DatasetConfig> datasets;
  std::vector<Language> prompt_languages{Language::kEnglish, Language::kArabic};
  std::vector<Strategy> strategies{Strategy::kZeroShot, Strategy::kCoT};
  /// Restrict the matrix to these backend / dataset names (empty = all).
  std::vector<std::string> select_backends;
  std::vector<std::string> select_datasets;
  std::optional<std::size_t> sample_size;
  std::uint64_t seed = 0;
  UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong;
  std::optional<std::filesystem::path> prompts_dir;
  bool instruction_as_system = false;
  bool parallel_cells = false;
};

/// Parses the JSON run configuration; relative paths resolve against `base_dir`.
/// Throws ConfigError.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Instantiates the backend stack described by `config`, including the
/// recording layer and the HTTP transport. Reads the API key from the
/// environment for HTTP backends.
std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config);

/// Loads every configured dataset. Row-level load errors are appended to
/// `warnings` when given.
std::vector<Dataset> load_datasets(const RunConfig& config,
                                   std::vector<std::string>* warnings = nullptr);

}  // namespace satbench
