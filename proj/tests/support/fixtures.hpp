#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "satbench/backend.hpp"
#include "satbench/config.hpp"
#include "satbench/corpus.hpp"

namespace satbench::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Text of exactly `words` whitespace-separated words with mixed separators.
std::string random_text(std::mt19937_64& rng, Language language, std::size_t words);

Dataset random_dataset(std::mt19937_64& rng, const std::string& name, Language language,
                       std::size_t n_satire, std::size_t n_nonsatire, std::size_t max_words = 40);

/// Corpus shape used to replicate published dataset statistics.
struct CorpusShape {
  std::string name;
  Language language = Language::kEnglish;
  std::size_t n_satire = 0;
  std::size_t n_nonsatire = 0;
  double avg_words = 0.0;
};

/// Writes canonical JSONL with the given label counts; article lengths are
/// drawn around `avg_words`. Returns the exact mean word count written.
double write_shaped_corpus(const std::filesystem::path& path, const CorpusShape& shape,
                           std::uint64_t seed);

/// Articles carry "script=<digit>" naming the verdict the scripted backend
/// returns for them. Rows are built so that a 1 verdict on a satire article
/// is a true positive, and so on.
struct ScriptedCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};
Dataset scripted_dataset(const std::string& name, Language language, const ScriptedCounts& counts,
                         std::uint64_t seed);

/// Text returned for analysis calls by scripted_rule(). Its leading digits
/// would mislead a parser reading the analysis instead of the prediction.
inline constexpr std::string_view kScriptedAnalysisPrefix =
    "Step 1 of 0 reasoning: reviewing tone. ANALYSIS-BODY ";

/// Zero-shot calls answer with the article's script digit. Analysis calls
/// (recognised by their larger token budget) return a reasoning text that
/// carries the digit forward; prediction calls read it back from the analysis.
MockBackend::Rule scripted_rule(std::size_t analysis_max_new_tokens);

BackendDescriptor mock_descriptor(const std::string& name);

/// RunConfig naming the given datasets and one mock backend per descriptor.
RunConfig config_for(const std::vector<BackendDescriptor>& backends,
                     const std::vector<Dataset>& datasets);

}  // namespace satbench::testing
