#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace satbench {

enum class Language { kEnglish, kArabic };
enum class Label { kSatire, kNonSatire };

std::string_view to_string(Language language);
/// "en" / "ar".
std::string_view language_code(Language language);
/// Accepts en/english/ar/arabic, case-insensitive.
std::optional<Language> parse_language(std::string_view text);

std::string_view to_string(Label label);
/// Accepts 1/0 and satire/non-satire, case-insensitive, surrounding blanks ignored.
std::optional<Label> parse_gold_label(std::string_view text);

struct Article {
  std::string id;
  std::string text;
  Language language = Language::kEnglish;
  Label gold = Label::kSatire;
  std::string source;
};

/// An immutable, validated collection of articles in one language.
class Dataset {
 public:
  /// Throws CorpusError on duplicate ids, language mismatches or empty text.
  Dataset(std::string name, Language language, std::vector<Article> articles);

  const std::string& name() const noexcept { return name_; }
  Language language() const noexcept { return language_; }
  const std::vector<Article>& articles() const noexcept { return articles_; }
  std::size_t size() const noexcept { return articles_.size(); }
  bool empty() const noexcept { return articles_.empty(); }

 private:
  std::string name_;
  Language language_;
  std::vector<Article> articles_;
};

struct DatasetStats {
  std::string name;
  Language language = Language::kEnglish;
  std::size_t n_entries = 0;
  double avg_words = 0.0;
  std::size_t n_satire = 0;
  std::size_t n_nonsatire = 0;
  double pct_satire = 0.0;     // one decimal
  double pct_nonsatire = 0.0;  // one decimal

  long avg_words_rounded() const;
};

enum class FileFormat { kJsonl, kCsv };

std::optional<FileFormat> parse_file_format(std::string_view text);

/// Maps the canonical article fields onto source keys or CSV columns.
struct SchemaMap {
  std::string text = "text";
  std::string label = "label";
  std::string id = "id";
  std::string language = "language";
  std::string source = "source";

  /// Parses "text=COL,label=COL[,id=COL][,language=COL][,source=COL]" on top
  /// of the defaults. Throws CorpusError on unknown fields.
  static SchemaMap parse(std::string_view spec);
};

struct LoadOptions {
  FileFormat format = FileFormat::kJsonl;
  SchemaMap schema;
  /// Defaults to the file stem.
  std::string name;
  /// Declared corpus language; when absent it is taken from the first row.
  std::optional<Language> language;
  /// Throw on the first bad row instead of collecting row errors.
  bool strict = false;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  Dataset dataset;
  std::vector<RowError> errors;
  std::size_t rows_read = 0;
};

/// Loads a corpus file. Rows that cannot be mapped are reported in
/// `errors` (or thrown in strict mode); a missing file, an undeterminable
/// language, or an empty result throws CorpusError.
LoadResult load_dataset(const std::filesystem::path& path, const LoadOptions& options);

/// Union of a satire-only and a non-satire-only corpus. Ids are re-prefixed
/// with the origin dataset name.
Dataset merge_balanced(const Dataset& satire_only, const Dataset& nonsatire_only,
                       std::string name);

DatasetStats compute_stats(const Dataset& dataset);

/// Maximal runs of non-White_Space code points after NFC normalization.
std::size_t word_count(std::string_view text);

/// Deterministic, label-stratified subset of `n` articles.
Dataset sample(const Dataset& dataset, std::size_t n, std::uint64_t seed);

/// Writes the canonical JSONL schema {id, text, language, label, source}.
void write_jsonl(const Dataset& dataset, std::ostream& out);

}  // namespace satbench
