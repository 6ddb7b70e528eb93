#include "satbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "satbench/csv.hpp"
#include "satbench/error.hpp"
#include "satbench/unicode.hpp"

namespace satbench {

using nlohmann::json;

std::string_view to_string(Language language) {
  return language == Language::kEnglish ? "English" : "Arabic";
}

std::string_view language_code(Language language) {
  return language == Language::kEnglish ? "en" : "ar";
}

std::optional<Language> parse_language(std::string_view text) {
  const std::string lower = unicode::ascii_lower(unicode::trim(text));
  if (lower == "en" || lower == "english") return Language::kEnglish;
  if (lower == "ar" || lower == "arabic") return Language::kArabic;
  return std::nullopt;
}

std::string_view to_string(Label label) {
  return label == Label::kSatire ? "satire" : "non-satire";
}

std::optional<Label> parse_gold_label(std::string_view text) {
  const std::string lower = unicode::ascii_lower(unicode::trim(text));
  if (lower == "1" || lower == "satire") return Label::kSatire;
  if (lower == "0" || lower == "non-satire") return Label::kNonSatire;
  return std::nullopt;
}

std::optional<FileFormat> parse_file_format(std::string_view text) {
  const std::string lower = unicode::ascii_lower(text);
  if (lower == "jsonl") return FileFormat::kJsonl;
  if (lower == "csv") return FileFormat::kCsv;
  return std::nullopt;
}

Dataset::Dataset(std::string name, Language language, std::vector<Article> articles)
    : name_(std::move(name)), language_(language), articles_(std::move(articles)) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(articles_.size());
  for (const Article& article : articles_) {
    if (article.text.empty()) {
      throw CorpusError("dataset " + name_ + ": article " + article.id + " has empty text");
    }
    if (article.language != language_) {
      throw CorpusError("dataset " + name_ + ": article " + article.id + " is " +
                        std::string(to_string(article.language)) + ", dataset is " +
                        std::string(to_string(language_)));
    }
    if (!ids.insert(article.id).second) {
      throw CorpusError("dataset " + name_ + ": duplicate article id " + article.id);
    }
  }
}

long DatasetStats::avg_words_rounded() const { return std::lround(avg_words); }

SchemaMap SchemaMap::parse(std::string_view spec) {
  SchemaMap map;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    const std::string_view item = spec.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
      throw CorpusError("bad schema mapping '" + std::string(item) + "', expected field=COLUMN");
    }
    const std::string field(item.substr(0, eq));
    std::string column(item.substr(eq + 1));
    if (field == "text") {
      map.text = std::move(column);
    } else if (field == "label") {
      map.label = std::move(column);
    } else if (field == "id") {
      map.id = std::move(column);
    } else if (field == "language") {
      map.language = std::move(column);
    } else if (field == "source") {
      map.source = std::move(column);
    } else {
      throw CorpusError("unknown schema field '" + field + "'");
    }
  }
  return map;
}

namespace {

// A source row reduced to optional string fields.
struct RawRow {
  std::size_t line = 0;
  std::optional<std::string> id;
  std::optional<std::string> text;
  std::optional<std::string> label;
  std::optional<std::string> language;
  std::optional<std::string> source;
};

std::optional<std::string> json_scalar(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number_unsigned()) return std::to_string(value.get<unsigned long long>());
  if (value.is_boolean()) return value.get<bool>() ? "1" : "0";
  return std::nullopt;
}

class RowSink {
 public:
  RowSink(const LoadOptions& options, std::string name)
      : options_(options), name_(std::move(name)), language_(options.language) {}

  void add(const RawRow& row) {
    ++rows_read_;
    if (auto message = accept(row)) fail(row.line, *message);
  }

  void fail(std::size_t line, std::string message) {
    if (options_.strict) {
      throw CorpusError(name_ + ": row at line " + std::to_string(line) + ": " + message);
    }
    errors_.push_back(RowError{line, std::move(message)});
  }

  void count_row() { ++rows_read_; }

  LoadResult finish() && {
    if (articles_.empty()) {
      if (errors_.empty()) throw CorpusError(name_ + ": empty dataset");
      throw CorpusError(name_ + ": empty dataset; all " + std::to_string(errors_.size()) +
                        " rows rejected, first at line " + std::to_string(errors_.front().line) +
                        ": " + errors_.front().message);
    }
    if (!language_) {
      throw CorpusError(name_ + ": dataset language unknown; declare it explicitly");
    }
    return LoadResult{Dataset(name_, *language_, std::move(articles_)), std::move(errors_),
                      rows_read_};
  }

 private:
  std::optional<std::string> accept(const RawRow& row) {
    if (!row.text) return "missing text field '" + options_.schema.text + "'";
    std::string text = unicode::trim(unicode::nfc(*row.text));
    if (text.empty()) return std::string("empty text");
    if (!row.label) return "missing label field '" + options_.schema.label + "'";
    const std::optional<Label> label = parse_gold_label(*row.label);
    if (!label) return "unrecognized label '" + *row.label + "'";

    std::optional<Language> row_language;
    if (row.language && !unicode::trim(*row.language).empty()) {
      row_language = parse_language(*row.language);
      if (!row_language) return "unrecognized language '" + *row.language + "'";
    }
    if (!language_) {
      if (!row_language) {
        return std::string("no language on row and none declared for the dataset");
      }
      language_ = row_language;
    }
    if (row_language && *row_language != *language_) {
      return "language " + std::string(to_string(*row_language)) + " differs from dataset language " +
             std::string(to_string(*language_));
    }

    std::string id;
    if (row.id && !unicode::trim(*row.id).empty()) {
      id = unicode::trim(unicode::nfc(*row.id));
    } else {
      id = name_ + "-" + std::to_string(articles_.size() + 1);
    }
    if (!ids_.insert(id).second) return "duplicate id '" + id + "'";

    Article article;
    article.id = std::move(id);
    article.text = std::move(text);
    article.language = *language_;
    article.gold = *label;
    article.source = row.source && !row.source->empty() ? *row.source : name_;
    articles_.push_back(std::move(article));
    return std::nullopt;
  }

  const LoadOptions& options_;
  std::string name_;
  std::optional<Language> language_;
  std::vector<Article> articles_;
  std::vector<RowError> errors_;
  std::unordered_set<std::string> ids_;
  std::size_t rows_read_ = 0;
};

void load_jsonl(std::istream& in, const SchemaMap& schema, RowSink& sink) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (unicode::trim(line).empty()) continue;
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      sink.count_row();
      sink.fail(line_number, std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!object.is_object()) {
      sink.count_row();
      sink.fail(line_number, "expected a JSON object");
      continue;
    }
    auto field = [&](const std::string& key) -> std::optional<std::string> {
      auto it = object.find(key);
      if (it == object.end() || it->is_null()) return std::nullopt;
      return json_scalar(*it);
    };
    RawRow row;
    row.line = line_number;
    row.text = field(schema.text);
    row.label = field(schema.label);
    row.id = field(schema.id);
    row.language = field(schema.language);
    row.source = field(schema.source);
    sink.add(row);
  }
}

void load_csv(std::istream& in, const SchemaMap& schema, RowSink& sink,
              const std::string& name) {
  csv::Reader reader(in);
  csv::Record header;
  if (!reader.next(header)) throw CorpusError(name + ": empty dataset");
  if (!header.fields.empty() && header.fields.front().starts_with("\xEF\xBB\xBF")) {
    header.fields.front().erase(0, 3);
  }
  auto column_of = [&](const std::string& column) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
      if (header.fields[i] == column) return i;
    }
    return std::nullopt;
  };
  const auto text_col = column_of(schema.text);
  const auto label_col = column_of(schema.label);
  if (!text_col) throw CorpusError(name + ": CSV has no text column '" + schema.text + "'");
  if (!label_col) throw CorpusError(name + ": CSV has no label column '" + schema.label + "'");
  const auto id_col = column_of(schema.id);
  const auto language_col = column_of(schema.language);
  const auto source_col = column_of(schema.source);

  csv::Record record;
  while (reader.next(record)) {
    if (record.fields.size() == 1 && record.fields.front().empty()) continue;
    auto cell = [&](std::optional<std::size_t> col) -> std::optional<std::string> {
      if (!col || *col >= record.fields.size()) return std::nullopt;
      return record.fields[*col];
    };
    RawRow row;
    row.line = record.line;
    row.text = cell(text_col);
    row.label = cell(label_col);
    row.id = cell(id_col);
    row.language = cell(language_col);
    row.source = cell(source_col);
    if (record.fields.size() != header.fields.size()) {
      sink.count_row();
      sink.fail(record.line, "expected " + std::to_string(header.fields.size()) +
                                 " columns, found " + std::to_string(record.fields.size()));
      continue;
    }
    sink.add(row);
  }
}

// Unbiased draw in [0, bound) from a fully specified engine, so samples are
// identical across standard library implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_below(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

double percent_one_decimal(std::size_t part, std::size_t whole) {
  return std::round(1000.0 * static_cast<double>(part) / static_cast<double>(whole)) / 10.0;
}

}  // namespace

LoadResult load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open dataset file " + path.string());
  const std::string name = options.name.empty() ? path.stem().string() : options.name;
  RowSink sink(options, name);
  if (options.format == FileFormat::kJsonl) {
    load_jsonl(in, options.schema, sink);
  } else {
    load_csv(in, options.schema, sink, name);
  }
  return std::move(sink).finish();
}

Dataset merge_balanced(const Dataset& satire_only, const Dataset& nonsatire_only,
                       std::string name) {
  if (satire_only.language() != nonsatire_only.language()) {
    throw CorpusError("cannot merge " + satire_only.name() + " (" +
                      std::string(to_string(satire_only.language())) + ") with " +
                      nonsatire_only.name() + " (" +
                      std::string(to_string(nonsatire_only.language())) + ")");
  }
  std::vector<Article> merged;
  merged.reserve(satire_only.size() + nonsatire_only.size());
  auto take = [&](const Dataset& from, Label expected) {
    for (const Article& article : from.articles()) {
      if (article.gold != expected) {
        throw CorpusError("dataset " + from.name() + " must contain only " +
                          std::string(to_string(expected)) + " articles; " + article.id +
                          " is " + std::string(to_string(article.gold)));
      }
      Article copy = article;
      copy.id = from.name() + "/" + article.id;
      merged.push_back(std::move(copy));
    }
  };
  take(satire_only, Label::kSatire);
  take(nonsatire_only, Label::kNonSatire);
  return Dataset(std::move(name), satire_only.language(), std::move(merged));
}

std::size_t word_count(std::string_view text) {
  const std::string normalized = unicode::nfc(text);
  const std::string_view s = normalized;
  std::size_t words = 0;
  bool in_word = false;
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t c = unicode::next_code_point(s, i);
    const bool space = unicode::is_white_space(c);
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

DatasetStats compute_stats(const Dataset& dataset) {
  if (dataset.empty()) throw CorpusError("cannot compute statistics of empty dataset " + dataset.name());
  DatasetStats stats;
  stats.name = dataset.name();
  stats.language = dataset.language();
  stats.n_entries = dataset.size();
  std::size_t total_words = 0;
  for (const Article& article : dataset.articles()) {
    total_words += word_count(article.text);
    if (article.gold == Label::kSatire) {
      ++stats.n_satire;
    } else {
      ++stats.n_nonsatire;
    }
  }
  stats.avg_words = static_cast<double>(total_words) / static_cast<double>(stats.n_entries);
  stats.pct_satire = percent_one_decimal(stats.n_satire, stats.n_entries);
  stats.pct_nonsatire = percent_one_decimal(stats.n_nonsatire, stats.n_entries);
  return stats;
}

Dataset sample(const Dataset& dataset, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw CorpusError("sample size must be positive");
  if (n > dataset.size()) {
    throw CorpusError("sample size " + std::to_string(n) + " exceeds dataset " + dataset.name() +
                      " of " + std::to_string(dataset.size()) + " articles");
  }
  std::vector<std::size_t> satire;
  std::vector<std::size_t> nonsatire;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (dataset.articles()[i].gold == Label::kSatire ? satire : nonsatire).push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  if (satire.empty() || nonsatire.empty()) {
    chosen.resize(dataset.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    seeded_shuffle(chosen, rng);
    chosen.resize(n);
  } else {
    // Satire quota rounds half up; the non-satire quota takes the remainder.
    const std::size_t total = dataset.size();
    std::size_t satire_quota = (2 * n * satire.size() + total) / (2 * total);
    satire_quota = std::min(satire_quota, satire.size());
    std::size_t nonsatire_quota = n - satire_quota;
    if (nonsatire_quota > nonsatire.size()) {
      nonsatire_quota = nonsatire.size();
      satire_quota = n - nonsatire_quota;
    }
    seeded_shuffle(satire, rng);
    seeded_shuffle(nonsatire, rng);
    chosen.assign(satire.begin(), satire.begin() + static_cast<std::ptrdiff_t>(satire_quota));
    chosen.insert(chosen.end(), nonsatire.begin(),
                  nonsatire.begin() + static_cast<std::ptrdiff_t>(nonsatire_quota));
    seeded_shuffle(chosen, rng);
  }

  std::vector<Article> articles;
  articles.reserve(chosen.size());
  for (std::size_t index : chosen) articles.push_back(dataset.articles()[index]);
  return Dataset(dataset.name(), dataset.language(), std::move(articles));
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const Article& article : dataset.articles()) {
    const json line = {{"id", article.id},
                       {"text", article.text},
                       {"language", language_code(article.language)},
                       {"label", article.gold == Label::kSatire ? 1 : 0},
                       {"source", article.source}};
    out << line.dump() << '\n';
  }
}

}  // namespace satbench
