#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace satbench::testing {
namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 8> kEnglishWords = {
    "news", "the", "minister", "said", "cat", "vote", "a", "market"};
constexpr std::array<std::string_view, 8> kArabicWords = {
    "قال", "الوزير", "في", "السوق", "خبر", "إلى", "أن", "الحكومة"};
// Separators mix ASCII and non-ASCII White_Space.
constexpr std::array<std::string_view, 6> kSeparators = {" ", " ", " ", "\n", "  \t", " "};

std::string_view pick_word(std::mt19937_64& rng, Language language) {
  const auto& pool = language == Language::kEnglish ? kEnglishWords : kArabicWords;
  return pool[rng() % pool.size()];
}

}  // namespace

TempDir::TempDir() {
  static std::mt19937_64 rng{std::random_device{}()};
  for (int attempt = 0; attempt < 100; ++attempt) {
    fs::path candidate = fs::temp_directory_path() / ("satbench-test-" + std::to_string(rng()));
    if (fs::create_directory(candidate)) {
      path_ = std::move(candidate);
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ignored;
  fs::remove_all(path_, ignored);
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string random_text(std::mt19937_64& rng, Language language, std::size_t words) {
  std::string text;
  if (rng() % 4 == 0) text += kSeparators[rng() % kSeparators.size()];
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) text += kSeparators[rng() % kSeparators.size()];
    text += pick_word(rng, language);
    if (rng() % 7 == 0) text += ',';
  }
  return text;
}

Dataset random_dataset(std::mt19937_64& rng, const std::string& name, Language language,
                       std::size_t n_satire, std::size_t n_nonsatire, std::size_t max_words) {
  std::vector<Label> labels(n_satire, Label::kSatire);
  labels.insert(labels.end(), n_nonsatire, Label::kNonSatire);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<Article> articles;
  articles.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Article a;
    a.id = name + "-" + std::to_string(i);
    a.text = random_text(rng, language, 1 + rng() % max_words);
    a.language = language;
    a.gold = labels[i];
    a.source = name;
    articles.push_back(std::move(a));
  }
  return Dataset(name, language, std::move(articles));
}

double write_shaped_corpus(const fs::path& path, const CorpusShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Label> labels(shape.n_satire, Label::kSatire);
  labels.insert(labels.end(), shape.n_nonsatire, Label::kNonSatire);
  std::shuffle(labels.begin(), labels.end(), rng);

  const std::string word = shape.language == Language::kEnglish ? "w" : "ب";
  const auto low = static_cast<std::size_t>(shape.avg_words * 0.5);
  const auto span = static_cast<std::size_t>(shape.avg_words) + 1;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  std::size_t total_words = 0;
  std::string text;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t words = low + rng() % span;
    total_words += words;
    text.clear();
    text.reserve(words * (word.size() + 1));
    for (std::size_t w = 0; w < words; ++w) {
      if (w > 0) text += (w % 97 == 0) ? '\n' : ' ';
      text += word;
    }
    nlohmann::json row = {{"id", shape.name + "-" + std::to_string(i)},
                          {"text", text},
                          {"label", labels[i] == Label::kSatire ? 1 : 0},
                          {"language", std::string(language_code(shape.language))}};
    out << row.dump() << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return labels.empty() ? 0.0 : static_cast<double>(total_words) / labels.size();
}

Dataset scripted_dataset(const std::string& name, Language language, const ScriptedCounts& counts,
                         std::uint64_t seed) {
  struct Row {
    Label gold;
    char digit;
  };
  std::vector<Row> rows;
  rows.insert(rows.end(), counts.tp, Row{Label::kSatire, '1'});
  rows.insert(rows.end(), counts.fp, Row{Label::kNonSatire, '1'});
  rows.insert(rows.end(), counts.fn, Row{Label::kSatire, '0'});
  rows.insert(rows.end(), counts.tn, Row{Label::kNonSatire, '0'});
  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::vector<Article> articles;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Article a;
    a.id = name + "-" + std::to_string(i);
    a.text = std::string("script=") + rows[i].digit + " " + random_text(rng, language, 20);
    a.language = language;
    a.gold = rows[i].gold;
    a.source = name;
    articles.push_back(std::move(a));
  }
  return Dataset(name, language, std::move(articles));
}

MockBackend::Rule scripted_rule(std::size_t analysis_max_new_tokens) {
  return [analysis_max_new_tokens](const ChatRequest& request) -> std::string {
    std::string all;
    for (const ChatMessage& m : request.messages()) all += m.content;
    const std::size_t pos = all.find("script=");
    if (pos == std::string::npos || pos + 7 >= all.size()) return "I cannot determine this.";
    const char digit = all[pos + 7];
    if (request.decoding().max_new_tokens == analysis_max_new_tokens) {
      return std::string(kScriptedAnalysisPrefix) + "script=" + digit + " concluded.";
    }
    return std::string(1, digit);
  };
}

BackendDescriptor mock_descriptor(const std::string& name) {
  BackendDescriptor d;
  d.kind = BackendKind::kMock;
  d.name = name;
  d.model_name = name + "-model";
  return d;
}

RunConfig config_for(const std::vector<BackendDescriptor>& backends,
                     const std::vector<Dataset>& datasets) {
  RunConfig config;
  for (const BackendDescriptor& d : backends) {
    BackendConfig b;
    b.descriptor = d;
    config.backends.push_back(b);
  }
  for (const Dataset& d : datasets) {
    DatasetConfig dc;
    dc.name = d.name();
    dc.language = d.language();
    config.datasets.push_back(dc);
  }
  return config;
}

}  // namespace satbench::testing
