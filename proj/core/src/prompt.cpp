#include "satbench/prompt.hpp"

#include <fstream>
#include <sstream>

#include "satbench/error.hpp"
#include "satbench/unicode.hpp"

namespace satbench {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& bundled_prompt_files();
}  // namespace detail

namespace {

constexpr std::string_view kArticlePlaceholder = "{{article}}";
constexpr std::string_view kAnalysisPlaceholder = "{{analysis}}";

struct TemplateSlot {
  Strategy strategy;
  Phase phase;
};

constexpr TemplateSlot kSlots[] = {
    {Strategy::kZeroShot, Phase::kSingle},
    {Strategy::kCoT, Phase::kAnalysis},
    {Strategy::kCoT, Phase::kPrediction},
};
constexpr Language kLanguages[] = {Language::kEnglish, Language::kArabic};

std::string slot_name(Strategy strategy, Phase phase, Language language) {
  return "(" + std::string(to_string(strategy)) + ", " + std::string(to_string(phase)) + ", " +
         std::string(language_code(language)) + ")";
}

std::string strip_trailing_newlines(std::string body) {
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
  return body;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::kZeroShot ? "zeroshot" : "cot";
}

std::string_view display_name(Strategy strategy) {
  return strategy == Strategy::kZeroShot ? "Zero-shot" : "Chain-of-Thought";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  const std::string lower = unicode::ascii_lower(text);
  if (lower == "zeroshot" || lower == "zero-shot" || lower == "zero_shot") {
    return Strategy::kZeroShot;
  }
  if (lower == "cot" || lower == "chain-of-thought") return Strategy::kCoT;
  return std::nullopt;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kSingle:
      return "single";
    case Phase::kAnalysis:
      return "analysis";
    case Phase::kPrediction:
      return "prediction";
  }
  return "single";
}

std::optional<Phase> parse_phase(std::string_view text) {
  const std::string lower = unicode::ascii_lower(text);
  if (lower == "single") return Phase::kSingle;
  if (lower == "analysis") return Phase::kAnalysis;
  if (lower == "prediction") return Phase::kPrediction;
  return std::nullopt;
}

std::string RenderedPrompt::instruction_text() const {
  std::string out;
  for (const Segment& segment : segments) {
    if (segment.kind == SegmentKind::kInstruction) out += segment.text;
  }
  return unicode::trim(out);
}

PromptTemplate PromptTemplate::parse(Strategy strategy, Phase phase, Language language,
                                     std::string body) {
  const std::string where = slot_name(strategy, phase, language);
  if ((strategy == Strategy::kZeroShot) != (phase == Phase::kSingle)) {
    throw PromptError("template " + where + ": zero-shot templates use phase single, CoT "
                      "templates use analysis or prediction");
  }

  PromptTemplate tmpl;
  tmpl.strategy_ = strategy;
  tmpl.phase_ = phase;
  tmpl.language_ = language;
  tmpl.body_ = std::move(body);

  const std::string_view text = tmpl.body_;
  bool has_article = false;
  bool has_analysis = false;
  std::size_t pos = 0;
  std::string literal;
  while (pos < text.size()) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      literal.append(text.substr(pos));
      break;
    }
    literal.append(text.substr(pos, open - pos));
    const std::string_view rest = text.substr(open);
    SegmentKind kind;
    std::size_t width;
    if (rest.starts_with(kArticlePlaceholder)) {
      kind = SegmentKind::kArticle;
      width = kArticlePlaceholder.size();
      has_article = true;
    } else if (rest.starts_with(kAnalysisPlaceholder)) {
      kind = SegmentKind::kAnalysis;
      width = kAnalysisPlaceholder.size();
      has_analysis = true;
    } else {
      const std::size_t close = rest.find("}}");
      throw PromptError("template " + where + ": unresolved placeholder '" +
                        std::string(rest.substr(0, close == std::string_view::npos
                                                       ? std::min<std::size_t>(rest.size(), 24)
                                                       : close + 2)) +
                        "'");
    }
    if (!literal.empty()) {
      tmpl.pieces_.push_back({SegmentKind::kInstruction, std::move(literal)});
      literal.clear();
    }
    tmpl.pieces_.push_back({kind, {}});
    pos = open + width;
  }
  if (!literal.empty()) tmpl.pieces_.push_back({SegmentKind::kInstruction, std::move(literal)});

  if (phase == Phase::kPrediction) {
    if (!has_analysis) throw PromptError("template " + where + ": missing {{analysis}}");
  } else {
    if (!has_article) throw PromptError("template " + where + ": missing {{article}}");
    if (has_analysis) {
      throw PromptError("template " + where + ": {{analysis}} is only valid in prediction templates");
    }
  }
  return tmpl;
}

std::string PromptTemplate::file_name() const {
  return std::string(to_string(strategy_)) + "." + std::string(to_string(phase_)) + "." +
         std::string(language_code(language_)) + ".txt";
}

const std::array<std::string_view, 4>& zero_shot_reference_sentences() {
  static constexpr std::array<std::string_view, 4> sentences = {
      "You will be provided with a news article, and you are required to determine "
      "(predict) whether the article is satirical or not.",
      "Your answer should only be \"1\" if the article is satirical or \"0\" if the "
      "article is serious.",
      "Do not provide any explanation or additional commentary.",
      "Do not answer with blank.",
  };
  return sentences;
}

std::vector<std::string> missing_reference_sentences(std::string_view body) {
  std::vector<std::string> missing;
  for (std::string_view sentence : zero_shot_reference_sentences()) {
    if (body.find(sentence) == std::string_view::npos) missing.emplace_back(sentence);
  }
  return missing;
}

TemplateSet TemplateSet::assemble(
    const std::function<std::optional<std::string>(const std::string&)>& read_file,
    const std::string& origin) {
  TemplateSet set;
  for (Language language : kLanguages) {
    for (const TemplateSlot& slot : kSlots) {
      const std::string file = std::string(to_string(slot.strategy)) + "." +
                               std::string(to_string(slot.phase)) + "." +
                               std::string(language_code(language)) + ".txt";
      std::optional<std::string> body = read_file(file);
      if (!body) {
        throw PromptError("missing template " + slot_name(slot.strategy, slot.phase, language) +
                          ": " + origin + "/" + file);
      }
      PromptTemplate tmpl = PromptTemplate::parse(slot.strategy, slot.phase, language,
                                                  strip_trailing_newlines(std::move(*body)));
      if (slot.strategy == Strategy::kZeroShot && language == Language::kEnglish) {
        for (const std::string& sentence : missing_reference_sentences(tmpl.body())) {
          set.warnings_.push_back(file + ": reference instruction sentence missing: \"" +
                                  sentence + "\"");
        }
      }
      set.templates_.push_back(std::move(tmpl));
    }
  }
  return set;
}

TemplateSet TemplateSet::bundled() {
  return assemble(
      [](const std::string& file) -> std::optional<std::string> {
        for (const auto& [name, body] : detail::bundled_prompt_files()) {
          if (name == file) return std::string(body);
        }
        return std::nullopt;
      },
      "<bundled>");
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw PromptError("prompts directory not found: " + dir.string());
  }
  return assemble(
      [&dir](const std::string& file) -> std::optional<std::string> {
        std::ifstream in(dir / file, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
      },
      dir.string());
}

const PromptTemplate& TemplateSet::get(Strategy strategy, Phase phase, Language language) const {
  for (const PromptTemplate& tmpl : templates_) {
    if (tmpl.strategy() == strategy && tmpl.phase() == phase && tmpl.language() == language) {
      return tmpl;
    }
  }
  throw PromptError("no template " + slot_name(strategy, phase, language));
}

namespace {

RenderedPrompt substitute(const PromptTemplate& tmpl, const Article& article,
                          std::optional<std::string_view> analysis) {
  RenderedPrompt out;
  out.configuration = {tmpl.language(), article.language};
  out.strategy = tmpl.strategy();
  out.phase = tmpl.phase();
  out.article_id = article.id;
  for (const PromptTemplate::Piece& piece : tmpl.pieces()) {
    std::string value;
    switch (piece.kind) {
      case SegmentKind::kInstruction:
        value = piece.literal;
        break;
      case SegmentKind::kArticle:
        value = article.text;
        break;
      case SegmentKind::kAnalysis:
        if (!analysis) {
          throw PromptError("unresolved placeholder {{analysis}} in " + tmpl.file_name());
        }
        value = std::string(*analysis);
        break;
    }
    out.text += value;
    out.segments.push_back({piece.kind, std::move(value)});
  }
  return out;
}

}  // namespace

RenderedPrompt render(const PromptTemplate& tmpl, const Article& article) {
  if (tmpl.phase() == Phase::kPrediction) {
    throw PromptError("render() needs a single or analysis template, got " + tmpl.file_name());
  }
  return substitute(tmpl, article, std::nullopt);
}

RenderedPrompt render_prediction(const PromptTemplate& tmpl, const Article& article,
                                 std::string_view analysis) {
  if (tmpl.phase() != Phase::kPrediction) {
    throw PromptError("render_prediction() needs a prediction template, got " + tmpl.file_name());
  }
  if (unicode::trim(analysis).empty()) {
    throw PromptError("empty analysis for article " + article.id);
  }
  return substitute(tmpl, article, analysis);
}

}  // namespace satbench
