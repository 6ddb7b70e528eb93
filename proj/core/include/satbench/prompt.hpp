#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "satbench/corpus.hpp"

namespace satbench {

enum class Strategy { kZeroShot, kCoT };
enum class Phase { kSingle, kAnalysis, kPrediction };

std::string_view to_string(Strategy strategy);  // "zeroshot" / "cot"
std::string_view display_name(Strategy strategy);  // "Zero-shot" / "Chain-of-Thought"
std::optional<Strategy> parse_strategy(std::string_view text);
std::string_view to_string(Phase phase);
std::optional<Phase> parse_phase(std::string_view text);

/// Pre-prompt language x article language.
struct PromptConfiguration {
  Language prompt_language = Language::kEnglish;
  Language article_language = Language::kEnglish;

  bool operator==(const PromptConfiguration&) const = default;
};

enum class SegmentKind { kInstruction, kArticle, kAnalysis };

struct Segment {
  SegmentKind kind;
  std::string text;
};

struct RenderedPrompt {
  std::string text;
  /// `text` split by origin; concatenating the segment texts yields `text`.
  std::vector<Segment> segments;
  PromptConfiguration configuration;
  Strategy strategy = Strategy::kZeroShot;
  Phase phase = Phase::kSingle;
  std::string article_id;

  /// Instruction segments only, trimmed.
  std::string instruction_text() const;
};

class PromptTemplate {
 public:
  /// Validates placeholder rules for the phase. Throws PromptError.
  static PromptTemplate parse(Strategy strategy, Phase phase, Language language,
                              std::string body);

  Strategy strategy() const noexcept { return strategy_; }
  Phase phase() const noexcept { return phase_; }
  Language language() const noexcept { return language_; }
  const std::string& body() const noexcept { return body_; }

  /// `<strategy>.<phase>.<lang>.txt`
  std::string file_name() const;

  struct Piece {
    SegmentKind kind;  // kInstruction pieces are literal text
    std::string literal;
  };
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

 private:
  PromptTemplate() = default;

  Strategy strategy_ = Strategy::kZeroShot;
  Phase phase_ = Phase::kSingle;
  Language language_ = Language::kEnglish;
  std::string body_;
  std::vector<Piece> pieces_;
};

/// The six templates: {ZeroShot-Single, CoT-Analysis, CoT-Prediction} x {English, Arabic}.
class TemplateSet {
 public:
  static TemplateSet bundled();
  /// Throws PromptError naming the first missing (strategy, phase, language).
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& get(Strategy strategy, Phase phase, Language language) const;

  /// Non-fatal findings, such as an English zero-shot body that lost part of
  /// the reference instruction.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  static TemplateSet assemble(
      const std::function<std::optional<std::string>(const std::string&)>& read_file,
      const std::string& origin);

  std::vector<PromptTemplate> templates_;
  std::vector<std::string> warnings_;
};

/// The reference English zero-shot instruction, sentence by sentence.
const std::array<std::string_view, 4>& zero_shot_reference_sentences();

/// Sentences of the reference instruction missing from `body`.
std::vector<std::string> missing_reference_sentences(std::string_view body);

/// Single-pass substitution of {{article}}. Requires phase Single or Analysis.
RenderedPrompt render(const PromptTemplate& tmpl, const Article& article);

/// Substitutes {{analysis}} (and {{article}} when present). Requires phase
/// Prediction and a non-empty analysis.
RenderedPrompt render_prediction(const PromptTemplate& tmpl, const Article& article,
                                 std::string_view analysis);

}  // namespace satbench
