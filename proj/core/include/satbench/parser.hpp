#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace satbench {

enum class Verdict { kSatire, kNonSatire, kUnparseable };

std::string_view to_string(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view text);

/// Half-open range of code point indices into the raw response.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const CharSpan&) const = default;
};

struct ParsedPrediction {
  Verdict label = Verdict::kUnparseable;
  std::string raw;
  /// Present iff label != kUnparseable.
  std::optional<CharSpan> matched_span;
};

/// Maps Arabic-Indic (U+0660..U+0669) and Extended Arabic-Indic
/// (U+06F0..U+06F9) digits to ASCII; everything else is unchanged.
std::string normalize_digits(std::string_view text);

/// Extracts a binary satire verdict from free-form model output.
///
/// The first standalone alphanumeric token equal to "0" or "1" (after digit
/// normalization) decides: 1 is satire, 0 is not. Without one, the first
/// English or Arabic verdict keyword decides, with its polarity flipped when
/// a negation appears among the three preceding words. Anything else is
/// kUnparseable. Pure and total.
ParsedPrediction parse_label(std::string_view text);

}  // namespace satbench
