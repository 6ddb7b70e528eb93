#include "satbench/parser.hpp"

#include <unicode/uchar.h>

#include <array>
#include <vector>

#include "satbench/unicode.hpp"

namespace satbench {

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kSatire:
      return "satire";
    case Verdict::kNonSatire:
      return "non-satire";
    case Verdict::kUnparseable:
      return "unparseable";
  }
  return "unparseable";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
  if (text == "satire") return Verdict::kSatire;
  if (text == "non-satire") return Verdict::kNonSatire;
  if (text == "unparseable") return Verdict::kUnparseable;
  return std::nullopt;
}

namespace {

char32_t ascii_digit_for(char32_t c) {
  if (c >= 0x0660 && c <= 0x0669) return U'0' + (c - 0x0660);
  if (c >= 0x06F0 && c <= 0x06F9) return U'0' + (c - 0x06F0);
  return c;
}

struct Token {
  std::size_t begin;
  std::size_t end;
  std::string text;  // lowercased ASCII, combining marks removed
};

bool is_mark(char32_t c) {
  return u_charType(static_cast<UChar32>(c)) == U_NON_SPACING_MARK;
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'\u2019'; }

// Runs of alphanumerics. With `words`, combining marks and apostrophes
// between alphanumerics stay inside the token.
std::vector<Token> tokenize(const std::u32string& text, bool words) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!unicode::is_alnum(text[i])) {
      ++i;
      continue;
    }
    Token token{i, i, {}};
    std::u32string body;
    while (i < text.size()) {
      const char32_t c = text[i];
      if (unicode::is_alnum(c)) {
        body.push_back(c);
      } else if (words && is_mark(c)) {
        // dropped from the token text
      } else if (words && is_apostrophe(c) && i + 1 < text.size() &&
                 unicode::is_alnum(text[i + 1])) {
        body.push_back(U'\'');
      } else {
        break;
      }
      ++i;
    }
    token.end = i;
    token.text = unicode::ascii_lower(unicode::encode(body));
    tokens.push_back(std::move(token));
  }
  return tokens;
}

constexpr std::array<std::string_view, 12> kSatireKeywords = {
    "satire", "satirical", "satiric", "ساخر", "ساخرة", "ساخرا",
    "الساخر", "الساخرة", "سخرية", "ساخره", "وساخر", "تهكمي",
};

constexpr std::array<std::string_view, 9> kSeriousKeywords = {
    "serious", "جاد", "جادة", "جادا", "الجاد", "الجادة", "جدي", "جدية", "جاده",
};

constexpr std::array<std::string_view, 21> kNegations = {
    "not",  "no",    "never", "isn't", "isnt", "aren't", "wasn't", "doesn't", "don't", "non", "nor",
    "neither", "hardly", "ليس", "ليست", "لا", "غير", "لم", "لن", "ليسا", "ليسوا",
};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& list, std::string_view token) {
  for (std::string_view item : list) {
    if (item == token) return true;
  }
  return false;
}

constexpr std::size_t kNegationWindow = 3;

}  // namespace

std::string normalize_digits(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t c = unicode::next_code_point(text, i);
    const char32_t mapped = ascii_digit_for(c);
    if (mapped == c) {
      out.append(text.substr(start, i - start));
    } else {
      out.push_back(static_cast<char>(mapped));
    }
  }
  return out;
}

ParsedPrediction parse_label(std::string_view text) {
  ParsedPrediction out;
  out.raw = std::string(text);

  std::u32string points = unicode::decode(text);
  for (char32_t& c : points) c = ascii_digit_for(c);

  for (const Token& token : tokenize(points, false)) {
    if (token.text == "1" || token.text == "0") {
      out.label = token.text == "1" ? Verdict::kSatire : Verdict::kNonSatire;
      out.matched_span = CharSpan{token.begin, token.end};
      return out;
    }
  }

  const std::vector<Token> words = tokenize(points, true);
  for (std::size_t w = 0; w < words.size(); ++w) {
    bool satire;
    if (contains(kSatireKeywords, words[w].text)) {
      satire = true;
    } else if (contains(kSeriousKeywords, words[w].text)) {
      satire = false;
    } else {
      continue;
    }
    const std::size_t window_start = w >= kNegationWindow ? w - kNegationWindow : 0;
    for (std::size_t k = window_start; k < w; ++k) {
      if (contains(kNegations, words[k].text)) {
        satire = !satire;
        break;
      }
    }
    out.label = satire ? Verdict::kSatire : Verdict::kNonSatire;
    out.matched_span = CharSpan{words[w].begin, words[w].end};
    return out;
  }
  return out;
}

}  // namespace satbench
