#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 helpers shared by the corpus loader and the response parser.
// Invalid byte sequences decode as U+FFFD.

namespace satbench::unicode {

std::string nfc(std::string_view utf8);

/// Strips leading and trailing Unicode White_Space.
std::string trim(std::string_view utf8);

/// Decodes the code point starting at byte `i` and advances `i` past it.
char32_t next_code_point(std::string_view utf8, std::size_t& i);

std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view code_points);
void append_utf8(std::string& out, char32_t code_point);

std::size_t code_point_count(std::string_view utf8);

/// Byte offset of the `index`-th code point (or size() when past the end).
std::size_t byte_offset_of(std::string_view utf8, std::size_t index);

bool is_white_space(char32_t c);
bool is_alnum(char32_t c);

/// Lowercases ASCII letters only; non-ASCII passes through unchanged.
std::string ascii_lower(std::string_view text);

}  // namespace satbench::unicode
