#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 helpers shared by every module. Offsets are Unicode scalar-value
// offsets, never byte offsets.
namespace menucsi::text {

// Throws std::invalid_argument on malformed UTF-8.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view scalars);
std::string encode(char32_t scalar);

std::string nfc(std::string_view utf8);
bool is_nfc(std::string_view utf8);

std::size_t length(std::string_view utf8);

// Substring over scalar offsets [start, end). Throws std::out_of_range.
std::string slice(std::string_view utf8, std::size_t start, std::size_t end);

// Strips Unicode whitespace (including U+3000) from both ends.
std::string trim(std::string_view utf8);

bool is_space(char32_t c);
bool is_word_char(char32_t c);
bool is_han(char32_t c);
bool is_latin(char32_t c);

// True if the text contains at least one letter or digit.
bool has_word_char(std::string_view utf8);

std::string ascii_lower(std::string_view s);

}  // namespace menucsi::text
