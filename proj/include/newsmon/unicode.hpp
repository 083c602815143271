#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace newsmon::unicode {

/// Decodes UTF-8; invalid sequences become U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

bool is_letter(char32_t cp);   // general category L*
bool is_mark(char32_t cp);     // general category M*
bool is_digit(char32_t cp);    // general category Nd
bool is_space(char32_t cp);

/// Number of code points of general category Letter.
std::size_t letter_count(std::string_view utf8);

std::string to_lower(std::string_view utf8);

/// Trim, collapse internal whitespace runs to one space, lowercase.
std::string fold_key(std::string_view utf8);

} // namespace newsmon::unicode
