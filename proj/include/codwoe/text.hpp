#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace codwoe {

// Unicode White_Space code points (the scoring tokenizer and the subword
// trainer both split on these; case is left untouched).
bool is_unicode_space(uint32_t cp);

// Splits UTF-8 text into the sequence of code points, each kept as its UTF-8
// byte string. Bytes that do not form valid UTF-8 are passed through as
// single-byte units.
std::vector<std::string> utf8_chars(const std::string& text);

// Whitespace-separated words of UTF-8 text.
std::vector<std::string> split_words(const std::string& text);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

} // namespace codwoe
