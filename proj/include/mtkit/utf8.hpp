#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mtkit::utf8 {

void append(std::string& out, char32_t cp);

std::string encode(const std::u32string& cps);

// Strict decode: rejects overlong forms, surrogates, out-of-range and
// truncated sequences. Throws data_error naming the byte offset.
std::u32string decode(std::string_view text);

// One UTF-8 string per code point, in order.
std::vector<std::string> codepoints(std::string_view text);

}  // namespace mtkit::utf8
