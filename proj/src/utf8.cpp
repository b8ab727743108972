#include "mtkit/utf8.hpp"

#include <cstdint>

#include "mtkit/errors.hpp"

namespace mtkit::utf8 {

void append(std::string& out, char32_t cp) {
  const std::uint32_t c = cp;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
  }
}

std::string encode(const std::u32string& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append(out, cp);
  return out;
}

namespace {

[[noreturn]] void bad_byte(std::size_t offset) {
  throw data_error("invalid UTF-8 sequence at byte offset " +
                   std::to_string(offset));
}

}  // namespace

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const std::uint8_t b0 = static_cast<std::uint8_t>(text[i]);
    std::uint32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xe0) == 0xc0) {
      cp = b0 & 0x1f;
      len = 2;
    } else if ((b0 & 0xf0) == 0xe0) {
      cp = b0 & 0x0f;
      len = 3;
    } else if ((b0 & 0xf8) == 0xf0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      bad_byte(i);
    }
    if (i + len > n) bad_byte(i);
    for (std::size_t k = 1; k < len; ++k) {
      const std::uint8_t b = static_cast<std::uint8_t>(text[i + k]);
      if ((b & 0xc0) != 0x80) bad_byte(i);
      cp = (cp << 6) | (b & 0x3f);
    }
    static constexpr std::uint32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (len > 1 && cp < kMin[len]) bad_byte(i);  // overlong
    if (cp >= 0xd800 && cp <= 0xdfff) bad_byte(i);
    if (cp > 0x10ffff) bad_byte(i);
    out.push_back(static_cast<char32_t>(cp));
    i += len;
  }
  return out;
}

std::vector<std::string> codepoints(std::string_view text) {
  std::vector<std::string> out;
  for (char32_t cp : decode(text)) {
    std::string s;
    append(s, cp);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mtkit::utf8
