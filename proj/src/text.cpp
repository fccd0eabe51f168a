#include "codwoe/text.hpp"

namespace codwoe {

bool is_unicode_space(uint32_t cp) {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

namespace {

// Decodes one UTF-8 unit starting at text[i]; returns its byte length and
// writes the code point. Malformed sequences decode as one raw byte.
size_t decode_utf8(const std::string& text, size_t i, uint32_t* cp) {
    unsigned char b0 = static_cast<unsigned char>(text[i]);
    size_t remaining = text.size() - i;
    if (b0 < 0x80) {
        *cp = b0;
        return 1;
    }
    auto cont = [&](size_t k) {
        return k < remaining && (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        *cp = (uint32_t(b0 & 0x1F) << 6) | (static_cast<unsigned char>(text[i + 1]) & 0x3F);
        return 2;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        *cp = (uint32_t(b0 & 0x0F) << 12) |
              (uint32_t(static_cast<unsigned char>(text[i + 1]) & 0x3F) << 6) |
              (static_cast<unsigned char>(text[i + 2]) & 0x3F);
        return 3;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        *cp = (uint32_t(b0 & 0x07) << 18) |
              (uint32_t(static_cast<unsigned char>(text[i + 1]) & 0x3F) << 12) |
              (uint32_t(static_cast<unsigned char>(text[i + 2]) & 0x3F) << 6) |
              (static_cast<unsigned char>(text[i + 3]) & 0x3F);
        return 4;
    }
    *cp = b0;
    return 1;
}

} // namespace

std::vector<std::string> utf8_chars(const std::string& text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        uint32_t cp = 0;
        size_t len = decode_utf8(text, i, &cp);
        out.push_back(text.substr(i, len));
        i += len;
    }
    return out;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    size_t i = 0;
    while (i < text.size()) {
        uint32_t cp = 0;
        size_t len = decode_utf8(text, i, &cp);
        if (is_unicode_space(cp)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.append(text, i, len);
        }
        i += len;
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace codwoe
