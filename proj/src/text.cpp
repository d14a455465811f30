#include "rankbed/text.hpp"

#include <charconv>
#include <cstdio>

namespace rankbed {

namespace {

inline bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char ascii_lower(unsigned char c) {
    if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
    return static_cast<char>(c);
}

inline bool is_ws(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (is_ascii_alnum(c)) {
            current.push_back(ascii_lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

bool utf8_valid(std::string_view bytes) {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const auto b0 = static_cast<unsigned char>(bytes[i]);
        std::size_t len;
        std::uint32_t cp;
        if (b0 < 0x80) {
            ++i;
            continue;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1Fu;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0Fu;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07u;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (std::size_t j = 1; j < len; ++j) {
            const auto bj = static_cast<unsigned char>(bytes[i + j]);
            if ((bj & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (bj & 0x3Fu);
        }
        // overlongs, surrogates, out of range
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += len;
    }
    return true;
}

Truncation truncate_to_tokens(std::string_view text, int budget) {
    if (budget < 0) budget = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    int seen = 0;
    std::size_t keep_end = 0;
    while (i < n) {
        while (i < n && is_ws(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        if (seen == budget) {
            // more tokens remain than the budget allows
            Truncation out;
            out.text.assign(text.substr(0, keep_end));
            if (!out.text.empty()) out.text.push_back(' ');
            out.text += kTruncationMarker;
            out.truncated = true;
            return out;
        }
        while (i < n && !is_ws(static_cast<unsigned char>(text[i]))) ++i;
        keep_end = i;
        ++seen;
    }
    return Truncation{std::string(text), false};
}

std::size_t count_ws_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char raw : text) {
        if (is_ws(static_cast<unsigned char>(raw))) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

double hash_to_unit(std::uint64_t h) {
    // top 53 bits -> [0,1)
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace rankbed
