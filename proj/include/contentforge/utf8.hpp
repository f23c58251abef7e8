#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace contentforge::utf8 {

inline constexpr char32_t replacement_character = 0xFFFD;

/// Decodes UTF-8 into code points. Malformed sequences decode to U+FFFD.
inline std::u32string decode(std::string_view text)
{
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto lead = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (lead < 0x80) {
            out.push_back(lead);
            ++i;
            continue;
        } else if ((lead & 0xE0) == 0xC0) {
            len = 2;
            cp = lead & 0x1F;
        } else if ((lead & 0xF0) == 0xE0) {
            len = 3;
            cp = lead & 0x0F;
        } else if ((lead & 0xF8) == 0xF0) {
            len = 4;
            cp = lead & 0x07;
        } else {
            out.push_back(replacement_character);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(replacement_character);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            auto c = static_cast<unsigned char>(text[i + k]);
            if ((c & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (c & 0x3F);
        }
        static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
        if (!ok || cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(replacement_character);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void append(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode(std::u32string_view cps)
{
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps)
        append(out, cp);
    return out;
}

/// Unicode simple lowercase mapping for the Latin, Greek, Cyrillic and
/// Armenian blocks plus fullwidth ASCII. Scripts without case (Arabic
/// included) map to themselves. The mapping is one code point to one code
/// point, so folded strings keep the original offsets.
inline char32_t simple_lowercase(char32_t c)
{
    auto even_upper = [c](char32_t lo, char32_t hi) { return c >= lo && c <= hi && (c % 2 == 0); };
    auto odd_upper = [c](char32_t lo, char32_t hi) { return c >= lo && c <= hi && (c % 2 == 1); };

    if (c < 0x80)
        return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7)
        return c + 32;
    if (c == 0x130)
        return 'i';
    if (c == 0x178)
        return 0xFF;
    if (even_upper(0x100, 0x12F) || even_upper(0x132, 0x137) || even_upper(0x14A, 0x177))
        return c + 1;
    if (odd_upper(0x139, 0x148) || odd_upper(0x179, 0x17E))
        return c + 1;
    // Greek
    if (c == 0x386)
        return 0x3AC;
    if (c >= 0x388 && c <= 0x38A)
        return c + 37;
    if (c == 0x38C)
        return 0x3CC;
    if (c == 0x38E || c == 0x38F)
        return c + 63;
    if (c >= 0x391 && c <= 0x3AB && c != 0x3A2)
        return c + 32;
    // Cyrillic
    if (c >= 0x400 && c <= 0x40F)
        return c + 80;
    if (c >= 0x410 && c <= 0x42F)
        return c + 32;
    if (c == 0x4C0)
        return 0x4CF;
    if (even_upper(0x460, 0x481) || even_upper(0x48A, 0x4BF) || even_upper(0x4D0, 0x52F))
        return c + 1;
    if (odd_upper(0x4C1, 0x4CE))
        return c + 1;
    // Armenian
    if (c >= 0x531 && c <= 0x556)
        return c + 48;
    // Latin Extended Additional
    if (c == 0x1E9E)
        return 0xDF;
    if (even_upper(0x1E00, 0x1E95) || even_upper(0x1EA0, 0x1EFF))
        return c + 1;
    // Fullwidth Latin
    if (c >= 0xFF21 && c <= 0xFF3A)
        return c + 32;
    return c;
}

inline std::u32string fold_case(std::u32string_view text)
{
    std::u32string out(text);
    for (auto& c : out)
        c = simple_lowercase(c);
    return out;
}

} // namespace contentforge::utf8
