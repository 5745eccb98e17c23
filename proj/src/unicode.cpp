#include "entroprune/unicode.hpp"

#include <algorithm>
#include <array>

namespace entroprune {

bool utf8_next(std::string_view s, std::size_t &i, char32_t &cp) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        cp = b0;
        ++i;
        return true;
    }
    int len;
    char32_t acc;
    char32_t min_cp;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        acc = b0 & 0x1F;
        min_cp = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        acc = b0 & 0x0F;
        min_cp = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        acc = b0 & 0x07;
        min_cp = 0x10000;
    } else {
        ++i;
        return false;
    }
    if (i + static_cast<std::size_t>(len) > s.size()) {
        ++i;
        return false;
    }
    for (int k = 1; k < len; ++k) {
        unsigned char b = byte(i + static_cast<std::size_t>(k));
        if ((b & 0xC0) != 0x80) {
            ++i;
            return false;
        }
        acc = (acc << 6) | (b & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range values are invalid.
    if (acc < min_cp || acc > 0x10FFFF || (acc >= 0xD800 && acc <= 0xDFFF)) {
        ++i;
        return false;
    }
    i += static_cast<std::size_t>(len);
    cp = acc;
    return true;
}

bool utf8_valid(std::string_view s) {
    std::size_t i = 0;
    char32_t cp;
    while (i < s.size()) {
        if (!utf8_next(s, i, cp)) {
            return false;
        }
    }
    return true;
}

void utf8_append(char32_t cp, std::string &out) {
    if (cp <= 0x7F) {
        out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7FF) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp <= 0xFFFF) {
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

std::string utf8_truncate(std::string_view s, std::size_t max_cp) {
    std::size_t i = 0;
    std::size_t n = 0;
    char32_t cp;
    while (i < s.size() && n < max_cp) {
        std::size_t prev = i;
        if (!utf8_next(s, i, cp)) {
            i = prev;
            break;
        }
        ++n;
    }
    return std::string(s.substr(0, i));
}

char32_t simple_case_fold(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + 0x20 : cp;
    }
    if (cp == 0x00B5) {
        return 0x03BC; // micro sign -> greek mu
    }
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) {
        return cp + 0x20;
    }
    // Latin Extended-A alternates upper/lower pairs.
    if ((cp >= 0x0100 && cp <= 0x012F) || (cp >= 0x0132 && cp <= 0x0137) ||
        (cp >= 0x014A && cp <= 0x0177)) {
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if ((cp >= 0x0139 && cp <= 0x0148) || (cp >= 0x0179 && cp <= 0x017E)) {
        return (cp % 2 == 1) ? cp + 1 : cp;
    }
    if (cp == 0x0178) {
        return 0x00FF;
    }
    // Greek.
    if (cp == 0x0386) {
        return 0x03AC;
    }
    if (cp >= 0x0388 && cp <= 0x038A) {
        return cp + 0x25;
    }
    if (cp == 0x038C) {
        return 0x03CC;
    }
    if (cp == 0x038E || cp == 0x038F) {
        return cp + 0x3F;
    }
    if ((cp >= 0x0391 && cp <= 0x03A1) || (cp >= 0x03A3 && cp <= 0x03AB)) {
        return cp + 0x20;
    }
    // Cyrillic.
    if (cp >= 0x0400 && cp <= 0x040F) {
        return cp + 0x50;
    }
    if (cp >= 0x0410 && cp <= 0x042F) {
        return cp + 0x20;
    }
    // Fullwidth Latin.
    if (cp >= 0xFF21 && cp <= 0xFF3A) {
        return cp + 0x20;
    }
    return cp;
}

bool is_whitespace(char32_t cp) {
    switch (cp) {
    case 0x0009:
    case 0x000A:
    case 0x000B:
    case 0x000C:
    case 0x000D:
    case 0x0020:
    case 0x0085:
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

namespace {

struct Range {
    char32_t lo;
    char32_t hi;
};

// Sorted, non-overlapping. Letters, digits and marks stay word chars;
// notably 3005-3007 (ideographic iteration/zero) and the fullwidth
// alphanumerics are excluded.
constexpr std::array<Range, 39> kSeparatorRanges = {{
    {0x0021, 0x002F}, // ! " # $ % & ' ( ) * + , - . /
    {0x003A, 0x0040}, // : ; < = > ? @
    {0x005B, 0x0060}, // [ \ ] ^ _ `
    {0x007B, 0x007E}, // { | } ~
    {0x00A1, 0x00A9}, // inverted !, currency, section, diaeresis, (c)
    {0x00AB, 0x00AC},
    {0x00AE, 0x00B1},
    {0x00B4, 0x00B4},
    {0x00B6, 0x00B8},
    {0x00BB, 0x00BB},
    {0x00BF, 0x00BF},
    {0x00D7, 0x00D7},
    {0x00F7, 0x00F7},
    {0x037E, 0x037E}, // greek question mark
    {0x0387, 0x0387}, // greek ano teleia
    {0x055A, 0x055F}, // armenian punctuation
    {0x0589, 0x058A},
    {0x05BE, 0x05BE}, // hebrew maqaf
    {0x05C0, 0x05C0},
    {0x05C3, 0x05C3},
    {0x05F3, 0x05F4},
    {0x060C, 0x060D}, // arabic comma
    {0x061B, 0x061B},
    {0x061E, 0x061F},
    {0x066A, 0x066D},
    {0x06D4, 0x06D4},
    {0x0964, 0x0965}, // devanagari danda
    {0x2010, 0x2027}, // dashes, quotes, daggers, ellipsis
    {0x2030, 0x205E}, // per mille .. undertie .. low asterisk
    {0x20A0, 0x20BF}, // currency symbols
    {0x2190, 0x22FF}, // arrows and mathematical operators
    {0x3001, 0x3003}, // CJK comma, full stop, ditto
    {0x3008, 0x3011}, // CJK brackets
    {0x3014, 0x301F}, // CJK brackets and quotes
    {0x30FB, 0x30FB}, // katakana middle dot
    {0xFF01, 0xFF0F}, // fullwidth punctuation (alphanumerics excluded)
    {0xFF1A, 0xFF20},
    {0xFF3B, 0xFF40},
    {0xFF5B, 0xFF65}, // fullwidth braces, halfwidth CJK punctuation
}};

} // namespace

bool is_separator_symbol(char32_t cp) {
    auto it = std::upper_bound(kSeparatorRanges.begin(), kSeparatorRanges.end(), cp,
                               [](char32_t v, const Range &r) { return v < r.lo; });
    if (it == kSeparatorRanges.begin()) {
        return false;
    }
    --it;
    return cp >= it->lo && cp <= it->hi;
}

} // namespace entroprune
