#include "reqqa/text.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "reqqa/error.hpp"

namespace reqqa::data {
extern const std::string_view stopwords;
extern const std::string_view abbreviations;
extern const std::string_view generic_lexicon;
}  // namespace reqqa::data

namespace reqqa {
namespace {

enum class CharClass { Space, Alnum, Punct };

struct CodePoint {
    char32_t value;
    std::size_t length;
};

CodePoint decode_utf8(std::string_view s, std::size_t i) noexcept {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
    } else if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1);
        const int c2 = cont(2);
        if (c1 >= 0 && c2 >= 0) {
            return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
        }
    } else if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1);
        const int c2 = cont(2);
        const int c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
            return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
        }
    }
    // Malformed sequence: consume one byte as an isolated mark.
    return {0xFFFD, 1};
}

CharClass classify(char32_t c) noexcept {
    if (c < 0x80) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
            return CharClass::Space;
        }
        if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
            return CharClass::Alnum;
        }
        return CharClass::Punct;
    }
    if (c == 0x00A0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 ||
        c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF) {
        return CharClass::Space;
    }
    if (c >= 0x00A1 && c <= 0x00BF) {
        // Latin-1 symbols, except ordinal indicators, superscripts and fractions.
        switch (c) {
            case 0xAA: case 0xB2: case 0xB3: case 0xB5: case 0xB9: case 0xBA:
            case 0xBC: case 0xBD: case 0xBE:
                return CharClass::Alnum;
            default:
                return CharClass::Punct;
        }
    }
    if (c == 0x00D7 || c == 0x00F7 || c == 0xFFFD) return CharClass::Punct;
    if ((c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
        (c >= 0x20A0 && c <= 0x20CF) || (c >= 0x2190 && c <= 0x2BFF) ||
        (c >= 0x3001 && c <= 0x303F) || (c >= 0xFE10 && c <= 0xFE6F) ||
        (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20)) {
        return CharClass::Punct;
    }
    return CharClass::Alnum;
}

WordList parse_embedded(std::string_view content) { return WordList::parse(content); }

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto cp = decode_utf8(text, i);
        const auto cls = classify(cp.value);
        if (cls == CharClass::Space) {
            i += cp.length;
            continue;
        }
        if (cls == CharClass::Punct) {
            out.push_back({std::string(text.substr(i, cp.length)), i, i + cp.length, TokenKind::Punct});
            i += cp.length;
            continue;
        }
        const std::size_t start = i;
        while (i < text.size()) {
            const auto next = decode_utf8(text, i);
            if (classify(next.value) != CharClass::Alnum) break;
            i += next.length;
        }
        out.push_back({std::string(text.substr(start, i - start)), start, i, TokenKind::Word});
    }
    return out;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n\v\f";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> word_terms(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& tok : tokenize(text)) {
        if (tok.is_word()) out.push_back(ascii_lower(tok.text));
    }
    return out;
}

std::vector<std::string> content_terms(std::string_view text, const WordList& stopwords) {
    std::vector<std::string> out;
    for (auto& term : word_terms(text)) {
        if (!stopwords.contains(term)) out.push_back(std::move(term));
    }
    return out;
}

WordList WordList::parse(std::string_view content) {
    WordList list;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(pos, nl - pos);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (!line.empty()) list.words_.insert(ascii_lower(line));
        pos = nl + 1;
    }
    return list;
}

WordList WordList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot open word list: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool WordList::contains(std::string_view word) const {
    return words_.find(std::string(word)) != words_.end();
}

const WordList& default_stopwords() {
    static const WordList list = parse_embedded(data::stopwords);
    return list;
}

const WordList& default_abbreviations() {
    static const WordList list = parse_embedded(data::abbreviations);
    return list;
}

const WordList& default_generic_lexicon() {
    static const WordList list = parse_embedded(data::generic_lexicon);
    return list;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (const char ch : data) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace reqqa
