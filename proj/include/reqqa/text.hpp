#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace reqqa {

enum class TokenKind : std::uint8_t { Word, Punct };

/// A token with byte offsets into the UTF-8 source, [start, end).
struct Token {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
    TokenKind kind = TokenKind::Word;

    bool is_word() const noexcept { return kind == TokenKind::Word; }
    bool operator==(const Token&) const = default;
};

/// Splits text into maximal runs of letters/digits and single punctuation
/// marks. Whitespace is never part of a token. Non-ASCII code points are
/// letters unless they fall in a Unicode punctuation or space block.
std::vector<Token> tokenize(std::string_view text);

/// Word tokens of `text`, ASCII-lowercased, punctuation dropped.
std::vector<std::string> word_terms(std::string_view text);

std::string ascii_lower(std::string_view s);
std::string_view trim(std::string_view s) noexcept;

/// A lowercase word list loaded from the shipped data files, one entry per
/// line, '#' comments allowed.
class WordList {
public:
    WordList() = default;
    static WordList parse(std::string_view content);
    static WordList load(const std::string& path);

    bool contains(std::string_view word) const;
    std::size_t size() const noexcept { return words_.size(); }
    void insert(std::string word) { words_.insert(std::move(word)); }

private:
    std::unordered_set<std::string> words_;
};

const WordList& default_stopwords();
const WordList& default_abbreviations();
const WordList& default_generic_lexicon();

/// Lowercased word terms with stopwords removed. This is the term view used
/// by the lexical retrievers, the reference reader and answer matching.
std::vector<std::string> content_terms(std::string_view text,
                                       const WordList& stopwords = default_stopwords());

/// 64-bit FNV-1a. Stable across platforms, used for feature hashing,
/// content-addressed cache names and version stamps.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);

}  // namespace reqqa
