#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "reqqa/text.hpp"

namespace reqqa {

struct Sentence {
    std::size_t index = 0;  // ordinal within its paragraph
    std::vector<Token> tokens;  // offsets relative to the paragraph
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t token_count() const noexcept { return tokens.size(); }
};

enum class Source { Srs, Corpus };

std::string_view to_string(Source s) noexcept;
/// Throws DataError for an unknown name.
Source source_from_string(std::string_view s);

struct Paragraph {
    std::size_t index = 0;
    std::string text;
};

/// A document decomposed into paragraphs. Paragraph indices are the
/// ordinals used in passage provenance.
struct Document {
    std::string id;
    Source source = Source::Srs;
    std::vector<Paragraph> paragraphs;
};

struct SplitConfig {
    std::size_t token_budget = 512;
    std::size_t overlap_sentences = 1;  // fixed; other values are rejected
};

struct Passage {
    std::string id;  // "<doc_id>#<ordinal>", ordinal zero-padded to 4 digits
    std::string doc_id;
    Source source = Source::Srs;
    std::size_t paragraph_index = 0;
    std::size_t first_sentence = 0;
    std::size_t last_sentence = 0;
    std::string text;
    std::size_t token_count = 0;
    bool oversized = false;  // a single sentence longer than the budget

    bool operator==(const Passage&) const = default;
};

/// Sentence boundaries fall after '.', '!' or '?' (plus closing quotes or
/// brackets) when followed by whitespace and an uppercase letter or digit,
/// unless the chunk ending in '.' is a known abbreviation.
std::vector<Sentence> split_sentences(std::string_view paragraph,
                                      const WordList& abbreviations = default_abbreviations());

/// Paragraphs are blocks separated by one or more blank lines. Line breaks
/// inside a block are kept; they count as whitespace.
Document parse_plain_text(std::string id, std::string_view text, Source source = Source::Srs);

/// JSON Lines of {doc_id, paragraph_index, text}. Rows are grouped by doc_id
/// in order of first appearance and sorted by paragraph_index.
std::vector<Document> parse_jsonl_documents(std::string_view jsonl, Source source = Source::Srs);

/// Greedy bounded splitter: an under-budget paragraph is one passage; a long
/// paragraph is covered by runs s_i..s_j that fit the budget, each run
/// starting at the last sentence of the previous one.
std::vector<Passage> split_passages(const Document& document, const SplitConfig& config = {});

std::vector<Passage> split_passages(const std::vector<Document>& documents,
                                    const SplitConfig& config = {});

std::string passage_id(std::string_view doc_id, std::size_t ordinal);

}  // namespace reqqa
