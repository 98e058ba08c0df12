#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "reqqa/textseg.hpp"

namespace reqqa {

/// A byte-offset span inside a passage's text. `text` is always
/// passage.text.substr(start, end - start).
struct AnswerSpan {
    std::string passage_id;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string text;
    double score = 0.0;  // in [0, 1]

    bool operator==(const AnswerSpan&) const = default;
};

class Reader {
public:
    virtual ~Reader() = default;

    /// One span for the passage, or nullopt if the reader abstains.
    virtual std::optional<AnswerSpan> extract(std::string_view question,
                                              const Passage& passage) const = 0;

    /// Longest passage (in word-level tokens) the reader accepts.
    virtual std::size_t max_passage_tokens() const {
        return std::numeric_limits<std::size_t>::max();
    }
    virtual bool concurrency_safe() const { return true; }
    virtual std::string name() const = 0;
};

/// Checks the passage against the reader's capacity, runs it and validates
/// the returned span. Throws InvalidArgument for an empty or over-long
/// passage and DataError for a span that violates the offset contract.
std::optional<AnswerSpan> extract_answer(const Reader& reader, std::string_view question,
                                         const Passage& passage);

struct ReferenceReaderConfig {
    std::size_t max_window = 12;       // tokens
    double inside_penalty = 0.5;       // weight of windows overlapping question words
    std::size_t max_passage_tokens = 4096;
};

/// Deterministic span extractor.
///
/// Question content words Q are the lowercased non-stopword terms of the
/// question. Within each sentence, a token is "matched" when its term is in
/// Q. Candidate windows are 1..max_window tokens long, begin and end on a
/// content word, and never cross separator punctuation (marks not glued to
/// word characters on both sides, so "3.5" and "DR-27" stay whole).
///
/// With f1(s) the multiset F1 of the sentence's content terms against Q:
///   - a window holding a matched token scores
///       inside_penalty * f1(s) * F1(window content, Q);
///   - any other window scores
///       f1(s) * coverage / (1 + gap) * c / (c + 1)
///     where c is its content-word count, coverage is c over the content
///     words of the matched-free run containing it, and gap is the number of
///     content words separating it from the nearest matched token.
/// The best window wins; ties go to the earliest start, then the shorter
/// window. A passage without content words yields its first token, score 0.
class ReferenceReader final : public Reader {
public:
    explicit ReferenceReader(ReferenceReaderConfig config = {});

    std::optional<AnswerSpan> extract(std::string_view question,
                                      const Passage& passage) const override;
    std::size_t max_passage_tokens() const override { return config_.max_passage_tokens; }
    std::string name() const override { return "reference"; }

    const ReferenceReaderConfig& config() const noexcept { return config_; }

private:
    ReferenceReaderConfig config_;
};

AnswerSpan reference_reader(std::string_view question, const Passage& passage,
                            const ReferenceReaderConfig& config = {});

}  // namespace reqqa
