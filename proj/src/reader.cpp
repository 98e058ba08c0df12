#include "reqqa/reader.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "reqqa/error.hpp"

namespace reqqa {
namespace {

struct ReadToken {
    std::size_t start;
    std::size_t end;
    std::string term;
    bool content = false;
    bool matched = false;
    bool separator = false;
};

std::size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::unordered_map<std::string, int> counts;
    for (const auto& t : b) ++counts[t];
    std::size_t overlap = 0;
    for (const auto& t : a) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    return overlap;
}

double multiset_f1(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    const auto overlap = multiset_overlap(a, b);
    if (overlap == 0) return 0.0;
    const double p = static_cast<double>(overlap) / static_cast<double>(a.size());
    const double r = static_cast<double>(overlap) / static_cast<double>(b.size());
    return 2.0 * p * r / (p + r);
}

std::vector<ReadToken> annotate(const Sentence& sentence, const std::unordered_set<std::string>& q) {
    const auto& stop = default_stopwords();
    const auto& toks = sentence.tokens;
    std::vector<ReadToken> out;
    out.reserve(toks.size());
    for (std::size_t i = 0; i < toks.size(); ++i) {
        ReadToken t{toks[i].start, toks[i].end, {}, false, false, false};
        if (toks[i].is_word()) {
            t.term = ascii_lower(toks[i].text);
            t.content = !stop.contains(t.term);
            t.matched = t.content && q.count(t.term) > 0;
        } else {
            const bool glued_left = i > 0 && toks[i - 1].is_word() && toks[i - 1].end == toks[i].start;
            const bool glued_right =
                i + 1 < toks.size() && toks[i + 1].is_word() && toks[i].end == toks[i + 1].start;
            t.separator = !(glued_left && glued_right);
        }
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace

std::optional<AnswerSpan> extract_answer(const Reader& reader, std::string_view question,
                                         const Passage& passage) {
    if (trim(passage.text).empty()) throw InvalidArgument("passage " + passage.id + " is empty");
    if (passage.token_count > reader.max_passage_tokens()) {
        throw InvalidArgument("passage " + passage.id + " has " + std::to_string(passage.token_count) +
                              " tokens; reader '" + reader.name() + "' accepts at most " +
                              std::to_string(reader.max_passage_tokens()));
    }
    auto span = reader.extract(question, passage);
    if (!span) return std::nullopt;
    if (!(span->start < span->end && span->end <= passage.text.size())) {
        throw DataError("reader '" + reader.name() + "' returned span [" + std::to_string(span->start) +
                        ", " + std::to_string(span->end) + ") outside passage " + passage.id);
    }
    span->passage_id = passage.id;
    span->text = passage.text.substr(span->start, span->end - span->start);
    return span;
}

ReferenceReader::ReferenceReader(ReferenceReaderConfig config) : config_(config) {
    if (config_.max_window < 1) throw InvalidArgument("max_window must be >= 1");
}

std::optional<AnswerSpan> ReferenceReader::extract(std::string_view question,
                                                   const Passage& passage) const {
    return reference_reader(question, passage, config_);
}

AnswerSpan reference_reader(std::string_view question, const Passage& passage,
                            const ReferenceReaderConfig& config) {
    const auto q_terms = content_terms(question);
    const std::unordered_set<std::string> q_set(q_terms.begin(), q_terms.end());
    const auto sentences = split_sentences(passage.text);

    bool found = false;
    double best_score = 0.0;
    std::size_t best_start = 0;
    std::size_t best_end = 0;

    for (const auto& sentence : sentences) {
        const auto toks = annotate(sentence, q_set);
        const std::size_t n = toks.size();

        std::vector<std::string> sentence_terms;
        std::vector<std::size_t> matched_at;
        for (std::size_t i = 0; i < n; ++i) {
            if (toks[i].content) sentence_terms.push_back(toks[i].term);
            if (toks[i].matched) matched_at.push_back(i);
        }
        const double sentence_f1 = multiset_f1(sentence_terms, q_terms);

        // content_before[i] = content tokens in toks[0, i)
        std::vector<std::size_t> content_before(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            content_before[i + 1] = content_before[i] + (toks[i].content ? 1 : 0);
        }
        auto content_between = [&](std::size_t a, std::size_t b) {  // tokens in [a, b)
            return content_before[b] - content_before[a];
        };

        for (std::size_t i = 0; i < n; ++i) {
            if (!toks[i].content) continue;
            std::size_t matched_in = 0;
            std::vector<std::string> window_terms;
            for (std::size_t j = i; j < n && j - i < config.max_window; ++j) {
                if (toks[j].separator) break;
                if (toks[j].content) window_terms.push_back(toks[j].term);
                if (toks[j].matched) ++matched_in;
                if (!toks[j].content) continue;

                double score = 0.0;
                if (matched_in > 0) {
                    score = config.inside_penalty * sentence_f1 * multiset_f1(window_terms, q_terms);
                } else if (!matched_at.empty()) {
                    std::size_t run_lo = i;
                    while (run_lo > 0 && !toks[run_lo - 1].matched && !toks[run_lo - 1].separator) --run_lo;
                    std::size_t run_hi = j + 1;
                    while (run_hi < n && !toks[run_hi].matched && !toks[run_hi].separator) ++run_hi;
                    const double c = static_cast<double>(window_terms.size());
                    const double coverage = c / static_cast<double>(content_between(run_lo, run_hi));

                    std::size_t gap = std::numeric_limits<std::size_t>::max();
                    for (const auto m : matched_at) {
                        const auto g = m < i ? content_between(m + 1, i) : content_between(j + 1, m);
                        gap = std::min(gap, g);
                    }
                    score = sentence_f1 * coverage / (1.0 + static_cast<double>(gap)) * (c / (c + 1.0));
                }
                if (!found || score > best_score) {
                    found = true;
                    best_score = score;
                    best_start = toks[i].start;
                    best_end = toks[j].end;
                }
            }
        }
    }

    if (!found) {
        // No content word anywhere: fall back to the first token.
        const auto toks = tokenize(passage.text);
        if (toks.empty()) throw InvalidArgument("passage " + passage.id + " is empty");
        best_start = toks.front().start;
        best_end = toks.front().end;
        best_score = 0.0;
    }
    return {passage.id, best_start, best_end, passage.text.substr(best_start, best_end - best_start),
            best_score};
}

}  // namespace reqqa
