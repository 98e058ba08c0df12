#include "reqqa/textseg.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "reqqa/error.hpp"

namespace reqqa {
namespace {

bool is_terminal(const Token& t) {
    return t.kind == TokenKind::Punct && (t.text == "." || t.text == "!" || t.text == "?");
}

bool is_closer(const Token& t) {
    return t.kind == TokenKind::Punct &&
           (t.text == "\"" || t.text == "'" || t.text == ")" || t.text == "]" ||
            t.text == "\xE2\x80\x9D" || t.text == "\xE2\x80\x99");
}

bool is_opener(const Token& t) {
    return t.kind == TokenKind::Punct &&
           (t.text == "\"" || t.text == "'" || t.text == "(" || t.text == "[" ||
            t.text == "\xE2\x80\x9C" || t.text == "\xE2\x80\x98");
}

bool starts_sentence(const Token& t) {
    const char c = t.text.empty() ? '\0' : t.text.front();
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// The whitespace-delimited chunk that ends with the '.' at `dot_end`,
// stripped of leading openers, e.g. "(e.g." -> "e.g.".
std::string chunk_ending_at(std::string_view text, std::size_t dot_end) {
    std::size_t b = dot_end;
    while (b > 0) {
        const char c = text[b - 1];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') break;
        --b;
    }
    while (b < dot_end && (text[b] == '(' || text[b] == '[' || text[b] == '"' || text[b] == '\'')) ++b;
    return ascii_lower(text.substr(b, dot_end - b));
}

}  // namespace

std::string_view to_string(Source s) noexcept { return s == Source::Srs ? "srs" : "corpus"; }

Source source_from_string(std::string_view s) {
    if (s == "srs") return Source::Srs;
    if (s == "corpus") return Source::Corpus;
    throw DataError("unknown source '" + std::string(s) + "' (expected \"srs\" or \"corpus\")");
}

std::vector<Sentence> split_sentences(std::string_view paragraph, const WordList& abbreviations) {
    auto tokens = tokenize(paragraph);
    std::vector<Sentence> out;
    std::size_t first = 0;
    auto close = [&](std::size_t last) {
        Sentence s;
        s.index = out.size();
        s.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(first),
                        tokens.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        s.start = s.tokens.front().start;
        s.end = s.tokens.back().end;
        out.push_back(std::move(s));
        first = last + 1;
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!is_terminal(tokens[i])) continue;
        // Absorb adjacent terminal marks and closers: `?!`, `...`, `.")`.
        std::size_t last = i;
        while (last + 1 < tokens.size() && tokens[last + 1].start == tokens[last].end &&
               (is_terminal(tokens[last + 1]) || is_closer(tokens[last + 1]))) {
            ++last;
        }
        const std::size_t next = last + 1;
        if (next >= tokens.size()) break;
        if (tokens[next].start == tokens[last].end) {  // no whitespace: 3.5, e.g.x
            i = last;
            continue;
        }
        std::size_t lead = next;
        if (is_opener(tokens[lead]) && lead + 1 < tokens.size()) ++lead;
        const bool boundary =
            starts_sentence(tokens[lead]) &&
            !(tokens[i].text == "." && last == i &&
              abbreviations.contains(chunk_ending_at(paragraph, tokens[i].end)));
        if (boundary) close(last);
        i = last;
    }
    if (first < tokens.size()) close(tokens.size() - 1);
    return out;
}

Document parse_plain_text(std::string id, std::string_view text, Source source) {
    Document doc;
    doc.id = std::move(id);
    doc.source = source;
    std::size_t pos = 0;
    std::size_t block_start = std::string_view::npos;
    std::size_t block_end = 0;
    auto flush = [&] {
        if (block_start == std::string_view::npos) return;
        const auto body = trim(text.substr(block_start, block_end - block_start));
        if (!body.empty()) doc.paragraphs.push_back({doc.paragraphs.size(), std::string(body)});
        block_start = std::string_view::npos;
    };
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        if (trim(line).empty()) {
            flush();
        } else {
            if (block_start == std::string_view::npos) block_start = pos;
            block_end = nl;
        }
        pos = nl + 1;
    }
    flush();
    return doc;
}

std::vector<Document> parse_jsonl_documents(std::string_view jsonl, Source source) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<std::size_t, std::string>>> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        if (nl == std::string_view::npos) nl = jsonl.size();
        const auto line = trim(jsonl.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
            const auto doc_id = row.at("doc_id").get<std::string>();
            const auto idx = row.at("paragraph_index").get<std::size_t>();
            auto text = row.at("text").get<std::string>();
            if (!rows.count(doc_id)) order.push_back(doc_id);
            rows[doc_id].emplace_back(idx, std::move(text));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::vector<Document> docs;
    for (const auto& id : order) {
        auto& paras = rows[id];
        std::stable_sort(paras.begin(), paras.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Document doc{id, source, {}};
        for (auto& [idx, text] : paras) doc.paragraphs.push_back({idx, std::move(text)});
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::string passage_id(std::string_view doc_id, std::size_t ordinal) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "#%04zu", ordinal);
    return std::string(doc_id) + buf;
}

std::vector<Passage> split_passages(const Document& document, const SplitConfig& config) {
    if (config.token_budget < 1) throw InvalidArgument("token_budget must be >= 1");
    if (config.overlap_sentences != 1) {
        throw InvalidArgument("only a one-sentence overlap is supported");
    }
    std::vector<Passage> out;
    for (const auto& para : document.paragraphs) {
        const auto sentences = split_sentences(para.text);
        if (sentences.empty()) continue;
        const std::size_t n = sentences.size();

        auto emit = [&](std::size_t first, std::size_t last, bool oversized) {
            Passage p;
            p.id = passage_id(document.id, out.size());
            p.doc_id = document.id;
            p.source = document.source;
            p.paragraph_index = para.index;
            p.first_sentence = first;
            p.last_sentence = last;
            const auto b = sentences[first].start;
            p.text = para.text.substr(b, sentences[last].end - b);
            for (std::size_t s = first; s <= last; ++s) p.token_count += sentences[s].token_count();
            p.oversized = oversized;
            out.push_back(std::move(p));
        };

        std::size_t total = 0;
        for (const auto& s : sentences) total += s.token_count();
        if (total <= config.token_budget) {
            emit(0, n - 1, false);
            continue;
        }

        std::size_t start = 0;
        bool start_is_overlap = false;
        while (true) {
            const auto budget = config.token_budget;
            if (sentences[start].token_count() > budget) {
                emit(start, start, true);
                if (start + 1 == n) break;
                ++start;
                start_is_overlap = false;
                continue;
            }
            std::size_t end = start;
            std::size_t used = sentences[start].token_count();
            while (end + 1 < n && used + sentences[end + 1].token_count() <= budget) {
                ++end;
                used += sentences[end].token_count();
            }
            if (end == start && start_is_overlap) {
                // The carried-over sentence cannot share a passage with its
                // successor; it is already covered, so move on without overlap.
                ++start;
                start_is_overlap = false;
                continue;
            }
            emit(start, end, false);
            if (end + 1 == n) break;
            start = end;
            start_is_overlap = true;
        }
    }
    return out;
}

std::vector<Passage> split_passages(const std::vector<Document>& documents,
                                    const SplitConfig& config) {
    std::vector<Passage> out;
    for (const auto& doc : documents) {
        auto part = split_passages(doc, config);
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace reqqa
