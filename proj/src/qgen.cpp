#include "reqqa/qgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "reqqa/error.hpp"

namespace reqqa {

using nlohmann::json;

// --------------------------------------------------------------------------
// Labels

std::string_view to_string(Origin o) noexcept { return o == Origin::Auto ? "auto" : "man"; }

std::string_view to_string(QuestionLabel l) noexcept {
    switch (l) {
        case QuestionLabel::Valid: return "valid";
        case QuestionLabel::Rephrased: return "rephrased";
        case QuestionLabel::Invalid: return "invalid";
        case QuestionLabel::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

std::string_view to_string(AnswerLabel l) noexcept {
    switch (l) {
        case AnswerLabel::Correct: return "correct";
        case AnswerLabel::Corrected: return "corrected";
        case AnswerLabel::Invalid: return "invalid";
        case AnswerLabel::NotInContext: return "not_in_context";
        case AnswerLabel::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Origin origin_from_string(std::string_view s) {
    if (s == "auto") return Origin::Auto;
    if (s == "man" || s == "manual") return Origin::Manual;
    throw DataError("unknown origin '" + std::string(s) + "'");
}

QuestionLabel question_label_from_string(std::string_view s) {
    const auto v = ascii_lower(s);
    if (v == "valid") return QuestionLabel::Valid;
    if (v == "rephrased") return QuestionLabel::Rephrased;
    if (v == "invalid") return QuestionLabel::Invalid;
    if (v == "unlabeled") return QuestionLabel::Unlabeled;
    throw DataError("unknown question label '" + std::string(s) + "'");
}

AnswerLabel answer_label_from_string(std::string_view s) {
    const auto v = ascii_lower(s);
    if (v == "correct") return AnswerLabel::Correct;
    if (v == "corrected") return AnswerLabel::Corrected;
    if (v == "invalid") return AnswerLabel::Invalid;
    if (v == "not_in_context" || v == "not in context") return AnswerLabel::NotInContext;
    if (v == "unlabeled") return AnswerLabel::Unlabeled;
    throw DataError("unknown answer label '" + std::string(s) + "'");
}

bool QAPair::valid() const noexcept {
    return question_label != QuestionLabel::Invalid && answer_label != AnswerLabel::Invalid &&
           answer_label != AnswerLabel::NotInContext;
}

// --------------------------------------------------------------------------
// Reference generator

namespace {

const std::set<std::string, std::less<>> kModals = {"shall", "must", "will", "should", "may", "can"};

bool is_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_capitalized(std::string_view s) { return !s.empty() && s.front() >= 'A' && s.front() <= 'Z'; }

bool glued(const Token& a, const Token& b) { return a.end == b.start; }

std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (const char c : trim(s)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string decapitalize(std::string s) {
    if (s.size() >= 2 && s[0] >= 'A' && s[0] <= 'Z' && !(s[1] >= 'A' && s[1] <= 'Z') &&
        !(s[1] >= '0' && s[1] <= '9')) {
        s[0] = static_cast<char>(s[0] - 'A' + 'a');
    }
    return s;
}

struct Candidate {
    std::size_t first;  // token indices within the sentence
    std::size_t last;
    double weight;
};

std::vector<Candidate> answer_candidates(const std::vector<Token>& t) {
    const auto& stop = default_stopwords();
    std::vector<Candidate> out;
    const auto n = t.size();
    auto is_content_word = [&](std::size_t i) {
        return t[i].is_word() && !stop.contains(ascii_lower(t[i].text));
    };

    // Numeric quantities: 3004 kg, 3.5 m, 1,000 frames.
    for (std::size_t i = 0; i < n; ++i) {
        if (!t[i].is_word() || !is_digits(t[i].text)) continue;
        if (i > 0 && glued(t[i - 1], t[i])) continue;  // part of an identifier (DR-13) or decimal
        std::size_t last = i;
        while (last + 2 < n && !t[last + 1].is_word() && (t[last + 1].text == "." || t[last + 1].text == ",") &&
               glued(t[last], t[last + 1]) && glued(t[last + 1], t[last + 2]) && is_digits(t[last + 2].text)) {
            last += 2;
        }
        if (last + 1 < n && glued(t[last], t[last + 1])) continue;  // 13B, 4x4
        if (last + 1 < n && is_content_word(last + 1) && !is_digits(t[last + 1].text)) ++last;
        out.push_back({i, last, 1.0});
    }

    // Capitalized multi-word names past the sentence start.
    for (std::size_t i = 1; i < n;) {
        if (!(t[i].is_word() && is_capitalized(t[i].text))) {
            ++i;
            continue;
        }
        std::size_t last = i;
        while (last + 1 < n && t[last + 1].is_word() && is_capitalized(t[last + 1].text)) ++last;
        if (last > i) out.push_back({i, last, 0.9});
        i = last + 1;
    }

    // Object phrase after "<modal> [not|be|...] <verb>".
    for (std::size_t m = 1; m < n; ++m) {
        if (!t[m].is_word() || !kModals.count(ascii_lower(t[m].text))) continue;
        std::size_t v = m + 1;
        while (v < n && t[v].is_word() && !is_content_word(v)) ++v;
        if (v >= n || !t[v].is_word()) continue;
        std::size_t first = v + 1;
        while (first < n && t[first].is_word() && !is_content_word(first)) ++first;
        if (first >= n || !is_content_word(first)) continue;
        std::size_t last = first;
        std::size_t words = 1;
        while (last + 1 < n && words < 4) {
            const auto& nx = t[last + 1];
            if (nx.is_word() && is_content_word(last + 1)) {
                ++last;
                ++words;
            } else if (!nx.is_word() && last + 2 < n && glued(t[last], nx) && glued(nx, t[last + 2]) &&
                       t[last + 2].is_word()) {
                last += 2;  // keep glued forms like 3.5 or on-board together
                ++words;
            } else {
                break;
            }
        }
        out.push_back({first, last, 0.8});
    }

    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.first != b.first) return a.first < b.first;
        if (a.last != b.last) return a.last < b.last;
        return a.weight > b.weight;
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const Candidate& a, const Candidate& b) { return a.first == b.first && a.last == b.last; }),
              out.end());
    return out;
}

std::string build_question(std::string_view text, const Sentence& s, const Candidate& c) {
    const auto& t = s.tokens;
    // Sentence body without its closing punctuation.
    std::size_t body_end = s.end;
    for (std::size_t i = t.size(); i-- > 0;) {
        if (t[i].is_word()) {
            body_end = t[i].end;
            break;
        }
    }
    const auto ans_start = t[c.first].start;
    const auto ans_end = t[c.last].end;
    const auto slice = [&](std::size_t a, std::size_t b) {
        return b > a ? std::string(text.substr(a, b - a)) : std::string{};
    };

    std::optional<std::size_t> modal;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i].is_word() && kModals.count(ascii_lower(t[i].text))) {
            modal = i;
            break;
        }
    }

    std::string q;
    if (modal && *modal < c.first) {
        const auto& m = t[*modal];
        const auto subject = decapitalize(collapse_spaces(slice(s.start, m.start)));
        q = "What " + ascii_lower(m.text) + " " + subject + " " + slice(m.end, ans_start) + " " +
            slice(ans_end, body_end);
    } else if (modal && c.last < *modal) {
        q = "What " + slice(t[*modal].start, body_end);
    } else if (c.first == 0) {
        q = "What " + slice(ans_end, body_end);
    } else {
        q = decapitalize(slice(s.start, ans_start));
        q[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(q[0])));
        q += " what " + slice(ans_end, body_end);
    }
    return collapse_spaces(q) + "?";
}

}  // namespace

std::vector<GeneratedPair> ReferenceGenerator::generate(const Passage& passage, std::uint64_t seed) const {
    std::vector<GeneratedPair> all;
    for (const auto& s : split_sentences(passage.text)) {
        for (const auto& c : answer_candidates(s.tokens)) {
            GeneratedPair p;
            p.answer_start = s.tokens[c.first].start;
            p.answer = passage.text.substr(p.answer_start, s.tokens[c.last].end - p.answer_start);
            p.question = build_question(passage.text, s, c);
            p.score = c.weight;
            all.push_back(std::move(p));
        }
    }
    if (all.size() > max_pairs_) {
        std::mt19937_64 rng(seed ^ fnv1a64(passage.id));
        std::vector<std::size_t> idx(all.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < max_pairs_; ++i) {
            const auto j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(max_pairs_);
        std::sort(idx.begin(), idx.end());
        std::vector<GeneratedPair> picked;
        for (const auto i : idx) picked.push_back(std::move(all[i]));
        all = std::move(picked);
    }
    return all;
}

double ReferenceEvaluator::evaluate(std::string_view question, std::string_view answer,
                                    std::string_view passage) const {
    static const std::set<std::string, std::less<>> openers = {
        "what", "which", "who", "whom", "whose", "when", "where", "why", "how", "is", "are", "was",
        "were", "do", "does", "did", "can", "could", "shall", "should", "must", "will", "would", "may"};
    const auto a = word_terms(answer);
    if (a.empty()) return 0.0;
    const auto p = word_terms(passage);
    const std::set<std::string> in_passage(p.begin(), p.end());
    std::size_t found = 0;
    for (const auto& w : a) found += in_passage.count(w);
    const double support = static_cast<double>(found) / static_cast<double>(a.size());

    const auto q = trim(question);
    const auto q_terms = word_terms(q);
    double form = 0.0;
    if (!q.empty() && q.back() == '?') {
        form = (!q_terms.empty() && openers.count(q_terms.front())) ? 1.0 : 0.5;
    }
    return support * form;
}

std::vector<QAPair> generate_pairs(std::span<const Passage> passages, const Generator& generator,
                                   std::uint64_t seed, const Evaluator* evaluator, std::string_view domain) {
    std::vector<QAPair> out;
    for (const auto& passage : passages) {
        const auto generated = generator.generate(passage, seed);
        for (std::size_t i = 0; i < generated.size(); ++i) {
            const auto& g = generated[i];
            QAPair pair;
            pair.id = passage.id + "/q" + std::to_string(i);
            pair.domain = std::string(domain);
            pair.question = g.question;
            pair.answer = g.answer;
            pair.source = passage.source;
            pair.doc_id = passage.doc_id;
            pair.passage_id = passage.id;
            pair.passage_text = passage.text;
            pair.answer_start = g.answer_start;
            pair.origin = Origin::Auto;
            pair.generator_score = g.score;
            if (evaluator) pair.evaluator_score = evaluator->evaluate(g.question, g.answer, passage.text);
            out.push_back(std::move(pair));
        }
    }
    return out;
}

std::string default_group_key(const QAPair& pair) {
    if (pair.source == Source::Srs) return "srs:" + pair.doc_id;
    return "corpus:" + pair.domain;
}

std::vector<QAPair> filter_top_fraction(std::vector<QAPair> pairs, const Evaluator& evaluator,
                                        double fraction, const GroupKey& group) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must be in (0, 1]");
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<std::string> order;
    std::map<std::string, std::vector<QAPair>> groups;
    for (auto& p : pairs) {
        if (!seen.emplace(p.question, p.answer).second) continue;
        p.evaluator_score = evaluator.evaluate(p.question, p.answer, p.passage_text);
        auto key = group(p);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(std::move(p));
    }
    std::vector<QAPair> out;
    for (const auto& key : order) {
        auto& g = groups[key];
        std::sort(g.begin(), g.end(), [](const QAPair& a, const QAPair& b) {
            if (a.evaluator_score != b.evaluator_score) return a.evaluator_score > b.evaluator_score;
            return a.id < b.id;
        });
        // The epsilon absorbs representation error, e.g. 0.05 * 40.
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(g.size()) - 1e-9)));
        for (std::size_t i = 0; i < keep && i < g.size(); ++i) out.push_back(std::move(g[i]));
    }
    return out;
}

std::vector<QAPair> apply_validation(std::vector<QAPair> pairs, const std::vector<Annotation>& labels,
                                     std::vector<QAPair> manual_pairs) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < pairs.size(); ++i) index.emplace(pairs[i].id, i);
    std::vector<std::string> unknown;
    for (const auto& a : labels) {
        if (!index.count(a.pair_id)) unknown.push_back(a.pair_id);
    }
    if (!unknown.empty()) {
        std::string msg = "annotations reference unknown pair ids:";
        for (const auto& id : unknown) msg += " " + id;
        throw DataError(msg);
    }
    for (const auto& a : labels) {
        auto& p = pairs[index[a.pair_id]];
        p.question_label = a.question_label;
        p.answer_label = a.answer_label;
        if (a.question_label == QuestionLabel::Rephrased) {
            if (!a.rephrased_question) throw DataError("pair " + a.pair_id + " is rephrased without a new question");
            p.question = *a.rephrased_question;
        }
        if (a.answer_label == AnswerLabel::Corrected) {
            if (!a.corrected_answer) throw DataError("pair " + a.pair_id + " is corrected without a new answer");
            p.answer = *a.corrected_answer;
            p.answer_start.reset();
            if (const auto pos = p.passage_text.find(p.answer); pos != std::string::npos) p.answer_start = pos;
        }
    }
    std::vector<QAPair> out;
    for (auto& p : pairs) {
        if (p.valid()) out.push_back(std::move(p));
    }
    for (auto& m : manual_pairs) {
        m.origin = Origin::Manual;
        out.push_back(std::move(m));
    }
    return out;
}

double simplified_bleu(std::string_view q1, std::string_view q2) {
    const auto a = word_terms(q1);
    const auto b = word_terms(q2);
    if (a.empty() || b.empty()) throw InvalidArgument("simplified_bleu needs two non-empty questions");
    std::unordered_map<std::string, int> counts;
    for (const auto& t : b) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : a) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

// --------------------------------------------------------------------------
// Files

namespace {

template <typename F>
void for_each_line(std::string_view jsonl, F&& f) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        if (nl == std::string_view::npos) nl = jsonl.size();
        const auto line = trim(jsonl.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

std::string write_dataset(const std::vector<QAPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        json row = {{"id", p.id},
                    {"domain", p.domain},
                    {"source", to_string(p.source)},
                    {"doc_id", p.doc_id},
                    {"passage_id", p.passage_id},
                    {"passage_text", p.passage_text},
                    {"question", p.question},
                    {"answer", p.answer},
                    {"origin", to_string(p.origin)}};
        if (p.answer_start) row["answer_start"] = *p.answer_start;
        if (p.origin == Origin::Auto) {
            row["generator_score"] = p.generator_score;
            row["evaluator_score"] = p.evaluator_score;
        }
        out += row.dump() + "\n";
    }
    return out;
}

std::vector<QAPair> read_dataset(std::string_view jsonl) {
    std::vector<QAPair> out;
    std::set<std::string> ids;
    for_each_line(jsonl, [&](const json& row) {
        QAPair p;
        p.id = row.at("id").get<std::string>();
        p.domain = row.value("domain", std::string{});
        p.source = source_from_string(row.at("source").get<std::string>());
        p.doc_id = row.at("doc_id").get<std::string>();
        p.passage_id = row.at("passage_id").get<std::string>();
        p.passage_text = row.at("passage_text").get<std::string>();
        p.question = row.at("question").get<std::string>();
        p.answer = row.at("answer").get<std::string>();
        p.origin = origin_from_string(row.value("origin", std::string("auto")));
        if (row.contains("answer_start")) p.answer_start = row.at("answer_start").get<std::size_t>();
        p.generator_score = row.value("generator_score", 0.0);
        p.evaluator_score = row.value("evaluator_score", 0.0);
        if (!ids.insert(p.id).second) throw DataError("duplicate dataset id: " + p.id);
        out.push_back(std::move(p));
    });
    return out;
}

std::vector<Annotation> read_annotations(std::string_view jsonl) {
    std::vector<Annotation> out;
    for_each_line(jsonl, [&](const json& row) {
        Annotation a;
        a.pair_id = row.at("pair_id").get<std::string>();
        a.question_label = question_label_from_string(row.value("question_label", std::string("valid")));
        a.answer_label = answer_label_from_string(row.value("answer_label", std::string("correct")));
        if (row.contains("rephrased_question")) a.rephrased_question = row.at("rephrased_question").get<std::string>();
        if (row.contains("corrected_answer")) a.corrected_answer = row.at("corrected_answer").get<std::string>();
        out.push_back(std::move(a));
    });
    return out;
}

std::string write_annotations(const std::vector<Annotation>& labels) {
    std::string out;
    for (const auto& a : labels) {
        json row = {{"pair_id", a.pair_id},
                    {"question_label", to_string(a.question_label)},
                    {"answer_label", to_string(a.answer_label)}};
        if (a.rephrased_question) row["rephrased_question"] = *a.rephrased_question;
        if (a.corrected_answer) row["corrected_answer"] = *a.corrected_answer;
        out += row.dump() + "\n";
    }
    return out;
}

}  // namespace reqqa
