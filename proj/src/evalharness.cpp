#include "reqqa/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "reqqa/error.hpp"
#include "reqqa/pipeline.hpp"

namespace reqqa {

using nlohmann::json;

// --------------------------------------------------------------------------
// Retrieval metrics

namespace {

void check_judgments(std::span<const RetrievalJudgment> judgments, std::size_t k) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (judgments.empty()) throw InvalidArgument("no judgments to evaluate");
}

}  // namespace

double recall_at_k(std::span<const RetrievalJudgment> judgments, std::size_t k) {
    check_judgments(judgments, k);
    std::size_t hits = 0;
    for (const auto& j : judgments) {
        const auto r = j.ranked.rank_of(j.gold_item_id);
        if (r && *r <= k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(judgments.size());
}

double ndcg_at_k(std::span<const RetrievalJudgment> judgments, std::size_t k) {
    check_judgments(judgments, k);
    double sum = 0.0;
    for (const auto& j : judgments) {
        const auto r = j.ranked.rank_of(j.gold_item_id);
        if (r && *r <= k) sum += 1.0 / std::log2(static_cast<double>(*r) + 1.0);
    }
    return sum / static_cast<double>(judgments.size());
}

// --------------------------------------------------------------------------
// Answer correctness

std::string_view to_string(MatchMode m) noexcept {
    switch (m) {
        case MatchMode::Exact: return "exact";
        case MatchMode::Partial: return "partial";
        case MatchMode::Semantic: return "semantic";
    }
    return "exact";
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::size_t multiset_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::unordered_map<std::string_view, int> counts;
    for (const auto& t : b) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : a) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    return common;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (const char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }
    std::size_t b = 0;
    std::size_t e = out.size();
    while (b < e && (is_ascii_punct(out[b]) || is_space(out[b]))) ++b;
    while (e > b && (is_ascii_punct(out[e - 1]) || is_space(out[e - 1]))) --e;
    return out.substr(b, e - b);
}

std::vector<std::string> evaluation_terms(std::string_view s) {
    auto terms = content_terms(s);
    if (terms.empty()) terms = word_terms(s);
    return terms;
}

bool exact_match(std::string_view pred, std::string_view gold) {
    return !evaluation_terms(gold).empty() && normalize_answer(pred) == normalize_answer(gold);
}

bool partial_match(std::string_view pred, std::string_view gold) {
    return multiset_overlap(evaluation_terms(pred), evaluation_terms(gold)) > 0;
}

bool semantic_match(std::string_view pred, std::string_view gold, const Embedder& embedder, double threshold) {
    const auto a = embedder.embed(pred);
    const auto b = embedder.embed(gold);
    return cosine(a, b) > threshold;
}

bool is_correct(std::string_view pred, std::string_view gold, MatchMode mode, const Embedder* embedder,
                double threshold) {
    switch (mode) {
        case MatchMode::Exact: return exact_match(pred, gold);
        case MatchMode::Partial: return partial_match(pred, gold);
        case MatchMode::Semantic:
            if (!embedder) throw InvalidArgument("semantic matching needs an embedder");
            return semantic_match(pred, gold, *embedder, threshold);
    }
    return false;
}

double answer_accuracy(std::span<const std::string> predictions, std::span<const std::string> golds,
                       MatchMode mode, const Embedder* embedder, double threshold) {
    if (predictions.size() != golds.size()) throw InvalidArgument("predictions and golds differ in length");
    if (golds.empty()) throw InvalidArgument("no answers to evaluate");
    if (mode == MatchMode::Semantic && !embedder) throw InvalidArgument("semantic matching needs an embedder");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        correct += is_correct(predictions[i], golds[i], mode, embedder, threshold) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(golds.size());
}

double token_f1(std::string_view pred, std::string_view gold) {
    if (trim(gold).empty()) throw InvalidArgument("gold answer is empty");
    const auto p = evaluation_terms(pred);
    const auto g = evaluation_terms(gold);
    if (p.empty() || g.empty()) return 0.0;
    const auto common = static_cast<double>(multiset_overlap(p, g));
    if (common == 0.0) return 0.0;
    const double precision = common / static_cast<double>(p.size());
    const double recall = common / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

// --------------------------------------------------------------------------
// Experiments

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kOverall = "overall";

std::string display_name(RetrieverKind k) {
    switch (k) {
        case RetrieverKind::Tfidf: return "TF-IDF";
        case RetrieverKind::Bm25: return "BM25";
        case RetrieverKind::Dense: return "Dense";
        case RetrieverKind::Rerank: return "Reranking";
    }
    return {};
}

/// Resolved collections and gold items for each dataset row.
struct Workspace {
    std::map<std::string, Document> srs;
    std::map<std::string, Corpus> corpora;
    std::map<std::string, std::vector<Passage>> srs_passages;     // by SRS doc id
    std::map<std::string, std::vector<Passage>> corpus_passages;  // by "domain\ncorpus doc id"
    std::vector<std::optional<Passage>> gold;                     // per row
    std::vector<std::string> warnings;
};

std::string corpus_key(const QAPair& row) { return row.domain + "\n" + row.doc_id; }

std::string join_paragraphs(const std::vector<std::string>& texts) {
    std::string out;
    for (const auto& t : texts) {
        if (!out.empty()) out += "\n\n";
        out += t;
    }
    return out;
}

/// Distinct passage texts per key, in dataset order.
std::map<std::string, std::vector<std::string>> passage_texts(const std::vector<QAPair>& rows, Source source,
                                                              bool by_domain) {
    std::map<std::string, std::vector<std::string>> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : rows) {
        if (r.source != source || trim(r.passage_text).empty()) continue;
        const auto key = by_domain ? corpus_key(r) : r.doc_id;
        const std::string text(trim(r.passage_text));
        if (seen.emplace(key, text).second) out[key].push_back(text);
    }
    return out;
}

std::optional<Passage> resolve_gold(const QAPair& row, const std::vector<Passage>& passages) {
    const auto text = trim(row.passage_text);
    if (text.empty()) {
        for (const auto& p : passages) {
            if (p.id == row.passage_id) return p;
        }
        return std::nullopt;
    }
    for (const auto& p : passages) {
        if (p.id == row.passage_id && trim(p.text) == text) return p;
    }
    for (const auto& p : passages) {
        if (trim(p.text) == text) return p;
    }
    for (const auto& p : passages) {
        if (p.text.find(text) != std::string::npos) return p;
    }
    return std::nullopt;
}

Workspace prepare(const ExperimentInputs& inputs, const SplitConfig& split, std::vector<std::string>& excluded) {
    Workspace ws;
    ws.srs = inputs.srs;
    ws.corpora = inputs.corpora;
    const auto& rows = inputs.dataset;

    const auto srs_texts = passage_texts(rows, Source::Srs, false);
    const auto corpus_texts = passage_texts(rows, Source::Corpus, true);
    for (const auto& r : rows) {
        if (r.source == Source::Srs && !ws.srs.count(r.doc_id) && srs_texts.count(r.doc_id)) {
            Document d;
            d.id = r.doc_id;
            d.source = Source::Srs;
            for (const auto& t : srs_texts.at(r.doc_id)) d.paragraphs.push_back({d.paragraphs.size(), t});
            ws.srs.emplace(r.doc_id, std::move(d));
            ws.warnings.push_back("SRS '" + r.doc_id + "' rebuilt from dataset passages");
        }
        if (r.source == Source::Corpus) {
            auto& corpus = ws.corpora[r.domain];
            if (corpus.domain().empty()) corpus.set_domain(r.domain);
            if (!corpus.find(r.doc_id) && corpus_texts.count(corpus_key(r))) {
                corpus.add({r.doc_id, r.doc_id, join_paragraphs(corpus_texts.at(corpus_key(r))), {}});
                ws.warnings.push_back("corpus document '" + r.doc_id + "' rebuilt from dataset passages");
            }
        }
    }

    ws.gold.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::vector<Passage>* passages = nullptr;
        if (r.source == Source::Srs) {
            if (auto it = ws.srs.find(r.doc_id); it != ws.srs.end()) {
                auto [pit, fresh] = ws.srs_passages.try_emplace(r.doc_id);
                if (fresh) pit->second = split_passages(it->second, split);
                passages = &pit->second;
            }
        } else if (const auto cit = ws.corpora.find(r.domain); cit != ws.corpora.end()) {
            if (const auto* doc = cit->second.find(r.doc_id)) {
                auto [pit, fresh] = ws.corpus_passages.try_emplace(corpus_key(r));
                if (fresh) pit->second = split_passages(parse_plain_text(doc->id, doc->text, Source::Corpus), split);
                passages = &pit->second;
            }
        }
        if (!passages) {
            excluded.push_back(r.id);
            ws.warnings.push_back("row " + r.id + ": document '" + r.doc_id + "' not found");
            continue;
        }
        ws.gold[i] = resolve_gold(r, *passages);
        if (!ws.gold[i]) {
            excluded.push_back(r.id);
            ws.warnings.push_back("row " + r.id + ": passage '" + r.passage_id + "' not found");
        }
    }
    return ws;
}

std::vector<Item> passage_items(const std::vector<Passage>& passages) {
    std::vector<Item> items;
    items.reserve(passages.size());
    for (const auto& p : passages) items.push_back({p.id, p.text});
    return items;
}

RetrievalMetrics summarize(const std::vector<RetrievalJudgment>& judgments, const std::vector<std::size_t>& ks) {
    RetrievalMetrics m;
    m.judgments = judgments.size();
    if (judgments.empty()) return m;
    for (const auto k : ks) {
        m.recall[k] = recall_at_k(judgments, k);
        m.ndcg[k] = ndcg_at_k(judgments, k);
    }
    return m;
}

/// Adds one judgment per slice: overall and the row's domain.
using SliceJudgments = std::map<std::string, std::vector<RetrievalJudgment>>;

void add_judgment(SliceJudgments& slices, const QAPair& row, RetrievalJudgment j) {
    if (!row.domain.empty()) slices[row.domain].push_back(j);
    slices[std::string(kOverall)].push_back(std::move(j));
}

std::map<std::string, RetrievalMetrics> summarize(const SliceJudgments& slices, const std::vector<std::size_t>& ks) {
    std::map<std::string, RetrievalMetrics> out;
    for (const auto& [slice, js] : slices) out[slice] = summarize(js, ks);
    return out;
}

template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) {
        pool.emplace_back([&]() {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

ReaderMetrics reader_metrics(const std::vector<std::size_t>& rows, const std::vector<QAPair>& dataset,
                             const std::vector<std::string>& predictions, const Embedder& embedder,
                             double threshold) {
    ReaderMetrics m;
    m.questions = rows.size();
    if (rows.empty()) return m;
    double exact = 0, partial = 0, semantic = 0, f1 = 0;
    for (const auto i : rows) {
        const auto& gold = dataset[i].answer;
        const auto& pred = predictions[i];
        exact += exact_match(pred, gold) ? 1 : 0;
        partial += partial_match(pred, gold) ? 1 : 0;
        semantic += semantic_match(pred, gold, embedder, threshold) ? 1 : 0;
        f1 += token_f1(pred, gold);
    }
    const auto n = static_cast<double>(rows.size());
    m.exact = exact / n;
    m.partial = partial / n;
    m.semantic = semantic / n;
    m.f1 = f1 / n;
    return m;
}

}  // namespace

EvalReport run_experiment(const ExperimentInputs& inputs, const ExperimentConfig& config) {
    if (config.ks.empty()) throw InvalidArgument("no k values to evaluate");
    for (const auto k : config.ks) {
        if (k < 1) throw InvalidArgument("k must be >= 1");
    }
    EvalReport report;
    report.ks = config.ks;
    std::sort(report.ks.begin(), report.ks.end());
    report.ks.erase(std::unique(report.ks.begin(), report.ks.end()), report.ks.end());
    report.rows = inputs.dataset.size();
    const auto max_k = report.ks.back();
    const auto& rows = inputs.dataset;

    auto ws = prepare(inputs, config.split, report.excluded);
    report.warnings = ws.warnings;

    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (ws.gold[i]) live.push_back(i);
    }
    report.evaluated = live.size();
    for (const auto i : live) {
        if (trim(rows[i].answer).empty()) throw DataError("row " + rows[i].id + " has an empty answer");
    }

    // Retrieval grid.
    for (const auto kind : config.retrievers) {
        auto options = config.retriever_options;
        options.kind = kind;
        const auto name = display_name(kind);
        std::map<std::string, Retriever> srs_ret, doc_ret, cpsg_ret;
        SliceJudgments doc_j, srs_j, cpsg_j;
        for (const auto i : live) {
            const auto& r = rows[i];
            const auto& gold = *ws.gold[i];
            if (r.source == Source::Srs) {
                auto it = srs_ret.find(r.doc_id);
                if (it == srs_ret.end()) {
                    it = srs_ret.emplace(r.doc_id, Retriever::build(passage_items(ws.srs_passages.at(r.doc_id)), options))
                             .first;
                }
                add_judgment(srs_j, r, {r.id, gold.id, it->second.rank(r.question).top(max_k)});
            } else {
                auto dit = doc_ret.find(r.domain);
                if (dit == doc_ret.end()) {
                    dit = doc_ret.emplace(r.domain, Retriever::build(ws.corpora.at(r.domain).items(), options)).first;
                }
                add_judgment(doc_j, r, {r.id, r.doc_id, dit->second.rank(r.question).top(max_k)});
                const auto key = corpus_key(r);
                auto pit = cpsg_ret.find(key);
                if (pit == cpsg_ret.end()) {
                    pit = cpsg_ret.emplace(key, Retriever::build(passage_items(ws.corpus_passages.at(key)), options))
                              .first;
                }
                add_judgment(cpsg_j, r, {r.id, gold.id, pit->second.rank(r.question).top(max_k)});
            }
        }
        if (!doc_j.empty()) report.document_retrieval[name] = summarize(doc_j, report.ks);
        if (!srs_j.empty()) report.srs_passages[name] = summarize(srs_j, report.ks);
        if (!cpsg_j.empty()) report.corpus_passages[name] = summarize(cpsg_j, report.ks);
    }

    // Readers.
    auto readers = config.readers;
    if (readers.empty()) readers.push_back(std::make_shared<ReferenceReader>());
    const std::shared_ptr<const Embedder> embedder =
        config.semantic_embedder ? config.semantic_embedder : std::make_shared<HashingEmbedder>();
    const auto semantic = serialize_if_needed(embedder);
    const auto threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());

    // Reading context per row.
    std::vector<std::optional<Passage>> context(rows.size());
    if (config.reader_context == ReaderContext::GoldPassage) {
        context = ws.gold;
    } else {
        const auto passage_options = default_passage_options();
        std::map<std::string, Retriever> doc_ret;
        for (const auto i : live) {
            const auto& r = rows[i];
            std::vector<Passage> pool;
            if (r.source == Source::Srs) {
                pool = ws.srs_passages.at(r.doc_id);
            } else {
                auto dit = doc_ret.find(r.domain);
                if (dit == doc_ret.end()) {
                    dit = doc_ret.emplace(r.domain, Retriever::build(ws.corpora.at(r.domain).items(), {})).first;
                }
                const auto top_doc = dit->second.rank(r.question).top(1).ids().front();
                const auto* doc = ws.corpora.at(r.domain).find(top_doc);
                pool = split_passages(parse_plain_text(doc->id, doc->text, Source::Corpus), config.split);
            }
            const auto ranked = retrieve_passages(pool, r.question, 1, passage_options);
            for (auto& p : pool) {
                if (!ranked.empty() && p.id == ranked.hits.front().id) context[i] = std::move(p);
            }
        }
    }

    std::vector<std::size_t> srs_rows, corpus_rows;
    for (const auto i : live) (rows[i].source == Source::Srs ? srs_rows : corpus_rows).push_back(i);

    for (const auto& reader : readers) {
        std::vector<std::string> predictions(rows.size());
        std::vector<std::string> failures(rows.size());
        const auto t0 = Clock::now();
        parallel_for(live.size(), reader->concurrency_safe() ? threads : 1, [&](std::size_t n) {
            const auto i = live[n];
            if (!context[i]) return;
            try {
                if (auto span = extract_answer(*reader, rows[i].question, *context[i])) predictions[i] = span->text;
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        });
        const auto elapsed = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        for (const auto i : live) {
            if (!failures[i].empty()) {
                report.warnings.push_back("reader " + reader->name() + " failed on " + rows[i].id + ": " + failures[i]);
            }
        }
        ReaderReport rr;
        rr.reader = reader->name();
        rr.overall = reader_metrics(live, rows, predictions, *semantic, config.semantic_threshold);
        rr.srs = reader_metrics(srs_rows, rows, predictions, *semantic, config.semantic_threshold);
        rr.corpus = reader_metrics(corpus_rows, rows, predictions, *semantic, config.semantic_threshold);
        rr.mean_ms = live.empty() ? 0.0 : elapsed / static_cast<double>(live.size());
        report.readers.push_back(std::move(rr));
    }

    // End-to-end timing with the default pipeline.
    if (config.timing && !live.empty()) {
        std::map<std::string, std::string> srs_of_domain;
        for (const auto i : live) {
            if (rows[i].source == Source::Srs) srs_of_domain.try_emplace(rows[i].domain, rows[i].doc_id);
        }
        PipelineConfig pc;
        pc.reader = readers.front();
        pc.split = config.split;
        std::map<std::string, Engine> engines;
        TimingStats t;
        for (const auto i : live) {
            const auto& r = rows[i];
            std::string srs_id = r.source == Source::Srs ? r.doc_id : std::string{};
            if (srs_id.empty()) {
                if (auto it = srs_of_domain.find(r.domain); it != srs_of_domain.end()) srs_id = it->second;
            }
            if (srs_id.empty()) continue;
            auto it = engines.find(srs_id);
            if (it == engines.end()) {
                const auto cit = ws.corpora.find(r.domain);
                it = engines
                         .try_emplace(srs_id, std::vector<Document>{ws.srs.at(srs_id)},
                                      cit != ws.corpora.end() ? cit->second : Corpus{}, pc)
                         .first;
            }
            const auto res = it->second.ask(r.question);
            ++t.questions;
            t.document_retrieval_ms += res.timings.document_retrieval_ms;
            t.splitting_ms += res.timings.splitting_ms;
            t.passage_retrieval_ms += res.timings.passage_retrieval_ms;
            t.answer_extraction_ms += res.timings.answer_extraction_ms;
            t.total_ms += res.timings.total_ms;
        }
        if (t.questions > 0) {
            const auto n = static_cast<double>(t.questions);
            t.document_retrieval_ms /= n;
            t.splitting_ms /= n;
            t.passage_retrieval_ms /= n;
            t.answer_extraction_ms /= n;
            t.total_ms /= n;
            report.timing = t;
        }
    }
    return report;
}

// --------------------------------------------------------------------------
// Output

namespace {

json grid_json(const RetrievalGrid& grid) {
    json out = json::object();
    for (const auto& [retriever, slices] : grid) {
        json s = json::object();
        for (const auto& [slice, m] : slices) {
            json recall = json::object();
            json ndcg = json::object();
            for (const auto& [k, v] : m.recall) recall[std::to_string(k)] = v;
            for (const auto& [k, v] : m.ndcg) ndcg[std::to_string(k)] = v;
            s[slice] = {{"judgments", m.judgments}, {"recall", recall}, {"ndcg", ndcg}};
        }
        out[retriever] = std::move(s);
    }
    return out;
}

json reader_json(const ReaderMetrics& m) {
    return {{"questions", m.questions}, {"exact", m.exact}, {"partial", m.partial}, {"semantic", m.semantic},
            {"f1", m.f1}};
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string lpad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

/// Slices with "overall" last.
std::vector<std::string> slice_order(const RetrievalGrid& grid) {
    std::set<std::string> names;
    for (const auto& [_, slices] : grid) {
        for (const auto& [slice, __] : slices) names.insert(slice);
    }
    std::vector<std::string> out;
    for (const auto& n : names) {
        if (n != kOverall) out.push_back(n);
    }
    if (names.count(std::string(kOverall))) out.emplace_back(kOverall);
    return out;
}

const RetrievalMetrics* lookup(const RetrievalGrid& grid, const std::string& retriever, const std::string& slice) {
    const auto it = grid.find(retriever);
    if (it == grid.end()) return nullptr;
    const auto s = it->second.find(slice);
    return s == it->second.end() ? nullptr : &s->second;
}

std::vector<std::string> retriever_order(const RetrievalGrid& grid) {
    std::vector<std::string> out;
    for (const auto kind : {RetrieverKind::Tfidf, RetrieverKind::Bm25, RetrieverKind::Dense, RetrieverKind::Rerank}) {
        if (grid.count(display_name(kind))) out.push_back(display_name(kind));
    }
    return out;
}

void passage_table(std::ostringstream& os, const std::string& title, const RetrievalGrid& grid,
                   const std::vector<std::size_t>& ks) {
    if (grid.empty()) return;
    os << title << "\n";
    os << pad("", 24);
    for (const auto k : ks) os << lpad("R@" + std::to_string(k), 8) << lpad("nDCG@" + std::to_string(k), 9);
    os << "\n";
    for (const auto& slice : slice_order(grid)) {
        for (const auto& r : retriever_order(grid)) {
            const auto* m = lookup(grid, r, slice);
            if (!m) continue;
            os << pad(slice, 12) << pad(r, 12);
            for (const auto k : ks) os << lpad(pct(m->recall.at(k)), 8) << lpad(pct(m->ndcg.at(k)), 9);
            os << "\n";
        }
    }
    os << "\n";
}

}  // namespace

json to_json(const EvalReport& r) {
    json readers = json::array();
    for (const auto& rr : r.readers) {
        readers.push_back({{"reader", rr.reader},
                           {"overall", reader_json(rr.overall)},
                           {"srs", reader_json(rr.srs)},
                           {"corpus", reader_json(rr.corpus)},
                           {"mean_ms", rr.mean_ms}});
    }
    json out = {{"schema_version", EvalReport::kSchemaVersion},
                {"ks", r.ks},
                {"rows", r.rows},
                {"evaluated", r.evaluated},
                {"document_retrieval", grid_json(r.document_retrieval)},
                {"srs_passages", grid_json(r.srs_passages)},
                {"corpus_passages", grid_json(r.corpus_passages)},
                {"readers", readers},
                {"excluded", r.excluded},
                {"warnings", r.warnings}};
    if (r.timing) {
        out["timing"] = {{"questions", r.timing->questions},
                         {"document_retrieval_ms", r.timing->document_retrieval_ms},
                         {"splitting_ms", r.timing->splitting_ms},
                         {"passage_retrieval_ms", r.timing->passage_retrieval_ms},
                         {"answer_extraction_ms", r.timing->answer_extraction_ms},
                         {"total_ms", r.timing->total_ms}};
    } else {
        out["timing"] = nullptr;
    }
    return out;
}

std::string format_table(const EvalReport& r) {
    std::ostringstream os;
    os << "Rows: " << r.rows << " (evaluated " << r.evaluated << ", excluded " << r.excluded.size() << ")\n\n";

    if (!r.document_retrieval.empty()) {
        const auto retrievers = retriever_order(r.document_retrieval);
        os << "Document retriever R@1\n" << pad("Domain", 14) << lpad("n", 6);
        for (const auto& name : retrievers) os << lpad(name, 11);
        os << "\n";
        for (const auto& slice : slice_order(r.document_retrieval)) {
            const auto* first = lookup(r.document_retrieval, retrievers.front(), slice);
            os << pad(slice, 14) << lpad(std::to_string(first ? first->judgments : 0), 6);
            for (const auto& name : retrievers) {
                const auto* m = lookup(r.document_retrieval, name, slice);
                os << lpad(m ? pct(m->recall.begin()->second) : "-", 11);
            }
            os << "\n";
        }
        os << "\n";
    }

    passage_table(os, "Passage retriever, from the SRS", r.srs_passages, r.ks);
    passage_table(os, "Passage retriever, from the corpus document", r.corpus_passages, r.ks);

    if (!r.readers.empty()) {
        os << "Reader accuracy\n"
           << pad("Model", 16) << lpad("Exact", 8) << lpad("Partial", 9) << lpad("Semantic", 10) << lpad("F1", 8)
           << lpad("ms/q", 10) << "\n";
        for (const auto& rr : r.readers) {
            const auto row = [&](const std::string& label, const ReaderMetrics& m, bool with_time) {
                if (m.questions == 0) return;
                os << pad(label, 16) << lpad(pct(m.exact), 8) << lpad(pct(m.partial), 9) << lpad(pct(m.semantic), 10)
                   << lpad(pct(m.f1), 8);
                if (with_time) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "%.2f", rr.mean_ms);
                    os << lpad(buf, 10);
                }
                os << "\n";
            };
            row(rr.reader, rr.overall, true);
            row("  SRS", rr.srs, false);
            row("  corpus", rr.corpus, false);
        }
        os << "\n";
    }

    if (r.timing) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "Pipeline time per question (ms, n=%zu): document %.2f, splitting %.2f, passages %.2f, "
                      "answers %.2f, total %.2f\n",
                      r.timing->questions, r.timing->document_retrieval_ms, r.timing->splitting_ms,
                      r.timing->passage_retrieval_ms, r.timing->answer_extraction_ms, r.timing->total_ms);
        os << buf;
    }
    return os.str();
}

std::string format_csv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << "section,name,slice,metric,k,value\n";
    const auto grid = [&](const std::string& section, const RetrievalGrid& g) {
        for (const auto& [name, slices] : g) {
            for (const auto& [slice, m] : slices) {
                for (const auto& [k, v] : m.recall) os << section << ',' << name << ',' << slice << ",recall," << k << ',' << v << "\n";
                for (const auto& [k, v] : m.ndcg) os << section << ',' << name << ',' << slice << ",ndcg," << k << ',' << v << "\n";
            }
        }
    };
    grid("document", r.document_retrieval);
    grid("srs_passages", r.srs_passages);
    grid("corpus_passages", r.corpus_passages);
    for (const auto& rr : r.readers) {
        for (const auto& [slice, m] : {std::pair<std::string, const ReaderMetrics*>{"overall", &rr.overall},
                                       {"srs", &rr.srs},
                                       {"corpus", &rr.corpus}}) {
            if (m->questions == 0) continue;
            os << "reader," << rr.reader << ',' << slice << ",exact,," << m->exact << "\n";
            os << "reader," << rr.reader << ',' << slice << ",partial,," << m->partial << "\n";
            os << "reader," << rr.reader << ',' << slice << ",semantic,," << m->semantic << "\n";
            os << "reader," << rr.reader << ',' << slice << ",f1,," << m->f1 << "\n";
        }
    }
    if (r.timing) {
        os << "timing,pipeline,overall,document_retrieval_ms,," << r.timing->document_retrieval_ms << "\n";
        os << "timing,pipeline,overall,splitting_ms,," << r.timing->splitting_ms << "\n";
        os << "timing,pipeline,overall,passage_retrieval_ms,," << r.timing->passage_retrieval_ms << "\n";
        os << "timing,pipeline,overall,answer_extraction_ms,," << r.timing->answer_extraction_ms << "\n";
        os << "timing,pipeline,overall,total_ms,," << r.timing->total_ms << "\n";
    }
    return os.str();
}

}  // namespace reqqa
