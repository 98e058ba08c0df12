#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "reqqa/error.hpp"
#include "reqqa/retrieval.hpp"

namespace reqqa {

using nlohmann::json;

std::vector<std::string> Analyzer::terms(std::string_view text) const {
    if (remove_stopwords) return content_terms(text);
    return word_terms(text);
}

// --------------------------------------------------------------------------
// TF-IDF

namespace {

// Normalizes in TermId order so every caller sums in the same sequence.
void l2_normalize(TfidfIndex::SparseVector& v) {
    double sq = 0.0;
    for (const auto& [id, w] : v) sq += w * w;
    if (sq <= 0.0) {
        v.clear();
        return;
    }
    const double norm = std::sqrt(sq);
    for (auto& [id, w] : v) w /= norm;
}

double sparse_dot(const TfidfIndex::SparseVector& a, const TfidfIndex::SparseVector& b) {
    double dot = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return dot;
}

}  // namespace

TfidfIndex TfidfIndex::build(std::span<const Item> items, Analyzer analyzer) {
    if (items.empty()) throw InvalidArgument("TF-IDF index needs at least one item");
    TfidfIndex index;
    index.analyzer_ = analyzer;

    std::vector<std::map<std::string, std::size_t>> counts;
    counts.reserve(items.size());
    std::map<std::string, std::size_t> df;
    for (const auto& item : items) {
        index.ids_.push_back(item.id);
        auto& tf = counts.emplace_back();
        for (auto& t : analyzer.terms(item.text)) ++tf[std::move(t)];
        for (const auto& [term, n] : tf) ++df[term];
    }

    const double n_docs = static_cast<double>(items.size());
    index.terms_.reserve(df.size());
    for (const auto& [term, f] : df) {
        index.terms_.push_back(term);
        index.doc_freq_.push_back(f);
        index.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(f))) + 1.0);
    }
    for (const auto& tf : counts) {
        SparseVector v;
        v.reserve(tf.size());
        for (const auto& [term, n] : tf) {
            const auto id = *index.term_id(term);
            v.emplace_back(id, static_cast<double>(n) * index.idf_[id]);
        }
        l2_normalize(v);
        index.vectors_.push_back(std::move(v));
    }
    return index;
}

std::optional<TfidfIndex::TermId> TfidfIndex::term_id(std::string_view term) const {
    const auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
    if (it == terms_.end() || *it != term) return std::nullopt;
    return static_cast<TermId>(it - terms_.begin());
}

double TfidfIndex::idf(std::string_view term) const {
    const auto id = term_id(term);
    if (!id) return std::log(1.0 + static_cast<double>(n_docs())) + 1.0;
    return idf_[*id];
}

std::size_t TfidfIndex::doc_freq(std::string_view term) const {
    const auto id = term_id(term);
    return id ? doc_freq_[*id] : 0;
}

double TfidfIndex::weight(std::string_view id, std::string_view term) const {
    const auto tid = term_id(term);
    if (!tid) return 0.0;
    for (std::size_t d = 0; d < ids_.size(); ++d) {
        if (ids_[d] != id) continue;
        for (const auto& [t, w] : vectors_[d]) {
            if (t == *tid) return w;
        }
        return 0.0;
    }
    return 0.0;
}

TfidfIndex::SparseVector TfidfIndex::vectorize(std::string_view text) const {
    std::map<TermId, std::size_t> tf;
    for (const auto& t : analyzer_.terms(text)) {
        if (const auto id = term_id(t)) ++tf[*id];
    }
    SparseVector v;
    for (const auto& [id, n] : tf) v.emplace_back(id, static_cast<double>(n) * idf_[id]);
    l2_normalize(v);
    return v;
}

RankedHits TfidfIndex::rank(std::string_view query) const {
    const auto q = vectorize(query);
    RankedHits out;
    out.hits.reserve(ids_.size());
    for (std::size_t d = 0; d < ids_.size(); ++d) {
        out.hits.push_back({ids_[d], q.empty() ? 0.0 : sparse_dot(q, vectors_[d])});
    }
    sort_hits(out.hits);
    return out;
}

json TfidfIndex::to_json() const {
    json vectors = json::array();
    for (const auto& v : vectors_) {
        json row = json::array();
        for (const auto& [id, w] : v) row.push_back({id, w});
        vectors.push_back(std::move(row));
    }
    return {{"remove_stopwords", analyzer_.remove_stopwords},
            {"terms", terms_},
            {"doc_freq", doc_freq_},
            {"idf", idf_},
            {"ids", ids_},
            {"vectors", std::move(vectors)}};
}

TfidfIndex TfidfIndex::from_json(const json& j) {
    TfidfIndex index;
    try {
        index.analyzer_.remove_stopwords = j.at("remove_stopwords").get<bool>();
        j.at("terms").get_to(index.terms_);
        j.at("doc_freq").get_to(index.doc_freq_);
        j.at("idf").get_to(index.idf_);
        j.at("ids").get_to(index.ids_);
        for (const auto& row : j.at("vectors")) {
            SparseVector v;
            for (const auto& e : row) v.emplace_back(e.at(0).get<TermId>(), e.at(1).get<double>());
            index.vectors_.push_back(std::move(v));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed TF-IDF index: ") + e.what());
    }
    if (index.terms_.size() != index.idf_.size() || index.ids_.size() != index.vectors_.size()) {
        throw DataError("malformed TF-IDF index: inconsistent array sizes");
    }
    return index;
}

// --------------------------------------------------------------------------
// BM25

double bm25_term_score(double idf, double tf, double doc_len, double avg_len,
                       const Bm25Params& p) noexcept {
    const double norm = avg_len > 0.0 ? doc_len / avg_len : 0.0;
    return idf * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

Bm25Index Bm25Index::build(std::span<const Item> items, Bm25Params params, Analyzer analyzer) {
    if (items.empty()) throw InvalidArgument("BM25 index needs at least one item");
    if (!(params.k1 > 0.0)) throw InvalidArgument("BM25 k1 must be > 0");
    if (params.b < 0.0 || params.b > 1.0) throw InvalidArgument("BM25 b must be in [0, 1]");
    Bm25Index index;
    index.params_ = params;
    index.analyzer_ = analyzer;
    std::size_t total = 0;
    for (std::size_t d = 0; d < items.size(); ++d) {
        index.ids_.push_back(items[d].id);
        const auto terms = analyzer.terms(items[d].text);
        index.doc_len_.push_back(terms.size());
        total += terms.size();
        std::map<std::string, std::uint32_t> tf;
        for (const auto& t : terms) ++tf[t];
        for (const auto& [term, n] : tf) {
            index.postings_[term].push_back({static_cast<std::uint32_t>(d), n});
        }
    }
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(items.size());
    return index;
}

double Bm25Index::idf(std::string_view term) const {
    const auto it = postings_.find(term);
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = static_cast<double>(n_docs());
    return std::max(0.0, std::log(1.0 + (n - df + 0.5) / (df + 0.5)));
}

RankedHits Bm25Index::rank(std::string_view query) const {
    std::vector<double> acc(ids_.size(), 0.0);
    for (const auto& term : analyzer_.terms(query)) {
        const auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& p : it->second) {
            acc[p.doc] += bm25_term_score(w, static_cast<double>(p.tf),
                                          static_cast<double>(doc_len_[p.doc]), avg_len_, params_);
        }
    }
    RankedHits out;
    out.hits.reserve(ids_.size());
    for (std::size_t d = 0; d < ids_.size(); ++d) out.hits.push_back({ids_[d], acc[d]});
    sort_hits(out.hits);
    return out;
}

json Bm25Index::to_json() const {
    json postings = json::object();
    for (const auto& [term, list] : postings_) {
        json row = json::array();
        for (const auto& p : list) row.push_back({p.doc, p.tf});
        postings[term] = std::move(row);
    }
    return {{"remove_stopwords", analyzer_.remove_stopwords},
            {"k1", params_.k1},
            {"b", params_.b},
            {"ids", ids_},
            {"doc_len", doc_len_},
            {"avg_len", avg_len_},
            {"postings", std::move(postings)}};
}

Bm25Index Bm25Index::from_json(const json& j) {
    Bm25Index index;
    try {
        index.analyzer_.remove_stopwords = j.at("remove_stopwords").get<bool>();
        index.params_.k1 = j.at("k1").get<double>();
        index.params_.b = j.at("b").get<double>();
        j.at("ids").get_to(index.ids_);
        j.at("doc_len").get_to(index.doc_len_);
        index.avg_len_ = j.at("avg_len").get<double>();
        for (const auto& [term, row] : j.at("postings").items()) {
            auto& list = index.postings_[term];
            for (const auto& e : row) {
                list.push_back({e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()});
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed BM25 index: ") + e.what());
    }
    if (index.ids_.size() != index.doc_len_.size()) {
        throw DataError("malformed BM25 index: inconsistent array sizes");
    }
    return index;
}

}  // namespace reqqa
