#include "reqqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "reqqa/error.hpp"

namespace reqqa {

using nlohmann::json;
namespace fs = std::filesystem;

// --------------------------------------------------------------------------
// RankedHits

void sort_hits(std::vector<Hit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
}

std::optional<std::size_t> RankedHits::rank_of(std::string_view id) const {
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (hits[i].id == id) return i + 1;
    }
    return std::nullopt;
}

RankedHits RankedHits::top(std::size_t k) const {
    RankedHits out{query_id, {}};
    const auto n = std::min(k, hits.size());
    out.hits.assign(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

std::vector<ItemId> RankedHits::ids() const {
    std::vector<ItemId> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(h.id);
    return out;
}

// --------------------------------------------------------------------------
// Corpus

void Corpus::add(CorpusDocument doc) {
    if (find(doc.id)) throw DataError("duplicate corpus document id: " + doc.id);
    documents_.push_back(std::move(doc));
}

const CorpusDocument* Corpus::find(std::string_view id) const {
    for (const auto& d : documents_) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

std::vector<Item> Corpus::items() const {
    std::vector<Item> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) out.push_back({d.id, d.title + "\n\n" + d.text});
    return out;
}

json to_json(const Corpus& corpus) {
    json docs = json::array();
    for (const auto& d : corpus.documents()) {
        json row = {{"id", d.id}, {"title", d.title}, {"text", d.text}};
        if (!d.keywords.empty()) row["keywords"] = d.keywords;
        docs.push_back(std::move(row));
    }
    return {{"domain", corpus.domain()}, {"documents", std::move(docs)}};
}

Corpus corpus_from_json(const json& j) {
    try {
        Corpus corpus(j.value("domain", std::string{}));
        for (const auto& d : j.at("documents")) {
            CorpusDocument doc;
            doc.id = d.at("id").get<std::string>();
            doc.title = d.value("title", doc.id);
            doc.text = d.at("text").get<std::string>();
            doc.keywords = d.value("keywords", std::vector<std::string>{});
            corpus.add(std::move(doc));
        }
        return corpus;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed corpus manifest: ") + e.what());
    }
}

using io::read_file;
using io::write_file;

Corpus load_corpus(const std::string& path) {
    const fs::path p(path);
    if (fs::is_directory(p)) {
        if (fs::exists(p / "manifest.json")) return load_corpus((p / "manifest.json").string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(p)) {
            if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        Corpus corpus(p.filename().string());
        for (const auto& f : files) {
            const auto stem = f.stem().string();
            auto title = stem;
            std::replace(title.begin(), title.end(), '_', ' ');
            corpus.add({stem, title, read_file(f), {}});
        }
        return corpus;
    }
    if (!fs::exists(p)) throw ResourceError("corpus not found: " + path);
    json j;
    try {
        j = json::parse(read_file(p));
    } catch (const json::parse_error& e) {
        throw DataError("corpus manifest " + path + ": " + e.what());
    }
    return corpus_from_json(j);
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    write_file(path, to_json(corpus).dump(2) + "\n");
}

// --------------------------------------------------------------------------
// Dense

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw InvalidArgument("embedding dimension must be >= 1");
}

std::pair<std::size_t, double> HashingEmbedder::slot(std::string_view feature) const noexcept {
    const auto h = fnv1a64(feature);
    const auto bucket = static_cast<std::size_t>(h % dimension_);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    return {bucket, sign};
}

std::vector<double> HashingEmbedder::embed(std::string_view text) const {
    std::vector<double> v(dimension_, 0.0);
    const auto terms = word_terms(text);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto [b1, s1] = slot("u:" + terms[i]);
        v[b1] += s1;
        if (i + 1 < terms.size()) {
            const auto [b2, s2] = slot("b:" + terms[i] + " " + terms[i + 1]);
            v[b2] += s2;
        }
    }
    double sq = 0.0;
    for (const double x : v) sq += x * x;
    if (sq > 0.0) {
        const double norm = std::sqrt(sq);
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("cosine: dimension mismatch");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

DenseIndex DenseIndex::build(std::shared_ptr<const Embedder> embedder, std::span<const Item> items) {
    if (!embedder) throw InvalidArgument("dense index requires an embedder");
    DenseIndex index;
    index.embedder_ = std::move(embedder);
    for (const auto& item : items) {
        index.ids_.push_back(item.id);
        auto v = index.embedder_->embed(item.text);
        if (v.size() != index.embedder_->dimension()) {
            throw DataError("embedder returned a vector of the wrong dimension");
        }
        index.vectors_.push_back(std::move(v));
    }
    return index;
}

RankedHits DenseIndex::rank(std::string_view query) const {
    const auto q = embedder_->embed(query);
    RankedHits out;
    for (std::size_t i = 0; i < ids_.size(); ++i) out.hits.push_back({ids_[i], cosine(q, vectors_[i])});
    sort_hits(out.hits);
    return out;
}

RankedHits dense_rank(const Embedder& embedder, std::span<const Item> items, std::string_view query) {
    // Non-owning alias; the index does not outlive this call.
    std::shared_ptr<const Embedder> alias(std::shared_ptr<const Embedder>{}, &embedder);
    return DenseIndex::build(alias, items).rank(query);
}

// --------------------------------------------------------------------------
// Reranking

double OverlapF1Scorer::score(std::string_view question, std::string_view passage) const {
    const auto q = content_terms(question);
    const auto p = content_terms(passage);
    if (q.empty() || p.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& t : q) ++counts[t];
    std::size_t overlap = 0;
    for (const auto& t : p) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(q.size());
    return 2.0 * precision * recall / (precision + recall);
}

RankedHits rerank(const RankedHits& base, const CrossScorer& scorer, std::size_t depth,
                  std::string_view question, const TextLookup& text_of) {
    if (depth < 1) throw InvalidArgument("rerank depth must be >= 1");
    RankedHits out{base.query_id, {}};
    const auto n = std::min(depth, base.hits.size());
    out.hits.reserve(base.hits.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = base.hits[i].id;
        out.hits.push_back({id, scorer.score(question, text_of(id))});
    }
    sort_hits(out.hits);
    if (n < base.hits.size()) {
        double floor = out.hits.empty() ? 0.0 : out.hits.back().score;
        for (std::size_t i = n; i < base.hits.size(); ++i) {
            floor -= 1.0;
            out.hits.push_back({base.hits[i].id, floor});
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// Serialized adapters

namespace {

class SerializedEmbedder final : public Embedder {
public:
    explicit SerializedEmbedder(std::shared_ptr<const Embedder> inner) : inner_(std::move(inner)) {}
    std::size_t dimension() const override { return inner_->dimension(); }
    std::vector<double> embed(std::string_view text) const override {
        std::lock_guard lock(mutex_);
        return inner_->embed(text);
    }

private:
    std::shared_ptr<const Embedder> inner_;
    mutable std::mutex mutex_;
};

class SerializedScorer final : public CrossScorer {
public:
    explicit SerializedScorer(std::shared_ptr<const CrossScorer> inner) : inner_(std::move(inner)) {}
    double score(std::string_view question, std::string_view passage) const override {
        std::lock_guard lock(mutex_);
        return inner_->score(question, passage);
    }

private:
    std::shared_ptr<const CrossScorer> inner_;
    mutable std::mutex mutex_;
};

}  // namespace

std::shared_ptr<const Embedder> serialize_if_needed(std::shared_ptr<const Embedder> e) {
    if (!e || e->concurrency_safe()) return e;
    return std::make_shared<SerializedEmbedder>(std::move(e));
}

std::shared_ptr<const CrossScorer> serialize_if_needed(std::shared_ptr<const CrossScorer> s) {
    if (!s || s->concurrency_safe()) return s;
    return std::make_shared<SerializedScorer>(std::move(s));
}

// --------------------------------------------------------------------------
// Retriever facade

std::string_view to_string(RetrieverKind k) noexcept {
    switch (k) {
        case RetrieverKind::Tfidf: return "tfidf";
        case RetrieverKind::Bm25: return "bm25";
        case RetrieverKind::Dense: return "dense";
        case RetrieverKind::Rerank: return "rerank";
    }
    return "bm25";
}

RetrieverKind retriever_from_string(std::string_view s) {
    const auto v = ascii_lower(s);
    if (v == "tfidf" || v == "tf-idf") return RetrieverKind::Tfidf;
    if (v == "bm25") return RetrieverKind::Bm25;
    if (v == "dense") return RetrieverKind::Dense;
    if (v == "rerank" || v == "reranking") return RetrieverKind::Rerank;
    throw InvalidArgument("unknown retriever '" + std::string(s) + "'");
}

RetrieverOptions default_passage_options() {
    RetrieverOptions o;
    o.kind = RetrieverKind::Rerank;
    return o;
}

Retriever Retriever::build(std::vector<Item> items, RetrieverOptions options) {
    if (items.empty()) throw InvalidArgument("retriever needs at least one item");
    Retriever r;
    r.options_ = std::move(options);
    r.items_ = std::move(items);
    for (std::size_t i = 0; i < r.items_.size(); ++i) {
        if (!r.by_id_.emplace(r.items_[i].id, i).second) {
            throw DataError("duplicate item id: " + r.items_[i].id);
        }
    }
    switch (r.options_.kind) {
        case RetrieverKind::Tfidf:
            r.tfidf_ = std::make_shared<TfidfIndex>(TfidfIndex::build(r.items_, r.options_.analyzer));
            break;
        case RetrieverKind::Rerank:
            if (!r.options_.scorer) r.options_.scorer = std::make_shared<OverlapF1Scorer>();
            r.options_.scorer = serialize_if_needed(r.options_.scorer);
            [[fallthrough]];
        case RetrieverKind::Bm25:
            r.bm25_ = std::make_shared<Bm25Index>(
                Bm25Index::build(r.items_, r.options_.bm25, r.options_.analyzer));
            break;
        case RetrieverKind::Dense:
            if (!r.options_.embedder) r.options_.embedder = std::make_shared<HashingEmbedder>();
            r.options_.embedder = serialize_if_needed(r.options_.embedder);
            r.dense_ = std::make_shared<DenseIndex>(DenseIndex::build(r.options_.embedder, r.items_));
            break;
    }
    return r;
}

RankedHits Retriever::rank(std::string_view query) const {
    switch (options_.kind) {
        case RetrieverKind::Tfidf: return tfidf_->rank(query);
        case RetrieverKind::Bm25: return bm25_->rank(query);
        case RetrieverKind::Dense: return dense_->rank(query);
        case RetrieverKind::Rerank: {
            const auto base = bm25_->rank(query);
            const TextLookup lookup = [this](std::string_view id) -> std::string_view {
                return items_[by_id_.find(id)->second].text;
            };
            return rerank(base, *options_.scorer, options_.rerank_depth, query, lookup);
        }
    }
    return {};
}

std::vector<std::string> retrieve_document(const Corpus& corpus, std::string_view question,
                                           std::size_t c, RetrieverOptions options) {
    if (corpus.empty()) {
        throw ResourceError("domain corpus is empty; supply or build one before document retrieval");
    }
    if (c < 1) throw InvalidArgument("c must be >= 1");
    const auto retriever = Retriever::build(corpus.items(), std::move(options));
    return retriever.rank(question).top(c).ids();
}

RankedHits retrieve_passages(std::span<const Passage> passages, std::string_view question,
                             std::size_t k, RetrieverOptions options) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (passages.empty()) return {};
    std::vector<Item> items;
    items.reserve(passages.size());
    for (const auto& p : passages) items.push_back({p.id, p.text});
    return Retriever::build(std::move(items), std::move(options)).rank(question).top(k);
}

// --------------------------------------------------------------------------
// Persistence

namespace {

void save_envelope(std::string_view kind, json payload, const std::string& path) {
    const json doc = {{"magic", kIndexMagic},
                      {"format_version", kIndexFormatVersion},
                      {"kind", kind},
                      {"payload", std::move(payload)}};
    write_file(path, doc.dump() + "\n");
}

json load_envelope(std::string_view kind, const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError("index " + path + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("magic", std::string{}) != kIndexMagic) {
        throw DataError("index " + path + ": bad magic");
    }
    if (doc.value("format_version", -1) != kIndexFormatVersion) {
        throw DataError("index " + path + ": unsupported format version");
    }
    if (doc.value("kind", std::string{}) != kind) {
        throw DataError("index " + path + ": expected kind '" + std::string(kind) + "'");
    }
    return doc.at("payload");
}

}  // namespace

void save_index(const TfidfIndex& index, const std::string& path) {
    save_envelope("tfidf", index.to_json(), path);
}

void save_index(const Bm25Index& index, const std::string& path) {
    save_envelope("bm25", index.to_json(), path);
}

TfidfIndex load_tfidf_index(const std::string& path) {
    return TfidfIndex::from_json(load_envelope("tfidf", path));
}

Bm25Index load_bm25_index(const std::string& path) {
    return Bm25Index::from_json(load_envelope("bm25", path));
}

}  // namespace reqqa
