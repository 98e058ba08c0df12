#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reqqa/text.hpp"
#include "reqqa/textseg.hpp"

namespace reqqa {

using ItemId = std::string;

/// Anything a retriever can rank: a corpus document or a passage.
struct Item {
    ItemId id;
    std::string text;
};

struct Hit {
    ItemId id;
    double score = 0.0;

    bool operator==(const Hit&) const = default;
};

/// Hits sorted by score (non-increasing), ties broken by ascending id.
struct RankedHits {
    std::string query_id;
    std::vector<Hit> hits;

    std::size_t size() const noexcept { return hits.size(); }
    bool empty() const noexcept { return hits.empty(); }
    /// 1-based rank of `id`, if present.
    std::optional<std::size_t> rank_of(std::string_view id) const;
    RankedHits top(std::size_t k) const;
    std::vector<ItemId> ids() const;
};

/// Sorts into canonical order: score descending, then id ascending.
void sort_hits(std::vector<Hit>& hits);

// --------------------------------------------------------------------------
// Corpus

struct CorpusDocument {
    std::string id;
    std::string title;
    std::string text;
    std::vector<std::string> keywords;  // provenance: keywords that matched it
};

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::string domain) : domain_(std::move(domain)) {}

    const std::string& domain() const noexcept { return domain_; }
    void set_domain(std::string d) { domain_ = std::move(d); }
    const std::vector<CorpusDocument>& documents() const noexcept { return documents_; }
    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }

    /// Throws DataError on a duplicate id.
    void add(CorpusDocument doc);
    const CorpusDocument* find(std::string_view id) const;

    /// Items indexed for document retrieval: title and body.
    std::vector<Item> items() const;

private:
    std::string domain_;
    std::vector<CorpusDocument> documents_;
};

nlohmann::json to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

/// Loads a JSON manifest {domain, documents:[{id,title,text}]} or a
/// directory of .txt files (id and title from the file stem, sorted by name).
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// --------------------------------------------------------------------------
// Lexical analysis shared by the TF-IDF and BM25 retrievers.

struct Analyzer {
    bool remove_stopwords = true;

    std::vector<std::string> terms(std::string_view text) const;
};

// --------------------------------------------------------------------------
// TF-IDF with smoothed idf, ln((1+N)/(1+df)) + 1, and L2-normalized vectors.

class TfidfIndex {
public:
    using TermId = std::uint32_t;
    using SparseVector = std::vector<std::pair<TermId, double>>;  // sorted by TermId

    static TfidfIndex build(std::span<const Item> items, Analyzer analyzer = {});

    RankedHits rank(std::string_view query) const;

    std::size_t n_docs() const noexcept { return ids_.size(); }
    std::size_t vocabulary_size() const noexcept { return terms_.size(); }
    std::optional<TermId> term_id(std::string_view term) const;
    double idf(std::string_view term) const;
    std::size_t doc_freq(std::string_view term) const;
    /// Normalized weight of `term` in item `id` (0 when absent).
    double weight(std::string_view id, std::string_view term) const;
    const std::vector<ItemId>& ids() const noexcept { return ids_; }
    const SparseVector& vector(std::size_t doc) const { return vectors_.at(doc); }
    SparseVector vectorize(std::string_view text) const;

    nlohmann::json to_json() const;
    static TfidfIndex from_json(const nlohmann::json& j);

private:
    Analyzer analyzer_;
    std::vector<std::string> terms_;  // sorted; TermId indexes this
    std::vector<std::size_t> doc_freq_;
    std::vector<double> idf_;
    std::vector<ItemId> ids_;
    std::vector<SparseVector> vectors_;
};

// --------------------------------------------------------------------------
// Okapi BM25.

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

class Bm25Index {
public:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    static Bm25Index build(std::span<const Item> items, Bm25Params params = {},
                           Analyzer analyzer = {});

    RankedHits rank(std::string_view query) const;

    /// ln(1 + (N - df + 0.5) / (df + 0.5)); always positive.
    double idf(std::string_view term) const;
    std::size_t n_docs() const noexcept { return ids_.size(); }
    double avg_len() const noexcept { return avg_len_; }
    std::size_t doc_len(std::size_t doc) const { return doc_len_.at(doc); }
    const Bm25Params& params() const noexcept { return params_; }
    const std::vector<ItemId>& ids() const noexcept { return ids_; }

    nlohmann::json to_json() const;
    static Bm25Index from_json(const nlohmann::json& j);

private:
    Analyzer analyzer_;
    Bm25Params params_;
    std::vector<ItemId> ids_;
    std::vector<std::size_t> doc_len_;
    double avg_len_ = 0.0;
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
};

/// Single-term BM25 contribution; shared by the index and its callers so the
/// arithmetic is spelled out once.
double bm25_term_score(double idf, double tf, double doc_len, double avg_len,
                       const Bm25Params& params) noexcept;

// --------------------------------------------------------------------------
// Dense retrieval.

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    /// Whether embed() may be called from several threads at once.
    virtual bool concurrency_safe() const { return true; }
};

/// Signed feature hashing of lowercased unigrams and bigrams, L2-normalized.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 1024);

    std::size_t dimension() const override { return dimension_; }
    std::vector<double> embed(std::string_view text) const override;

    /// Bucket and sign of one feature string.
    std::pair<std::size_t, double> slot(std::string_view feature) const noexcept;

private:
    std::size_t dimension_;
};

/// cos(a, b); 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// Pre-embedded items ranked by cosine against the query embedding.
class DenseIndex {
public:
    static DenseIndex build(std::shared_ptr<const Embedder> embedder, std::span<const Item> items);
    RankedHits rank(std::string_view query) const;

private:
    std::shared_ptr<const Embedder> embedder_;
    std::vector<ItemId> ids_;
    std::vector<std::vector<double>> vectors_;
};

RankedHits dense_rank(const Embedder& embedder, std::span<const Item> items, std::string_view query);

// --------------------------------------------------------------------------
// Reranking.

class CrossScorer {
public:
    virtual ~CrossScorer() = default;
    virtual double score(std::string_view question, std::string_view passage) const = 0;
    virtual bool concurrency_safe() const { return true; }
};

/// Multiset F1 between the content terms of question and passage.
class OverlapF1Scorer final : public CrossScorer {
public:
    double score(std::string_view question, std::string_view passage) const override;
};

using TextLookup = std::function<std::string_view(std::string_view id)>;

/// Re-scores the top `depth` hits of `base` and sorts them; the remaining hits
/// keep their base order and are scored strictly below the reranked block.
RankedHits rerank(const RankedHits& base, const CrossScorer& scorer, std::size_t depth,
                  std::string_view question, const TextLookup& text_of);

// --------------------------------------------------------------------------
// Retriever facade used by the pipeline for both retrieval steps.

enum class RetrieverKind { Tfidf, Bm25, Dense, Rerank };

std::string_view to_string(RetrieverKind k) noexcept;
RetrieverKind retriever_from_string(std::string_view s);

struct RetrieverOptions {
    RetrieverKind kind = RetrieverKind::Bm25;
    Bm25Params bm25{};
    Analyzer analyzer{};
    std::size_t rerank_depth = 10;
    std::shared_ptr<const Embedder> embedder;   // Dense; defaults to HashingEmbedder
    std::shared_ptr<const CrossScorer> scorer;  // Rerank; defaults to OverlapF1Scorer
};

/// Wraps a non-thread-safe embedder/scorer so calls are serialized.
std::shared_ptr<const Embedder> serialize_if_needed(std::shared_ptr<const Embedder> e);
std::shared_ptr<const CrossScorer> serialize_if_needed(std::shared_ptr<const CrossScorer> s);

/// An immutable ranker over a fixed item set. Construction is exclusive;
/// rank() may run concurrently afterwards.
class Retriever {
public:
    static Retriever build(std::vector<Item> items, RetrieverOptions options = {});

    /// Full ranking over every item.
    RankedHits rank(std::string_view query) const;
    RetrieverKind kind() const noexcept { return options_.kind; }
    std::size_t size() const noexcept { return items_.size(); }
    const Bm25Index* bm25() const noexcept { return bm25_.get(); }

private:
    RetrieverOptions options_;
    std::vector<Item> items_;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    std::shared_ptr<const TfidfIndex> tfidf_;
    std::shared_ptr<const Bm25Index> bm25_;
    std::shared_ptr<const DenseIndex> dense_;
};

/// Step 1: ids of the top-c corpus documents (default BM25). Throws
/// ResourceError on an empty corpus.
std::vector<std::string> retrieve_document(const Corpus& corpus, std::string_view question,
                                           std::size_t c = 1, RetrieverOptions options = {});

RetrieverOptions default_passage_options();

/// Step 3: the top-k passages (default BM25 + rerank). k larger than the
/// passage count returns them all.
RankedHits retrieve_passages(std::span<const Passage> passages, std::string_view question,
                             std::size_t k = 3, RetrieverOptions options = default_passage_options());

// --------------------------------------------------------------------------
// Index persistence: {"magic", "format_version", "kind", "payload"}.

inline constexpr std::string_view kIndexMagic = "reqqa-index";
inline constexpr int kIndexFormatVersion = 1;

void save_index(const TfidfIndex& index, const std::string& path);
void save_index(const Bm25Index& index, const std::string& path);
TfidfIndex load_tfidf_index(const std::string& path);
Bm25Index load_bm25_index(const std::string& path);

}  // namespace reqqa
