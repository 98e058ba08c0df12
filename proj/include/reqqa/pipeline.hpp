#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reqqa/corpus.hpp"
#include "reqqa/reader.hpp"
#include "reqqa/retrieval.hpp"
#include "reqqa/textseg.hpp"

namespace reqqa {

struct PipelineConfig {
    std::size_t k = 3;  // passages per source
    std::size_t c = 1;  // corpus documents retrieved
    RetrieverOptions document_retriever{};
    RetrieverOptions passage_retriever = default_passage_options();
    std::shared_ptr<const Reader> reader;  // null: ReferenceReader
    SplitConfig split{};
    bool parallel = true;  // run the SRS and corpus branches concurrently

    /// Throws InvalidArgument unless k >= 1 and c >= 1.
    void validate() const;
};

struct PassageHit {
    Passage passage;
    double score = 0.0;  // retriever score
    std::optional<AnswerSpan> answer;
    std::optional<std::string> warning;  // set when the reader failed
};

/// Milliseconds per step, monotonic clock. The per-step values add up the
/// time spent in that step on both sources; total is the wall time of ask().
struct StepTimings {
    double document_retrieval_ms = 0.0;
    double splitting_ms = 0.0;
    double passage_retrieval_ms = 0.0;
    double answer_extraction_ms = 0.0;
    double total_ms = 0.0;
};

struct QAResult {
    std::string question;
    std::vector<PassageHit> srs_hits;     // rank order, at most k
    std::vector<PassageHit> corpus_hits;  // rank order, at most k
    std::vector<std::string> retrieved_doc_ids;
    StepTimings timings;
    std::vector<std::string> warnings;
    bool corpus_missing = false;
};

/// A prepared SRS and corpus: the SRS is split and indexed once, the corpus
/// document index is built once, and ask() can then be called concurrently.
class Engine {
public:
    Engine(std::vector<Document> srs, Corpus corpus, PipelineConfig config = {});

    /// Runs the four steps. `k` overrides config.k when given.
    QAResult ask(std::string_view question, std::optional<std::size_t> k = std::nullopt) const;

    const PipelineConfig& config() const noexcept { return config_; }
    const std::vector<Passage>& srs_passages() const noexcept { return srs_passages_; }
    const Corpus& corpus() const noexcept { return corpus_; }
    double srs_split_ms() const noexcept { return srs_split_ms_; }

    /// Passages of one corpus document, as step 2 produces them. Throws
    /// InvalidArgument for an unknown document.
    std::vector<Passage> corpus_passages(std::string_view doc_id) const;

    /// Looks up an SRS or corpus passage by id.
    std::optional<Passage> find_passage(std::string_view passage_id) const;

    /// Lexical index of the SRS passages, when the passage retriever has one.
    const Bm25Index* srs_index() const noexcept;
    /// Lexical index of the corpus documents, when the document retriever has one.
    const Bm25Index* corpus_index() const noexcept;

private:
    std::vector<PassageHit> read_hits(std::string_view question, const std::vector<Passage>& passages,
                                      const RankedHits& ranked, std::vector<std::string>& warnings) const;

    PipelineConfig config_;
    std::vector<Passage> srs_passages_;
    std::map<std::string, std::size_t, std::less<>> srs_by_id_;
    Corpus corpus_;
    std::optional<Retriever> srs_retriever_;
    std::optional<Retriever> corpus_retriever_;
    std::shared_ptr<const Reader> reader_;
    mutable std::unique_ptr<std::mutex> reader_mutex_;
    double srs_split_ms_ = 0.0;
};

/// One-shot question answering over an SRS and a corpus (which may be
/// empty). Throws InvalidArgument when the SRS has no text.
QAResult ask(std::string_view question, const Document& srs, const Corpus& corpus,
             const PipelineConfig& config = {});

/// Returns `corpus` when supplied. Otherwise extracts keywords from the SRS
/// group and assembles a corpus through `fetcher`; a failed build yields an
/// empty corpus and a warning.
Corpus build_domain_corpus_if_absent(const std::optional<Corpus>& corpus,
                                     const std::vector<Document>& srs_group, ArticleFetcher& fetcher,
                                     const AssembleOptions& options = {},
                                     std::vector<std::string>* warnings = nullptr);

nlohmann::json to_json(const Passage& passage);
nlohmann::json to_json(const AnswerSpan& span);
nlohmann::json to_json(const QAResult& result);

}  // namespace reqqa
