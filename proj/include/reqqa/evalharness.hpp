#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "reqqa/qgen.hpp"
#include "reqqa/reader.hpp"
#include "reqqa/retrieval.hpp"
#include "reqqa/textseg.hpp"

namespace reqqa {

// --------------------------------------------------------------------------
// Retrieval metrics

struct RetrievalJudgment {
    std::string question_id;
    std::string gold_item_id;
    RankedHits ranked;
};

/// Share of judgments whose gold item is within the first k hits.
double recall_at_k(std::span<const RetrievalJudgment> judgments, std::size_t k);

/// Mean of 1/log2(rank+1) for gold ranks within k, 0 otherwise. With a
/// single relevant item the ideal DCG is 1.
double ndcg_at_k(std::span<const RetrievalJudgment> judgments, std::size_t k);

// --------------------------------------------------------------------------
// Answer correctness

enum class MatchMode { Exact, Partial, Semantic };

std::string_view to_string(MatchMode m) noexcept;

/// ASCII casefold, whitespace runs collapsed to one space, leading and
/// trailing punctuation and whitespace removed.
std::string normalize_answer(std::string_view s);

/// Lowercased word tokens without stopwords; all word tokens when every
/// token is a stopword.
std::vector<std::string> evaluation_terms(std::string_view s);

/// Normalized strings equal and non-empty in evaluation terms.
bool exact_match(std::string_view pred, std::string_view gold);
/// At least one shared evaluation term.
bool partial_match(std::string_view pred, std::string_view gold);
/// cosine(embed(pred), embed(gold)) > threshold.
bool semantic_match(std::string_view pred, std::string_view gold, const Embedder& embedder,
                    double threshold = 0.5);

bool is_correct(std::string_view pred, std::string_view gold, MatchMode mode, const Embedder* embedder = nullptr,
                double threshold = 0.5);

/// Correct count over total. Throws InvalidArgument for misaligned or empty
/// lists, or Semantic mode without an embedder.
double answer_accuracy(std::span<const std::string> predictions, std::span<const std::string> golds,
                       MatchMode mode, const Embedder* embedder = nullptr, double threshold = 0.5);

/// Multiset token F1 over evaluation terms. Empty prediction gives 0;
/// a blank gold answer throws InvalidArgument.
double token_f1(std::string_view pred, std::string_view gold);

// --------------------------------------------------------------------------
// Experiments

struct ExperimentInputs {
    std::vector<QAPair> dataset;
    std::map<std::string, Document> srs;   // by doc_id
    std::map<std::string, Corpus> corpora;  // by domain
};

enum class ReaderContext {
    GoldPassage,   // read the passage the pair was written against
    TopRetrieved,  // read the rank-1 passage of the default pipeline
};

struct ExperimentConfig {
    std::vector<RetrieverKind> retrievers = {RetrieverKind::Tfidf, RetrieverKind::Bm25, RetrieverKind::Dense,
                                             RetrieverKind::Rerank};
    std::vector<std::shared_ptr<const Reader>> readers;  // empty: the reference reader
    std::vector<std::size_t> ks = {1, 3, 5, 10};
    RetrieverOptions retriever_options{};  // kind is overridden per run
    SplitConfig split{};
    std::shared_ptr<const Embedder> semantic_embedder;  // null: HashingEmbedder
    double semantic_threshold = 0.5;
    ReaderContext reader_context = ReaderContext::GoldPassage;
    bool timing = true;  // run the default pipeline per SRS question and time its steps
    std::size_t threads = 0;  // 0: hardware concurrency
};

struct RetrievalMetrics {
    std::size_t judgments = 0;
    std::map<std::size_t, double> recall;  // by k, in [0, 1]
    std::map<std::size_t, double> ndcg;
};

/// retriever name -> slice ("overall" or a domain) -> metrics
using RetrievalGrid = std::map<std::string, std::map<std::string, RetrievalMetrics>>;

struct ReaderMetrics {
    std::size_t questions = 0;
    double exact = 0.0;
    double partial = 0.0;
    double semantic = 0.0;
    double f1 = 0.0;
};

struct ReaderReport {
    std::string reader;
    ReaderMetrics overall;
    ReaderMetrics srs;     // questions from the SRS
    ReaderMetrics corpus;  // questions from the domain corpus
    double mean_ms = 0.0;  // per question
};

struct TimingStats {
    std::size_t questions = 0;
    double document_retrieval_ms = 0.0;  // means per question
    double splitting_ms = 0.0;
    double passage_retrieval_ms = 0.0;
    double answer_extraction_ms = 0.0;
    double total_ms = 0.0;
};

struct EvalReport {
    static constexpr int kSchemaVersion = 1;

    std::vector<std::size_t> ks;
    std::size_t rows = 0;
    std::size_t evaluated = 0;
    RetrievalGrid document_retrieval;  // step 1, corpus questions
    RetrievalGrid srs_passages;        // step 3 over the SRS
    RetrievalGrid corpus_passages;     // step 3 over the gold corpus document
    std::vector<ReaderReport> readers;
    std::optional<TimingStats> timing;
    std::vector<std::string> excluded;  // dataset row ids
    std::vector<std::string> warnings;
};

/// Evaluates every retriever and reader over the dataset. Rows whose SRS,
/// corpus document or gold passage cannot be resolved are excluded and
/// warned about. Documents absent from the inputs are rebuilt from the
/// dataset's passage texts, one paragraph per distinct passage.
EvalReport run_experiment(const ExperimentInputs& inputs, const ExperimentConfig& config = {});

nlohmann::json to_json(const EvalReport& report);
/// Plain-text tables: document R@1, passage R/nDCG per k, reader accuracy.
std::string format_table(const EvalReport& report);
/// One metric per line: section,retriever_or_reader,slice,metric,k,value.
std::string format_csv(const EvalReport& report);

}  // namespace reqqa
