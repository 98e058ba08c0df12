#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "reqqa/retrieval.hpp"
#include "reqqa/textseg.hpp"

namespace reqqa {

/// A candidate domain phrase of one to three content words.
struct Concept {
    std::string phrase;  // lowercased, no stopwords
    double tfidf = 0.0;
    bool generic = false;
    std::size_t tf = 0;  // occurrences across the group
    std::size_t df = 0;  // documents of the group containing it
    std::size_t words = 0;
};

struct ConceptOptions {
    std::size_t max_words = 3;
    const WordList* generic_lexicon = nullptr;  // defaults to the shipped list
};

/// Phrase-level TF-IDF over one domain group of SRSs. Candidates are the
/// contiguous 1..max_words n-grams of content words (no stopwords, no
/// numbers, no crossing punctuation). tfidf = tf * (ln((1+N)/(1+df)) + 1).
/// A phrase that is itself a lexicon entry is flagged generic. Sorted by
/// tfidf descending, then longer phrases first, then phrase text.
std::vector<Concept> extract_concepts(const std::vector<Document>& srs_group,
                                      const ConceptOptions& options = {});

/// The top-n non-generic phrases, in concept order.
std::vector<std::string> select_keywords(const std::vector<Concept>& concepts, std::size_t n = 50);

struct Article {
    std::string title;
    std::string text;

    bool operator==(const Article&) const = default;
};

class ArticleFetcher {
public:
    virtual ~ArticleFetcher() = default;
    /// Candidate articles for a keyword. Throws on transport failure.
    virtual std::vector<Article> search(const std::string& keyword) = 0;
};

/// Serves a directory of JSON articles ({title, text}) as a search backend:
/// an article matches when its title or text contains a content word of the
/// keyword; results are ordered by title-word hits, then title.
class FixtureFetcher final : public ArticleFetcher {
public:
    explicit FixtureFetcher(const std::filesystem::path& dir, std::size_t max_results = 10);
    explicit FixtureFetcher(std::vector<Article> articles, std::size_t max_results = 10);

    std::vector<Article> search(const std::string& keyword) override;

private:
    std::vector<Article> articles_;
    std::size_t max_results_;
};

/// Environment variable naming the wiki API endpoint.
inline constexpr const char* kWikiApiEnv = "REQQA_WIKI_API";
inline constexpr const char* kDefaultWikiApi = "https://en.wikipedia.org/w/api.php";

/// MediaWiki-style API: list=search for titles, then prop=extracts with
/// explaintext for each page. Requests to the host are spaced by the rate
/// limit.
class WikiApiFetcher final : public ArticleFetcher {
public:
    struct Options {
        std::string endpoint;  // empty: $REQQA_WIKI_API, else the default
        std::size_t max_results = 5;
        double requests_per_second = 1.0;
        int timeout_seconds = 30;
    };

    explicit WikiApiFetcher(Options options);

    std::vector<Article> search(const std::string& keyword) override;

private:
    nlohmann::json get(const std::vector<std::pair<std::string, std::string>>& params);

    Options options_;
    std::string base_;
    std::string path_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point last_request_{};
};

/// Disk cache in front of another fetcher. Search results are stored per
/// keyword; article bodies are content-addressed by hash. A warm cache
/// answers without touching the inner fetcher.
class CachingFetcher final : public ArticleFetcher {
public:
    CachingFetcher(std::shared_ptr<ArticleFetcher> inner, std::filesystem::path cache_dir);

    std::vector<Article> search(const std::string& keyword) override;

private:
    std::shared_ptr<ArticleFetcher> inner_;
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

struct AssembleOptions {
    std::string domain;
    std::size_t min_title_overlap = 1;  // shared content words between title and keyword
    std::size_t concurrency = 4;
};

struct AssembleReport {
    std::vector<std::string> failed_keywords;
    std::vector<std::string> warnings;
    std::size_t fetch_calls = 0;
};

/// Fetches candidates for every keyword, keeps articles whose title shares
/// enough content words with the keyword, deduplicates by title and records
/// which keywords led to each document. Throws ResourceError when every
/// keyword fetch failed.
Corpus assemble_corpus(const std::vector<std::string>& keywords, ArticleFetcher& fetcher,
                       const AssembleOptions& options = {}, AssembleReport* report = nullptr);

/// Seeded subset of the corpus documents, in corpus order.
std::vector<CorpusDocument> sample_documents(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Lowercase slug used for corpus document ids.
std::string slugify(std::string_view title);

}  // namespace reqqa
