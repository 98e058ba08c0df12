#include "reqqa/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "io.hpp"
#include "reqqa/error.hpp"

namespace reqqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool all_digits(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::set<std::string> content_set(std::string_view text) {
    const auto terms = content_terms(text);
    return {terms.begin(), terms.end()};
}

}  // namespace

// --------------------------------------------------------------------------
// Concepts

std::vector<Concept> extract_concepts(const std::vector<Document>& srs_group,
                                      const ConceptOptions& options) {
    if (srs_group.empty()) throw InvalidArgument("extract_concepts needs at least one SRS");
    const auto& generic = options.generic_lexicon ? *options.generic_lexicon : default_generic_lexicon();
    const auto& stop = default_stopwords();

    std::map<std::string, std::size_t> tf;
    std::map<std::string, std::size_t> df;
    std::map<std::string, std::size_t> words;
    for (const auto& doc : srs_group) {
        std::set<std::string> seen;
        for (const auto& para : doc.paragraphs) {
            // Runs of content words, broken by punctuation, stopwords and numbers.
            std::vector<std::vector<std::string>> runs(1);
            for (const auto& tok : tokenize(para.text)) {
                const auto term = ascii_lower(tok.text);
                const bool usable = tok.is_word() && !stop.contains(term) && !all_digits(term) &&
                                    term.size() > 1;
                if (usable) {
                    runs.back().push_back(term);
                } else if (!runs.back().empty()) {
                    runs.emplace_back();
                }
            }
            for (const auto& run : runs) {
                for (std::size_t i = 0; i < run.size(); ++i) {
                    std::string phrase;
                    for (std::size_t n = 1; n <= options.max_words && i + n <= run.size(); ++n) {
                        if (n > 1) phrase += ' ';
                        phrase += run[i + n - 1];
                        ++tf[phrase];
                        words[phrase] = n;
                        seen.insert(phrase);
                    }
                }
            }
        }
        for (const auto& p : seen) ++df[p];
    }

    const double n_docs = static_cast<double>(srs_group.size());
    std::vector<Concept> out;
    out.reserve(tf.size());
    for (const auto& [phrase, count] : tf) {
        const auto d = df[phrase];
        const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(d))) + 1.0;
        out.push_back({phrase, static_cast<double>(count) * idf, generic.contains(phrase), count, d,
                       words[phrase]});
    }
    std::sort(out.begin(), out.end(), [](const Concept& a, const Concept& b) {
        if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
        if (a.words != b.words) return a.words > b.words;
        return a.phrase < b.phrase;
    });
    return out;
}

std::vector<std::string> select_keywords(const std::vector<Concept>& concepts, std::size_t n) {
    std::vector<std::string> out;
    for (const auto& c : concepts) {
        if (out.size() >= n) break;
        if (!c.generic) out.push_back(c.phrase);
    }
    return out;
}

// --------------------------------------------------------------------------
// Fetchers

FixtureFetcher::FixtureFetcher(const fs::path& dir, std::size_t max_results) : max_results_(max_results) {
    if (!fs::is_directory(dir)) throw ResourceError("fixture directory not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        try {
            const auto j = json::parse(io::read_file(f));
            articles_.push_back({j.at("title").get<std::string>(), j.at("text").get<std::string>()});
        } catch (const json::exception& e) {
            throw DataError("fixture article " + f.string() + ": " + e.what());
        }
    }
}

FixtureFetcher::FixtureFetcher(std::vector<Article> articles, std::size_t max_results)
    : articles_(std::move(articles)), max_results_(max_results) {}

std::vector<Article> FixtureFetcher::search(const std::string& keyword) {
    const auto wanted = content_set(keyword);
    std::vector<std::pair<std::size_t, const Article*>> scored;
    for (const auto& a : articles_) {
        const auto title = content_set(a.title);
        std::size_t title_hits = 0;
        for (const auto& w : wanted) title_hits += title.count(w);
        bool any = title_hits > 0;
        if (!any) {
            const auto body = content_set(a.text);
            any = std::any_of(wanted.begin(), wanted.end(), [&](const auto& w) { return body.count(w) > 0; });
        }
        if (any) scored.emplace_back(title_hits, &a);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second->title < y.second->title;
    });
    std::vector<Article> out;
    for (std::size_t i = 0; i < scored.size() && i < max_results_; ++i) out.push_back(*scored[i].second);
    return out;
}

WikiApiFetcher::WikiApiFetcher(Options options) : options_(std::move(options)) {
    if (options_.endpoint.empty()) {
        const char* env = std::getenv(kWikiApiEnv);
        options_.endpoint = env && *env ? env : kDefaultWikiApi;
    }
    const auto scheme_end = options_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("wiki endpoint needs a scheme");
    const auto path_start = options_.endpoint.find('/', scheme_end + 3);
    base_ = options_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : options_.endpoint.substr(path_start);
    if (options_.requests_per_second <= 0.0) throw InvalidArgument("rate limit must be positive");
}

json WikiApiFetcher::get(const std::vector<std::pair<std::string, std::string>>& params) {
    {
        std::unique_lock lock(rate_mutex_);
        const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / options_.requests_per_second));
        const auto now = std::chrono::steady_clock::now();
        if (last_request_.time_since_epoch().count() != 0 && now < last_request_ + interval) {
            std::this_thread::sleep_until(last_request_ + interval);
        }
        last_request_ = std::chrono::steady_clock::now();
    }
    httplib::Client client(base_);
    client.set_connection_timeout(options_.timeout_seconds);
    client.set_read_timeout(options_.timeout_seconds);
    client.set_follow_location(true);
    httplib::Params query;
    for (const auto& [k, v] : params) query.emplace(k, v);
    const httplib::Headers headers = {{"User-Agent", "reqqa-corpus-builder/0.1"}};
    const auto res = client.Get(path_, query, headers);
    if (!res) throw ResourceError("wiki API unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ResourceError("wiki API returned HTTP " + std::to_string(res->status));
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("wiki API sent invalid JSON: ") + e.what());
    }
}

std::vector<Article> WikiApiFetcher::search(const std::string& keyword) {
    const auto found = get({{"action", "query"},
                            {"list", "search"},
                            {"srsearch", keyword},
                            {"srlimit", std::to_string(options_.max_results)},
                            {"format", "json"}});
    std::vector<Article> out;
    try {
        for (const auto& hit : found.at("query").at("search")) {
            const auto title = hit.at("title").get<std::string>();
            const auto page = get({{"action", "query"},
                                   {"prop", "extracts"},
                                   {"explaintext", "1"},
                                   {"redirects", "1"},
                                   {"titles", title},
                                   {"format", "json"}});
            for (const auto& [id, p] : page.at("query").at("pages").items()) {
                if (p.contains("extract")) {
                    out.push_back({p.value("title", title), p.at("extract").get<std::string>()});
                }
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("unexpected wiki API response: ") + e.what());
    }
    return out;
}

CachingFetcher::CachingFetcher(std::shared_ptr<ArticleFetcher> inner, fs::path cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {}

std::vector<Article> CachingFetcher::search(const std::string& keyword) {
    const auto index_path = dir_ / "search" / (hex64(fnv1a64(keyword)) + ".json");
    if (fs::exists(index_path)) {
        try {
            const auto index = json::parse(io::read_file(index_path));
            std::vector<Article> out;
            for (const auto& ref : index.at("articles")) {
                const auto body = json::parse(io::read_file(dir_ / "articles" / (ref.get<std::string>() + ".json")));
                out.push_back({body.at("title").get<std::string>(), body.at("text").get<std::string>()});
            }
            return out;
        } catch (const std::exception& e) {
            spdlog::warn("cache entry for '{}' unreadable ({}); refetching", keyword, e.what());
        }
    }
    auto articles = inner_->search(keyword);
    std::lock_guard lock(write_mutex_);
    json refs = json::array();
    for (const auto& a : articles) {
        const json body = {{"title", a.title}, {"text", a.text}};
        const auto dumped = body.dump();
        const auto key = hex64(fnv1a64(dumped));
        const auto path = dir_ / "articles" / (key + ".json");
        if (!fs::exists(path)) io::write_file(path, dumped);
        refs.push_back(key);
    }
    io::write_file(index_path, json{{"keyword", keyword}, {"articles", refs}}.dump());
    return articles;
}

// --------------------------------------------------------------------------
// Assembly

std::string slugify(std::string_view title) {
    std::string out;
    bool pending = false;
    for (const char ch : ascii_lower(title)) {
        const bool alnum = (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9');
        if (alnum) {
            if (pending && !out.empty()) out += '_';
            out += ch;
            pending = false;
        } else {
            pending = true;
        }
    }
    return out.empty() ? "article" : out;
}

Corpus assemble_corpus(const std::vector<std::string>& keywords, ArticleFetcher& fetcher,
                       const AssembleOptions& options, AssembleReport* report) {
    struct Outcome {
        std::vector<Article> articles;
        std::string error;
        bool ok = false;
    };
    std::vector<Outcome> outcomes(keywords.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> calls{0};
    auto worker = [&] {
        for (auto i = next++; i < keywords.size(); i = next++) {
            ++calls;
            try {
                outcomes[i].articles = fetcher.search(keywords[i]);
                outcomes[i].ok = true;
            } catch (const std::exception& e) {
                outcomes[i].error = e.what();
            }
        }
    };
    const auto n_threads = std::max<std::size_t>(1, std::min(options.concurrency, keywords.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    AssembleReport local;
    auto& rep = report ? *report : local;
    rep.fetch_calls += calls.load();

    Corpus corpus(options.domain);
    std::map<std::string, std::size_t> by_title;  // normalized title -> document index
    std::vector<CorpusDocument> docs;
    std::set<std::string> used_ids;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        const auto& kw = keywords[i];
        if (!outcomes[i].ok) {
            ++failures;
            rep.failed_keywords.push_back(kw);
            rep.warnings.push_back("fetch failed for '" + kw + "': " + outcomes[i].error);
            spdlog::warn("fetch failed for '{}': {}", kw, outcomes[i].error);
            continue;
        }
        const auto wanted = content_set(kw);
        for (const auto& a : outcomes[i].articles) {
            const auto title_terms = content_set(a.title);
            std::size_t shared = 0;
            for (const auto& w : wanted) shared += title_terms.count(w);
            if (shared < options.min_title_overlap) continue;
            const auto key = ascii_lower(trim(a.title));
            if (const auto it = by_title.find(key); it != by_title.end()) {
                auto& kws = docs[it->second].keywords;
                if (std::find(kws.begin(), kws.end(), kw) == kws.end()) kws.push_back(kw);
                continue;
            }
            auto id = slugify(a.title);
            for (int suffix = 2; used_ids.count(id); ++suffix) id = slugify(a.title) + "_" + std::to_string(suffix);
            used_ids.insert(id);
            by_title.emplace(key, docs.size());
            docs.push_back({id, a.title, a.text, {kw}});
        }
    }
    if (!keywords.empty() && failures == keywords.size()) {
        throw ResourceError("corpus assembly failed: every keyword fetch failed");
    }
    for (auto& d : docs) corpus.add(std::move(d));
    return corpus;
}

std::vector<CorpusDocument> sample_documents(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(corpus.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates with explicit modulo draws keeps results identical
    // across standard library implementations.
    const auto take = std::min(n, idx.size());
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    std::vector<CorpusDocument> out;
    for (const auto i : idx) out.push_back(corpus.documents()[i]);
    return out;
}

}  // namespace reqqa
