#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "reqqa/corpus.hpp"
#include "reqqa/error.hpp"

using namespace reqqa;

namespace {

Document doc(const std::string& id, const std::string& text) { return parse_plain_text(id, text); }

const Concept* find(const std::vector<Concept>& cs, const std::string& phrase) {
    for (const auto& c : cs) {
        if (c.phrase == phrase) return &c;
    }
    return nullptr;
}

class CountingFetcher final : public ArticleFetcher {
public:
    explicit CountingFetcher(std::vector<Article> articles) : inner_(std::move(articles)) {}
    std::vector<Article> search(const std::string& keyword) override {
        ++calls;
        if (keyword == "explode") throw ResourceError("boom");
        return inner_.search(keyword);
    }
    std::atomic<int> calls{0};

private:
    FixtureFetcher inner_;
};

class FailingFetcher final : public ArticleFetcher {
public:
    std::vector<Article> search(const std::string&) override { throw ResourceError("offline"); }
};

}  // namespace

TEST(Concepts, RepeatedBigramRanksFirst) {
    const auto cs = extract_concepts({doc("a", "navigation camera. navigation camera. navigation camera.")});
    ASSERT_FALSE(cs.empty());
    EXPECT_EQ(cs[0].phrase, "navigation camera");
}

TEST(Concepts, GenericHeadExcludedSpecificKept) {
    const auto cs = extract_concepts({doc("a", "The navigation camera shall start. The camera shall stop.")});
    const auto* camera = find(cs, "camera");
    ASSERT_NE(camera, nullptr);
    EXPECT_TRUE(camera->generic);
    const auto kws = select_keywords(cs);
    EXPECT_EQ(std::count(kws.begin(), kws.end(), "camera"), 0);
    EXPECT_EQ(std::count(kws.begin(), kws.end(), "navigation camera"), 1);
}

TEST(Concepts, TwoDocumentHandTable) {
    const auto cs = extract_concepts({doc("a", "Star tracker. Star tracker calibration."), doc("b", "Star map.")});
    const double rare = std::log(3.0 / 2.0) + 1.0;  // df 1 of 2
    const double common = std::log(3.0 / 3.0) + 1.0;  // df 2 of 2
    struct Row {
        const char* phrase;
        std::size_t tf, df;
        double tfidf;
    };
    const Row table[] = {
        {"star", 3, 2, 3 * common},
        {"tracker", 2, 1, 2 * rare},
        {"star tracker", 2, 1, 2 * rare},
        {"calibration", 1, 1, rare},
        {"tracker calibration", 1, 1, rare},
        {"star tracker calibration", 1, 1, rare},
        {"map", 1, 1, rare},
        {"star map", 1, 1, rare},
    };
    EXPECT_EQ(cs.size(), std::size(table));
    for (const auto& row : table) {
        const auto* c = find(cs, row.phrase);
        ASSERT_NE(c, nullptr) << row.phrase;
        EXPECT_EQ(c->tf, row.tf) << row.phrase;
        EXPECT_EQ(c->df, row.df) << row.phrase;
        EXPECT_NEAR(c->tfidf, row.tfidf, 1e-12) << row.phrase;
    }
    EXPECT_EQ(cs[0].phrase, "star");
    EXPECT_EQ(cs[1].phrase, "star tracker");  // longer phrase first on a tie
    EXPECT_EQ(cs[2].phrase, "tracker");
}

TEST(Concepts, NumbersAndStopwordsBreakPhrases) {
    const auto cs = extract_concepts({doc("a", "thermal 42 blanket of kapton")});
    EXPECT_EQ(find(cs, "thermal blanket"), nullptr);
    EXPECT_EQ(find(cs, "blanket kapton"), nullptr);
    EXPECT_EQ(find(cs, "42"), nullptr);
    EXPECT_NE(find(cs, "kapton"), nullptr);
    EXPECT_THROW(extract_concepts({}), InvalidArgument);
}

TEST(Keywords, FewerThanN) {
    std::vector<Concept> cs;
    for (int i = 0; i < 10; ++i) cs.push_back({"k" + std::to_string(i), 10.0 - i});
    EXPECT_EQ(select_keywords(cs, 50).size(), 10u);
}

TEST(Keywords, PrefixOfSixty) {
    std::vector<Concept> cs;
    for (int i = 0; i < 60; ++i) cs.push_back({"k" + std::to_string(100 + i), 100.0 - i});
    const auto kws = select_keywords(cs, 50);
    ASSERT_EQ(kws.size(), 50u);
    EXPECT_EQ(kws.front(), "k100");
    EXPECT_EQ(kws.back(), "k149");
}

TEST(Keywords, TieAtBoundaryIsLexicographic) {
    const auto cs = extract_concepts({doc("a", "zeta. alpha. mu. beta.")});
    EXPECT_EQ(select_keywords(cs, 2), (std::vector<std::string>{"alpha", "beta"}));
}

TEST(Fetcher, FixtureDirectory) {
    FixtureFetcher f(fixture::data_dir() / "wiki");
    const auto hits = f.search("wet mass");
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].title, "Wet mass");
    EXPECT_THROW(FixtureFetcher(fixture::data_dir() / "nope"), ResourceError);
}

TEST(Assemble, TitleOverlapFilter) {
    FixtureFetcher f(fixture::data_dir() / "wiki");
    const auto corpus = assemble_corpus({"wet mass"}, f, {.domain = "space"});
    EXPECT_NE(corpus.find("wet_mass"), nullptr);
    for (const auto& d : corpus.documents()) EXPECT_NE(d.title, "History of painting");
    // the painting article is a search hit, only the title filter removes it
    bool painting_hit = false;
    for (const auto& a : f.search("wet mass")) painting_hit = painting_hit || a.title == "History of painting";
    EXPECT_TRUE(painting_hit);
    EXPECT_EQ(corpus.domain(), "space");
}

TEST(Assemble, DeduplicatesWithProvenance) {
    FixtureFetcher f(fixture::data_dir() / "wiki");
    const std::vector<std::string> kws = {"wet mass", "dry mass", "spacecraft mass", "navigation camera",
                                          "propellant mass"};
    AssembleReport report;
    const auto corpus = assemble_corpus(kws, f, {.domain = "space"}, &report);
    std::set<std::string> titles;
    for (const auto& d : corpus.documents()) EXPECT_TRUE(titles.insert(d.title).second) << d.title;
    const auto* wet = corpus.find("wet_mass");
    ASSERT_NE(wet, nullptr);
    EXPECT_EQ(wet->keywords, (std::vector<std::string>{"wet mass", "dry mass", "spacecraft mass", "propellant mass"}));
    const auto* cam = corpus.find("navigation_camera");
    ASSERT_NE(cam, nullptr);
    EXPECT_EQ(cam->keywords, (std::vector<std::string>{"navigation camera"}));
    EXPECT_EQ(report.fetch_calls, 5u);
    EXPECT_TRUE(report.failed_keywords.empty());
}

TEST(Assemble, PartialAndTotalFailure) {
    CountingFetcher f(std::vector<Article>{{"Wet mass", "Wet mass text."}});
    AssembleReport report;
    const auto corpus = assemble_corpus({"wet mass", "explode"}, f, {}, &report);
    EXPECT_EQ(corpus.size(), 1u);
    EXPECT_EQ(report.failed_keywords, (std::vector<std::string>{"explode"}));
    EXPECT_EQ(report.warnings.size(), 1u);
    FailingFetcher dead;
    EXPECT_THROW(assemble_corpus({"a", "b"}, dead), ResourceError);
}

TEST(Cache, WarmCacheSkipsInnerFetcher) {
    fixture::TempDir dir;
    auto inner = std::make_shared<CountingFetcher>(std::vector<Article>{{"Wet mass", "Body one."},
                                                                        {"Dry mass", "Body two."}});
    CachingFetcher cache(inner, dir.path());
    const auto cold = cache.search("mass");
    EXPECT_EQ(inner->calls.load(), 1);
    const auto warm = cache.search("mass");
    EXPECT_EQ(inner->calls.load(), 1);
    EXPECT_EQ(cold, warm);
    CachingFetcher again(inner, dir.path());
    EXPECT_EQ(again.search("mass"), cold);
    EXPECT_EQ(inner->calls.load(), 1);
}

TEST(WikiApi, SearchThenExtracts) {
    httplib::Server server;
    std::atomic<int> requests{0};
    server.Get("/w/api.php", [&](const httplib::Request& req, httplib::Response& res) {
        ++requests;
        nlohmann::json body;
        if (req.get_param_value("list") == "search") {
            EXPECT_EQ(req.get_param_value("srsearch"), "wet mass");
            body = {{"query", {{"search", {{{"title", "Wet mass"}}, {{"title", "Dry mass"}}}}}}};
        } else {
            const auto title = req.get_param_value("titles");
            body = {{"query", {{"pages", {{"1", {{"title", title}, {"extract", title + " explained."}}}}}}}};
        }
        res.set_content(body.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string endpoint = "http://127.0.0.1:" + std::to_string(port) + "/w/api.php";
    setenv(kWikiApiEnv, endpoint.c_str(), 1);
    WikiApiFetcher f({.endpoint = "", .max_results = 5, .requests_per_second = 1000.0, .timeout_seconds = 5});
    unsetenv(kWikiApiEnv);
    const auto got = f.search("wet mass");
    server.stop();
    t.join();
    ASSERT_EQ(got.size(), 2u);
    EXPECT_EQ(got[0], (Article{"Wet mass", "Wet mass explained."}));
    EXPECT_EQ(requests.load(), 3);
}

TEST(WikiApi, UnreachableIsResourceError) {
    WikiApiFetcher f({.endpoint = "http://127.0.0.1:1/api.php", .max_results = 1, .requests_per_second = 100.0,
                      .timeout_seconds = 2});
    EXPECT_THROW(f.search("x"), ResourceError);
    EXPECT_THROW(WikiApiFetcher({.endpoint = "no-scheme"}), InvalidArgument);
}

TEST(Sampling, SeededSubsetInCorpusOrder) {
    Corpus c;
    for (int i = 0; i < 20; ++i) c.add({"d" + std::to_string(100 + i), "t", "x", {}});
    const auto a = sample_documents(c, 5, 42);
    const auto b = sample_documents(c, 5, 42);
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
    for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].id, a[i].id);
    EXPECT_EQ(sample_documents(c, 50, 1).size(), 20u);
}

TEST(Slug, Basic) {
    EXPECT_EQ(slugify("Wet mass"), "wet_mass");
    EXPECT_EQ(slugify("  C++ (language)!"), "c_language");
    EXPECT_EQ(slugify("!!!"), "article");
}
