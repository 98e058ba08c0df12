#include <gtest/gtest.h>

#include <condition_variable>
#include <future>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "reqqa/error.hpp"
#include "reqqa/service.hpp"

using namespace reqqa;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class StubFetcher final : public ArticleFetcher {
public:
    std::vector<Article> search(const std::string&) override {
        return {{"Wet mass", "Wet mass is the total mass of a spacecraft with propellant."},
                {"Navigation camera", "A navigation camera takes images."}};
    }
};

// Holds every search until release() is called.
class GateFetcher final : public ArticleFetcher {
public:
    std::vector<Article> search(const std::string&) override {
        std::unique_lock lock(m_);
        cv_.wait(lock, [this] { return open_; });
        return {};
    }
    void release() {
        {
            std::lock_guard lock(m_);
            open_ = true;
        }
        cv_.notify_all();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    bool open_ = false;
};

std::string srs_text() { return fixture::read_text(fixture::data_dir() / "srs" / "spacecraft.txt"); }

json space_manifest() { return json::parse(fixture::read_text(fixture::data_dir() / "corpus" / "space.json")); }

ServiceOptions options(const fs::path& dir, std::shared_ptr<ArticleFetcher> fetcher = nullptr) {
    ServiceOptions o;
    o.data_dir = dir;
    o.fetcher = fetcher ? std::move(fetcher) : std::make_shared<StubFetcher>();
    return o;
}

std::string create(Service& s, const json& body) {
    const auto r = s.handle("POST", "/projects", body.dump());
    EXPECT_EQ(r.status, 202) << r.body.dump();
    EXPECT_EQ(r.body.at("status"), "building");
    return r.body.at("project_id").get<std::string>();
}

json planted_request(const fixture::Planted& planted) {
    std::string text;
    for (const auto& p : planted.srs.paragraphs) {
        if (!text.empty()) text += "\n\n";
        text += p.text;
    }
    return {{"srs", text}, {"srs_id", planted.srs.id}, {"corpus", to_json(planted.corpus)}};
}

}  // namespace

TEST(Service, CreateBuildAndAsk) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const auto id = create(s, {{"srs", srs_text()}, {"srs_id", "spacecraft"}, {"corpus", space_manifest()}});
    EXPECT_EQ(id, "p1");
    s.wait_idle();

    const auto st = s.handle("GET", "/projects/p1/status", "");
    ASSERT_EQ(st.status, 200);
    EXPECT_EQ(st.body.at("status"), "ready");
    EXPECT_EQ(st.body.at("srs_passages"), 7);
    EXPECT_EQ(st.body.at("corpus_documents"), 6);
    EXPECT_FALSE(st.body.at("version").get<std::string>().empty());

    const auto r = s.handle("POST", "/projects/p1/questions", R"({"question": "What is wet mass?"})");
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body.at("project_id"), "p1");
    EXPECT_EQ(r.body.at("retrieved_doc_ids")[0], "wet_mass");
    EXPECT_EQ(r.body.at("srs_hits").size(), 3u);
    EXPECT_EQ(r.body.at("corpus_hits").size(), 2u);  // wet_mass has two passages
    for (const auto* dir_name : {"srs.txt", "corpus.json", "manifest.json", "request.json"}) {
        EXPECT_TRUE(fs::exists(dir.path() / "projects" / "p1" / dir_name)) << dir_name;
    }
}

TEST(Service, PlantedProjectRankOneSpan) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const auto planted = fixture::make_planted();
    const auto id = create(s, planted_request(planted));
    s.wait_idle();
    for (const auto& q : planted.questions) {
        const auto r = s.handle("POST", "/projects/" + id + "/questions", json{{"question", q.question}}.dump());
        ASSERT_EQ(r.status, 200);
        const auto& top = r.body.at("srs_hits").at(0);
        EXPECT_EQ(top.at("passage").at("id"), q.srs_passage_id);
        EXPECT_EQ(top.at("answer").at("text"), q.answer);
        EXPECT_EQ(r.body.at("corpus_hits").at(0).at("answer").at("text"), q.answer);
    }
    const auto r10 =
        s.handle("POST", "/projects/" + id + "/questions", json{{"question", planted.questions[0].question}, {"k", 10}}.dump());
    EXPECT_EQ(r10.body.at("srs_hits").size(), 10u);
    EXPECT_EQ(r10.body.at("corpus_hits").size(), 10u);
}

TEST(Service, AutoCorpusFromFetcher) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const auto id = create(s, {{"srs", srs_text()}, {"corpus", "auto"}, {"domain", "space"}});
    s.wait_idle();
    const auto st = s.handle("GET", "/projects/" + id + "/status", "");
    EXPECT_EQ(st.body.at("status"), "ready");
    EXPECT_GE(st.body.at("corpus_documents").get<int>(), 1);
}

TEST(Service, SrsOnlyProject) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const auto id = create(s, {{"srs", srs_text()}});
    s.wait_idle();
    const auto st = s.handle("GET", "/projects/" + id + "/status", "");
    EXPECT_EQ(st.body.at("corpus_documents"), 0);
    EXPECT_FALSE(st.body.at("warnings").empty());
    const auto r = s.handle("POST", "/projects/" + id + "/questions", R"({"question": "What is wet mass?"})");
    EXPECT_EQ(r.status, 200);
    EXPECT_TRUE(r.body.at("corpus_missing").get<bool>());
}

TEST(Service, BadRequests) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    EXPECT_EQ(s.handle("POST", "/projects", "{not json").status, 400);
    EXPECT_EQ(s.handle("POST", "/projects", R"({"srs": "   "})").status, 400);
    EXPECT_EQ(s.handle("POST", "/projects", R"({"srs": 3})").status, 400);
    EXPECT_EQ(s.handle("POST", "/projects", R"({"srs": "x.", "corpus": "manual"})").status, 400);
    EXPECT_EQ(s.handle("POST", "/projects", R"({"srs": "x.", "srs_id": "a/b"})").status, 400);
    EXPECT_EQ(s.handle("POST", "/projects", R"({"srs": "x.", "config": {"k": 0}})").status, 400);
    EXPECT_EQ(s.handle("POST", "/projects", R"({"srs": "x.", "config": {"colour": 1}})").status, 400);
    const auto e = s.handle("POST", "/projects", "[]");
    EXPECT_EQ(e.status, 400);
    EXPECT_TRUE(e.body.contains("error"));

    EXPECT_EQ(s.handle("GET", "/projects/p9/status", "").status, 404);
    EXPECT_EQ(s.handle("POST", "/projects/p9/questions", R"({"question": "q"})").status, 404);
    EXPECT_EQ(s.handle("GET", "/nowhere", "").status, 404);
    EXPECT_EQ(s.handle("DELETE", "/projects", "").status, 404);

    const auto id = create(s, {{"srs", srs_text()}});
    s.wait_idle();
    const auto path = "/projects/" + id + "/questions";
    EXPECT_EQ(s.handle("POST", path, R"({"question": ""})").status, 400);
    EXPECT_EQ(s.handle("POST", path, R"({"q": "What?"})").status, 400);
    EXPECT_EQ(s.handle("POST", path, R"({"question": "What?", "k": 0})").status, 400);
    EXPECT_EQ(s.handle("POST", path, R"({"question": "What?", "k": "2"})").status, 400);
    EXPECT_EQ(s.handle("POST", path, "nope").status, 400);
}

TEST(Service, NotReadyWhileBuilding) {
    fixture::TempDir dir;
    auto gate = std::make_shared<GateFetcher>();
    Service s(options(dir.path(), gate));
    const auto id = create(s, {{"srs", srs_text()}, {"corpus", "auto"}});
    const auto st = s.handle("GET", "/projects/" + id + "/status", "");
    EXPECT_EQ(st.status, 200);
    EXPECT_EQ(st.body.at("status"), "building");
    const auto q = s.handle("POST", "/projects/" + id + "/questions", R"({"question": "What?"})");
    EXPECT_EQ(q.status, 409);
    EXPECT_EQ(q.body.at("status"), "building");
    EXPECT_EQ(s.handle("GET", "/projects/" + id + "/passages/srs%230000", "").status, 409);
    gate->release();
    s.wait_idle();
    EXPECT_EQ(s.handle("GET", "/projects/" + id + "/status", "").body.at("status"), "ready");
    EXPECT_EQ(s.handle("POST", "/projects/" + id + "/questions", R"({"question": "What?"})").status, 200);
}

TEST(Service, PassagesAndHealth) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const auto id = create(s, {{"srs", srs_text()}, {"srs_id", "spacecraft"}, {"corpus", space_manifest()}});
    s.wait_idle();
    const auto p = s.handle("GET", "/projects/" + id + "/passages/spacecraft#0002", "");
    ASSERT_EQ(p.status, 200);
    EXPECT_EQ(p.body.at("text").get<std::string>().rfind("DR-27", 0), 0u);
    EXPECT_EQ(s.handle("GET", "/projects/" + id + "/passages/wet_mass#0000", "").status, 200);
    EXPECT_EQ(s.handle("GET", "/projects/" + id + "/passages/spacecraft#0099", "").status, 404);
    const auto h = s.handle("GET", "/health", "");
    EXPECT_EQ(h.status, 200);
    EXPECT_EQ(h.body.at("status"), "ok");
    EXPECT_EQ(h.body.at("projects"), 1);
}

TEST(Service, ConcurrentQuestionsAgree) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const auto planted = fixture::make_planted();
    const auto id = create(s, planted_request(planted));
    s.wait_idle();
    const auto body = json{{"question", planted.questions[11].question}}.dump();
    auto strip = [](json j) {
        j.erase("timings");
        return j;
    };
    const auto want = strip(s.handle("POST", "/projects/" + id + "/questions", body).body);
    std::vector<std::future<json>> futures;
    for (int i = 0; i < 8; ++i) {
        futures.push_back(std::async(std::launch::async, [&] {
            return strip(s.handle("POST", "/projects/" + id + "/questions", body).body);
        }));
    }
    for (auto& f : futures) EXPECT_EQ(f.get(), want);
}

TEST(Service, IdenticalRequestsBuildIdenticalProjects) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    const json req = {{"srs", srs_text()}, {"srs_id", "spacecraft"}, {"corpus", space_manifest()}};
    const auto a = create(s, req);
    const auto b = create(s, req);
    s.wait_idle();
    const auto va = s.handle("GET", "/projects/" + a + "/status", "").body.at("version");
    const auto vb = s.handle("GET", "/projects/" + b + "/status", "").body.at("version");
    EXPECT_EQ(va, vb);
    for (const auto* f : {"srs.txt", "corpus.json", "index/srs_passages.bm25.json",
                          "index/corpus_documents.bm25.json"}) {
        EXPECT_EQ(fixture::read_text(dir.path() / "projects" / a / f), fixture::read_text(dir.path() / "projects" / b / f))
            << f;
    }
}

TEST(Service, ReloadAfterRestart) {
    fixture::TempDir dir;
    const json req = {{"srs", srs_text()}, {"srs_id", "spacecraft"}, {"corpus", space_manifest()}};
    json before;
    std::string version;
    {
        Service s(options(dir.path()));
        create(s, req);
        s.wait_idle();
        before = s.handle("POST", "/projects/p1/questions", R"({"question": "What is wet mass?"})").body;
        version = s.handle("GET", "/projects/p1/status", "").body.at("version");
    }
    Service s(options(dir.path()));
    s.wait_idle();
    const auto st = s.handle("GET", "/projects/p1/status", "");
    EXPECT_EQ(st.body.at("status"), "ready");
    EXPECT_EQ(st.body.at("version"), version);
    auto after = s.handle("POST", "/projects/p1/questions", R"({"question": "What is wet mass?"})").body;
    before.erase("timings");
    after.erase("timings");
    EXPECT_EQ(after, before);
    EXPECT_EQ(create(s, {{"srs", "Another system."}}), "p2");
}

TEST(Service, HttpRoundTrip) {
    fixture::TempDir dir;
    Service s(options(dir.path()));
    s.start("127.0.0.1", 0);
    ASSERT_GT(s.port(), 0);
    httplib::Client cli("127.0.0.1", s.port());
    const auto created = cli.Post("/projects", json{{"srs", srs_text()}}.dump(), "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 202);
    s.wait_idle();
    const auto res = cli.Post("/projects/p1/questions", R"({"question": "What is wet mass?"})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_FALSE(json::parse(res->body).at("srs_hits").empty());
    const auto missing = cli.Get("/projects/p7/status");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
    s.stop();
}
