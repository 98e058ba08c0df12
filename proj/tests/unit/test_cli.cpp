#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "reqqa/cli.hpp"
#include "reqqa/qgen.hpp"

using namespace reqqa;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string srs_path() { return (fixture::data_dir() / "srs" / "spacecraft.txt").string(); }
std::string corpus_path() { return (fixture::data_dir() / "corpus" / "space.json").string(); }

}  // namespace

TEST(Cli, AskPrintsJson) {
    const auto r = run({"ask", "--srs", srs_path(), "--corpus", corpus_path(), "-q", "What is wet mass?"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at("retrieved_doc_ids")[0], "wet_mass");
    EXPECT_EQ(j.at("srs_hits").size(), 3u);
}

TEST(Cli, AskTextAndK) {
    const auto r = run({"ask", "--srs", srs_path(), "-q", "What is wet mass?", "-k", "2", "--format", "text"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("From the SRS"), std::string::npos);
    EXPECT_NE(r.out.find("2. [spacecraft#"), std::string::npos);
    EXPECT_EQ(r.out.find("3. [spacecraft#"), std::string::npos);
}

TEST(Cli, UsageAndDomainErrors) {
    EXPECT_EQ(run({"ask", "--srs", srs_path()}).code, kExitUsage);
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"ask", "--srs", srs_path(), "-q", "x", "-k", "0"}).code, kExitUsage);
    const auto missing = run({"ask", "--srs", "/no/such/file.txt", "-q", "What?"});
    EXPECT_EQ(missing.code, kExitError);
    EXPECT_NE(missing.err.find("not found"), std::string::npos);
    EXPECT_EQ(run({"index", "--out", "x.json"}).code, kExitError);
}

TEST(Cli, Version) {
    const auto r = run({"--version"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("reqqa"), std::string::npos);
}

TEST(Cli, SplitAndIndex) {
    const auto s = run({"split", "--input", srs_path()});
    ASSERT_EQ(s.code, kExitOk) << s.err;
    EXPECT_EQ(json::parse(s.out).size(), 7u);

    fixture::TempDir dir;
    const auto out = (dir.path() / "idx.json").string();
    const auto i = run({"index", "--corpus", corpus_path(), "--out", out});
    ASSERT_EQ(i.code, kExitOk) << i.err;
    EXPECT_EQ(json::parse(i.out).at("items"), 6);
    EXPECT_TRUE(std::filesystem::exists(out));
}

TEST(Cli, BuildCorpusFromFixtures) {
    fixture::TempDir dir;
    const auto out = (dir.path() / "space.json").string();
    const auto r = run({"build-corpus", "--srs-group", srs_path(), "--out", out, "--domain", "space", "--fixtures",
                        (fixture::data_dir() / "wiki").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_GE(json::parse(r.out).at("documents").get<int>(), 1);
    EXPECT_TRUE(std::filesystem::exists(out));
    EXPECT_EQ(run({"build-corpus", "--srs-group", srs_path(), "--out", out, "--rate-limit", "0"}).code, kExitUsage);
}

TEST(Cli, GenerateThenEvaluate) {
    fixture::TempDir dir;
    const auto dataset = (dir.path() / "qa.jsonl").string();
    const auto g = run({"generate-qa", "--input", srs_path(), "--out", dataset, "--seed", "3"});
    ASSERT_EQ(g.code, kExitOk) << g.err;
    const auto summary = json::parse(g.out);
    EXPECT_GE(summary.at("written").get<int>(), 1);
    const auto rows = read_dataset(fixture::read_text(dataset));
    EXPECT_EQ(rows.size(), summary.at("written").get<std::size_t>());

    // one row keeps the report small
    fixture::write_text(dir.path() / "one.jsonl", write_dataset({rows.at(0)}));
    const auto e = run({"eval", "--dataset", (dir.path() / "one.jsonl").string(), "--srs-dir",
                        (fixture::data_dir() / "srs").string()});
    ASSERT_EQ(e.code, kExitOk) << e.err;
    const auto report = json::parse(e.out);
    EXPECT_EQ(report.at("rows"), 1);
    EXPECT_EQ(report.at("evaluated"), 1);

    const auto csv = run({"eval", "--dataset", (dir.path() / "one.jsonl").string(), "--format", "csv"});
    ASSERT_EQ(csv.code, kExitOk) << csv.err;
    EXPECT_EQ(csv.out.rfind("section,name,slice,metric,k,value", 0), 0u);
    EXPECT_EQ(run({"eval", "--dataset", dataset, "--corpus", "nodomain"}).code, kExitError);
}
