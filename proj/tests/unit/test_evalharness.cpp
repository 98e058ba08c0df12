#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "reqqa/error.hpp"
#include "reqqa/evalharness.hpp"

using namespace reqqa;

namespace {

RetrievalJudgment judged(const std::string& gold, std::size_t rank, std::size_t n = 10) {
    RetrievalJudgment j{"q", gold, {}};
    for (std::size_t r = 1; r <= n; ++r) {
        j.ranked.hits.push_back({r == rank ? gold : "x" + std::to_string(r), double(n - r)});
    }
    return j;
}

}  // namespace

TEST(Recall, Basics) {
    const std::vector<RetrievalJudgment> top = {judged("g", 1)};
    EXPECT_DOUBLE_EQ(recall_at_k(top, 1), 1.0);
    const std::vector<RetrievalJudgment> fourth = {judged("g", 4)};
    EXPECT_DOUBLE_EQ(recall_at_k(fourth, 3), 0.0);
    std::vector<RetrievalJudgment> ten;
    for (int i = 0; i < 9; ++i) ten.push_back(judged("g", 2));
    ten.push_back(judged("g", 0));  // gold never retrieved
    EXPECT_DOUBLE_EQ(recall_at_k(ten, 3), 0.9);
    EXPECT_THROW(recall_at_k(ten, 0), InvalidArgument);
    EXPECT_THROW(recall_at_k(std::vector<RetrievalJudgment>{}, 1), InvalidArgument);
}

TEST(Ndcg, Basics) {
    const std::vector<RetrievalJudgment> first = {judged("g", 1)};
    EXPECT_DOUBLE_EQ(ndcg_at_k(first, 5), 1.0);
    const std::vector<RetrievalJudgment> third = {judged("g", 3)};
    EXPECT_NEAR(ndcg_at_k(third, 3), 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(ndcg_at_k(third, 2), 0.0);
    EXPECT_THROW(ndcg_at_k(third, 0), InvalidArgument);
}

TEST(Matching, EqualStringsCorrectEverywhere) {
    const HashingEmbedder e;
    for (const auto mode : {MatchMode::Exact, MatchMode::Partial, MatchMode::Semantic}) {
        EXPECT_TRUE(is_correct("3004 kg", "3004 kg", mode, &e)) << to_string(mode);
    }
}

TEST(Matching, CorrectedAnswerIsPartialNotExact) {
    EXPECT_FALSE(exact_match("software code", "implemented software code"));
    EXPECT_TRUE(partial_match("software code", "implemented software code"));
}

TEST(Matching, DisjointIncorrectEverywhere) {
    const HashingEmbedder e;
    ASSERT_EQ(cosine(e.embed("alpha"), e.embed("omega")), 0.0);
    for (const auto mode : {MatchMode::Exact, MatchMode::Partial, MatchMode::Semantic}) {
        EXPECT_FALSE(is_correct("alpha", "omega", mode, &e));
    }
}

TEST(Matching, Normalization) {
    EXPECT_EQ(normalize_answer("  The  Wet\tMass. "), "the wet mass");
    EXPECT_TRUE(exact_match("\"3004 KG\"", "3004 kg"));
    EXPECT_FALSE(exact_match("", ""));
    EXPECT_EQ(evaluation_terms("the of"), (std::vector<std::string>{"the", "of"}));
    EXPECT_EQ(evaluation_terms("the wet mass"), (std::vector<std::string>{"wet", "mass"}));
}

TEST(Accuracy, CountsAndErrors) {
    const std::vector<std::string> pred = {"a b", "c", "x"};
    const std::vector<std::string> gold = {"a b", "c d", "y"};
    EXPECT_NEAR(answer_accuracy(pred, gold, MatchMode::Exact), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(answer_accuracy(pred, gold, MatchMode::Partial), 2.0 / 3.0, 1e-12);
    EXPECT_THROW(answer_accuracy(pred, gold, MatchMode::Semantic), InvalidArgument);
    EXPECT_THROW(answer_accuracy(std::span(pred).first(2), gold, MatchMode::Exact), InvalidArgument);
}

TEST(TokenF1, Values) {
    EXPECT_DOUBLE_EQ(token_f1("wet mass", "wet mass"), 1.0);
    EXPECT_NEAR(token_f1("software code", "implemented software code"), 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(token_f1("alpha", "omega"), 0.0);
    EXPECT_DOUBLE_EQ(token_f1("", "omega"), 0.0);
    EXPECT_THROW(token_f1("x", "  "), InvalidArgument);
}

TEST(TokenF1, PartialIffPositive) {
    std::mt19937_64 rng(5);
    const std::vector<std::string> words = {"wet", "mass", "the", "kg", "3004", "camera", "of", "software"};
    for (int i = 0; i < 500; ++i) {
        std::string p, g;
        for (int w = 0, n = int(rng() % 4); w < n; ++w) p += words[rng() % words.size()] + " ";
        for (int w = 0, n = 1 + int(rng() % 4); w < n; ++w) g += words[rng() % words.size()] + " ";
        if (exact_match(p, g)) EXPECT_TRUE(partial_match(p, g)) << p << "|" << g;
        EXPECT_EQ(partial_match(p, g), token_f1(p, g) > 0.0) << p << "|" << g;
    }
}

TEST(Experiment, PlantedDatasetBm25RecallOne) {
    const auto planted = fixture::make_planted();
    ExperimentInputs in;
    in.dataset = fixture::planted_dataset(planted);
    in.srs[planted.srs.id] = planted.srs;
    in.corpora[planted.corpus.domain()] = planted.corpus;
    ExperimentConfig cfg;
    cfg.retrievers = {RetrieverKind::Bm25, RetrieverKind::Rerank};
    cfg.timing = false;
    const auto report = run_experiment(in, cfg);
    EXPECT_EQ(report.rows, 100u);
    EXPECT_EQ(report.evaluated, 100u);
    EXPECT_TRUE(report.excluded.empty());
    const auto& srs = report.srs_passages.at("BM25").at("overall");
    EXPECT_EQ(srs.judgments, 50u);
    EXPECT_DOUBLE_EQ(srs.recall.at(1), 1.0);
    EXPECT_DOUBLE_EQ(report.corpus_passages.at("BM25").at("overall").recall.at(1), 1.0);
    EXPECT_DOUBLE_EQ(report.document_retrieval.at("BM25").at("synthetic").recall.at(1), 1.0);
    ASSERT_EQ(report.readers.size(), 1u);
    EXPECT_DOUBLE_EQ(report.readers[0].overall.exact, 1.0);
    EXPECT_EQ(report.readers[0].reader, "reference");
    EXPECT_FALSE(report.timing);
}

TEST(Experiment, SingleRowAndRebuiltDocuments) {
    QAPair row;
    row.id = "only";
    row.question = "What shall the wet mass not exceed?";
    row.answer = "3004 kg";
    row.doc_id = "srs";
    row.passage_id = "srs#0000";
    row.passage_text = "The wet mass shall not exceed 3004 kg.";
    ExperimentInputs in;
    in.dataset = {row};
    const auto report = run_experiment(in);
    EXPECT_EQ(report.evaluated, 1u);
    EXPECT_FALSE(report.warnings.empty());  // SRS rebuilt from the dataset
    for (const auto& [name, slices] : report.srs_passages) {
        const auto& m = slices.at("overall");
        EXPECT_EQ(m.judgments, 1u);
        for (const auto& [k, v] : m.recall) EXPECT_TRUE(v == 0.0 || v == 1.0);
    }
    ASSERT_TRUE(report.timing);
    EXPECT_EQ(report.timing->questions, 1u);
    EXPECT_DOUBLE_EQ(report.readers.at(0).overall.exact, 1.0);

    const auto j = to_json(report);
    EXPECT_EQ(j.at("schema_version"), 1);
    EXPECT_EQ(j.at("rows"), 1);
    EXPECT_NE(format_table(report).find("Reader accuracy"), std::string::npos);
    EXPECT_EQ(format_csv(report).rfind("section,name,slice,metric,k,value\n", 0), 0u);
}

TEST(Experiment, MissingPassageExcluded) {
    const auto planted = fixture::make_planted();
    ExperimentInputs in;
    in.dataset = fixture::planted_dataset(planted);
    in.dataset.resize(4);
    in.dataset[1].passage_id = "nowhere#0042";
    in.dataset[1].passage_text = "";
    in.dataset[1].doc_id = "ghost-doc";
    in.srs[planted.srs.id] = planted.srs;
    in.corpora[planted.corpus.domain()] = planted.corpus;
    ExperimentConfig cfg;
    cfg.retrievers = {RetrieverKind::Bm25};
    const auto report = run_experiment(in, cfg);
    EXPECT_EQ(report.excluded, (std::vector<std::string>{in.dataset[1].id}));
    EXPECT_EQ(report.evaluated, 3u);
}

TEST(Experiment, BadConfig) {
    ExperimentInputs in;
    in.dataset = fixture::planted_dataset(fixture::make_planted());
    ExperimentConfig cfg;
    cfg.ks = {};
    EXPECT_THROW(run_experiment(in, cfg), InvalidArgument);
    cfg.ks = {0};
    EXPECT_THROW(run_experiment(in, cfg), InvalidArgument);
}
