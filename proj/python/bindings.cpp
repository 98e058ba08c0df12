#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "reqqa/config.hpp"
#include "reqqa/error.hpp"
#include "reqqa/evalharness.hpp"
#include "reqqa/pipeline.hpp"
#include "reqqa/qgen.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Structured values cross the boundary as JSON text; the Python wrapper
// decodes them.

std::string split(const std::string& text, const std::string& doc_id, std::size_t token_budget) {
    reqqa::SplitConfig config;
    config.token_budget = token_budget;
    json out = json::array();
    for (const auto& p : reqqa::split_passages(reqqa::parse_plain_text(doc_id, text), config)) {
        out.push_back(reqqa::to_json(p));
    }
    return out.dump();
}

std::string ask(const std::string& question, const std::string& srs_text, const std::string& corpus_json,
                const std::string& config_json) {
    const auto config = reqqa::pipeline_config_from_json(json::parse(config_json));
    const auto corpus = corpus_json.empty() ? reqqa::Corpus{} : reqqa::corpus_from_json(json::parse(corpus_json));
    return reqqa::to_json(reqqa::ask(question, reqqa::parse_plain_text("srs", srs_text), corpus, config)).dump();
}

std::vector<std::pair<std::string, double>> retrieve(const std::vector<std::pair<std::string, std::string>>& items,
                                                     const std::string& query, const std::string& kind,
                                                     std::size_t k) {
    std::vector<reqqa::Item> v;
    for (const auto& [id, text] : items) v.push_back({id, text});
    reqqa::RetrieverOptions options;
    options.kind = reqqa::retriever_from_string(kind);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& h : reqqa::Retriever::build(std::move(v), options).rank(query).top(k).hits) {
        out.emplace_back(h.id, h.score);
    }
    return out;
}

std::vector<reqqa::RetrievalJudgment> judgments(const std::vector<std::pair<std::string, std::vector<std::string>>>& js) {
    std::vector<reqqa::RetrievalJudgment> out;
    for (std::size_t i = 0; i < js.size(); ++i) {
        reqqa::RetrievalJudgment j;
        j.question_id = std::to_string(i);
        j.gold_item_id = js[i].first;
        double score = static_cast<double>(js[i].second.size());
        for (const auto& id : js[i].second) j.ranked.hits.push_back({id, score--});
        out.push_back(std::move(j));
    }
    return out;
}

bool answer_correct(const std::string& pred, const std::string& gold, const std::string& mode, double threshold) {
    if (mode == "exact") return reqqa::exact_match(pred, gold);
    if (mode == "partial") return reqqa::partial_match(pred, gold);
    if (mode == "semantic") return reqqa::semantic_match(pred, gold, reqqa::HashingEmbedder{}, threshold);
    throw reqqa::InvalidArgument("mode must be exact, partial or semantic");
}

std::string generate_qa(const std::string& text, const std::string& doc_id, std::uint64_t seed, double fraction,
                        std::size_t max_pairs) {
    const auto passages = reqqa::split_passages(reqqa::parse_plain_text(doc_id, text));
    const reqqa::ReferenceGenerator generator(max_pairs);
    const reqqa::ReferenceEvaluator evaluator;
    auto pairs = reqqa::generate_pairs(passages, generator, seed, &evaluator);
    if (fraction < 1.0) pairs = reqqa::filter_top_fraction(std::move(pairs), evaluator, fraction);
    return reqqa::write_dataset(pairs);
}

std::string evaluate(const std::string& dataset_jsonl, const std::string& config_json) {
    reqqa::ExperimentInputs inputs;
    inputs.dataset = reqqa::read_dataset(dataset_jsonl);
    const auto config = reqqa::experiment_config_from_json(json::parse(config_json));
    return reqqa::to_json(reqqa::run_experiment(inputs, config)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Question answering over requirements specifications";
    py::register_exception<reqqa::Error>(m, "Error", PyExc_RuntimeError);

    m.def("split", &split, py::arg("text"), py::arg("doc_id") = "srs", py::arg("token_budget") = 512);
    m.def("ask", &ask, py::arg("question"), py::arg("srs_text"), py::arg("corpus_json") = "",
          py::arg("config_json") = "{}", py::call_guard<py::gil_scoped_release>());
    m.def("retrieve", &retrieve, py::arg("items"), py::arg("query"), py::arg("kind") = "bm25", py::arg("k") = 3);
    m.def("token_f1", &reqqa::token_f1, py::arg("pred"), py::arg("gold"));
    m.def("answer_correct", &answer_correct, py::arg("pred"), py::arg("gold"), py::arg("mode") = "exact",
          py::arg("threshold") = 0.5);
    m.def(
        "recall_at_k", [](const std::vector<std::pair<std::string, std::vector<std::string>>>& js, std::size_t k) {
            return reqqa::recall_at_k(judgments(js), k);
        },
        py::arg("judgments"), py::arg("k"));
    m.def(
        "ndcg_at_k", [](const std::vector<std::pair<std::string, std::vector<std::string>>>& js, std::size_t k) {
            return reqqa::ndcg_at_k(judgments(js), k);
        },
        py::arg("judgments"), py::arg("k"));
    m.def("simplified_bleu", &reqqa::simplified_bleu, py::arg("q1"), py::arg("q2"));
    m.def("generate_qa", &generate_qa, py::arg("text"), py::arg("doc_id") = "srs", py::arg("seed") = 0,
          py::arg("fraction") = 0.05, py::arg("max_pairs") = 3);
    m.def("evaluate", &evaluate, py::arg("dataset_jsonl"), py::arg("config_json") = "{}",
          py::call_guard<py::gil_scoped_release>());
}
