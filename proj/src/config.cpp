#include "reqqa/config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "reqqa/error.hpp"
#include "reqqa/plugin.hpp"

namespace reqqa {

using nlohmann::json;

std::shared_ptr<const Reader> make_reader(const std::string& spec, std::size_t max_passage_tokens) {
    if (spec.empty() || spec == "reference") return std::make_shared<ReferenceReader>();
    return std::make_shared<PluginReader>(make_channel(spec), spec, max_passage_tokens);
}

std::shared_ptr<const Embedder> make_embedder(const std::string& spec, std::size_t dimension) {
    if (spec.empty() || spec == "hashing") return std::make_shared<HashingEmbedder>(dimension);
    return std::make_shared<PluginEmbedder>(make_channel(spec), dimension);
}

std::shared_ptr<const CrossScorer> make_scorer(const std::string& spec) {
    if (spec.empty() || spec == "overlap") return std::make_shared<OverlapF1Scorer>();
    return std::make_shared<PluginScorer>(make_channel(spec));
}

namespace {

const std::set<std::string, std::less<>> kPipelineKeys = {
    "k",      "c",           "token_budget", "document_retriever", "passage_retriever", "bm25",
    "rerank_depth", "reader", "reader_max_tokens", "embedder", "embedder_dimension", "scorer", "parallel"};

const std::set<std::string, std::less<>> kExperimentKeys = {"retrievers",         "readers",        "ks",
                                                           "semantic_embedder",  "semantic_threshold",
                                                           "reader_context",     "timing",         "threads"};

std::size_t positive(const json& j, const char* key) {
    const auto v = j.at(key).get<long long>();
    if (v < 1) throw InvalidArgument(std::string(key) + " must be >= 1");
    return static_cast<std::size_t>(v);
}

/// Applies the retriever-related keys to both retriever option sets.
void apply_retriever_keys(const json& j, RetrieverOptions& opts) {
    if (j.contains("bm25")) {
        const auto& b = j.at("bm25");
        opts.bm25.k1 = b.value("k1", opts.bm25.k1);
        opts.bm25.b = b.value("b", opts.bm25.b);
    }
    if (j.contains("rerank_depth")) opts.rerank_depth = positive(j, "rerank_depth");
    const auto dim = j.contains("embedder_dimension") ? positive(j, "embedder_dimension") : std::size_t{1024};
    if (j.contains("embedder")) opts.embedder = make_embedder(j.at("embedder").get<std::string>(), dim);
    if (j.contains("scorer")) opts.scorer = make_scorer(j.at("scorer").get<std::string>());
}

void check_keys(const json& j, bool experiment) {
    if (!j.is_object()) throw InvalidArgument("configuration must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (kPipelineKeys.count(key) || (experiment && kExperimentKeys.count(key))) continue;
        throw InvalidArgument("unknown configuration key '" + key + "'");
    }
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig base) {
    check_keys(j, false);
    try {
        if (j.contains("k")) base.k = positive(j, "k");
        if (j.contains("c")) base.c = positive(j, "c");
        if (j.contains("token_budget")) base.split.token_budget = positive(j, "token_budget");
        if (j.contains("document_retriever")) {
            base.document_retriever.kind = retriever_from_string(j.at("document_retriever").get<std::string>());
        }
        if (j.contains("passage_retriever")) {
            base.passage_retriever.kind = retriever_from_string(j.at("passage_retriever").get<std::string>());
        }
        apply_retriever_keys(j, base.document_retriever);
        apply_retriever_keys(j, base.passage_retriever);
        if (j.contains("reader")) {
            const auto max_tokens =
                j.contains("reader_max_tokens") ? positive(j, "reader_max_tokens") : std::size_t{512};
            base.reader = make_reader(j.at("reader").get<std::string>(), max_tokens);
        }
        if (j.contains("parallel")) base.parallel = j.at("parallel").get<bool>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad configuration: ") + e.what());
    }
    base.validate();
    return base;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    check_keys(j, true);
    ExperimentConfig out;
    try {
        json pipeline_part = json::object();
        for (const auto& [key, value] : j.items()) {
            if (kPipelineKeys.count(key)) pipeline_part[key] = value;
        }
        const auto pc = pipeline_config_from_json(pipeline_part);
        out.retriever_options = pc.passage_retriever;
        out.split = pc.split;
        if (j.contains("retrievers")) {
            out.retrievers.clear();
            for (const auto& r : j.at("retrievers")) out.retrievers.push_back(retriever_from_string(r.get<std::string>()));
        }
        const auto max_tokens = j.contains("reader_max_tokens") ? positive(j, "reader_max_tokens") : std::size_t{512};
        if (j.contains("readers")) {
            for (const auto& r : j.at("readers")) out.readers.push_back(make_reader(r.get<std::string>(), max_tokens));
        } else if (pc.reader) {
            out.readers.push_back(pc.reader);
        }
        if (j.contains("ks")) out.ks = j.at("ks").get<std::vector<std::size_t>>();
        if (j.contains("semantic_embedder")) {
            const auto dim = j.contains("embedder_dimension") ? positive(j, "embedder_dimension") : std::size_t{1024};
            out.semantic_embedder = make_embedder(j.at("semantic_embedder").get<std::string>(), dim);
        }
        out.semantic_threshold = j.value("semantic_threshold", out.semantic_threshold);
        if (j.contains("reader_context")) {
            const auto v = j.at("reader_context").get<std::string>();
            if (v == "gold") {
                out.reader_context = ReaderContext::GoldPassage;
            } else if (v == "retrieved") {
                out.reader_context = ReaderContext::TopRetrieved;
            } else {
                throw InvalidArgument("reader_context must be 'gold' or 'retrieved'");
            }
        }
        out.timing = j.value("timing", out.timing);
        out.threads = j.value("threads", out.threads);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("bad configuration: ") + e.what());
    }
    return out;
}

json to_json(const PipelineConfig& c) {
    return {{"k", c.k},
            {"c", c.c},
            {"token_budget", c.split.token_budget},
            {"document_retriever", to_string(c.document_retriever.kind)},
            {"passage_retriever", to_string(c.passage_retriever.kind)},
            {"bm25", {{"k1", c.passage_retriever.bm25.k1}, {"b", c.passage_retriever.bm25.b}}},
            {"rerank_depth", c.passage_retriever.rerank_depth},
            {"reader", c.reader ? c.reader->name() : std::string("reference")},
            {"parallel", c.parallel}};
}

}  // namespace reqqa
