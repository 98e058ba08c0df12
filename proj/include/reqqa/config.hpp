#pragma once

#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "reqqa/evalharness.hpp"
#include "reqqa/pipeline.hpp"

namespace reqqa {

/// "reference" or a plugin spec ("cmd:..." / "http://...").
std::shared_ptr<const Reader> make_reader(const std::string& spec, std::size_t max_passage_tokens = 512);
/// "hashing" or a plugin spec; `dimension` sizes either kind.
std::shared_ptr<const Embedder> make_embedder(const std::string& spec, std::size_t dimension = 1024);
/// "overlap" or a plugin spec.
std::shared_ptr<const CrossScorer> make_scorer(const std::string& spec);

/// Reads pipeline settings from a JSON object. Recognized keys: k, c,
/// token_budget, document_retriever, passage_retriever, bm25 {k1, b},
/// rerank_depth, reader, reader_max_tokens, embedder, embedder_dimension,
/// scorer, parallel. Missing keys keep the values of `base`. Unknown keys
/// throw InvalidArgument.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {});

/// The pipeline keys above plus retrievers, readers, ks, semantic_embedder,
/// semantic_threshold, reader_context ("gold" or "retrieved"), timing and
/// threads.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PipelineConfig& config);

}  // namespace reqqa
