#pragma once

#include <cstdio>
#include <memory>
#include <mutex>
#include <string>
#include <sys/types.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "reqqa/reader.hpp"
#include "reqqa/retrieval.hpp"

namespace reqqa {

/// Request/response transport for out-of-process models. Each call sends one
/// JSON object and receives one JSON object.
class PluginChannel {
public:
    virtual ~PluginChannel() = default;
    virtual nlohmann::json call(const nlohmann::json& request) = 0;
};

/// Line-delimited JSON over the stdin/stdout of a child process. The child
/// is started lazily and kept alive; calls are serialized.
class SubprocessChannel final : public PluginChannel {
public:
    explicit SubprocessChannel(std::vector<std::string> argv);
    ~SubprocessChannel() override;
    SubprocessChannel(const SubprocessChannel&) = delete;
    SubprocessChannel& operator=(const SubprocessChannel&) = delete;

    nlohmann::json call(const nlohmann::json& request) override;

private:
    void start();
    void stop() noexcept;

    std::vector<std::string> argv_;
    std::mutex mutex_;
    pid_t pid_ = -1;
    FILE* to_child_ = nullptr;
    FILE* from_child_ = nullptr;
};

/// One HTTP POST per call, JSON body in and out. `url` is
/// http://host[:port]/path.
class HttpChannel final : public PluginChannel {
public:
    explicit HttpChannel(std::string url, int timeout_seconds = 60);
    nlohmann::json call(const nlohmann::json& request) override;

private:
    std::string base_;
    std::string path_;
    int timeout_seconds_;
};

/// "cmd:<program> [args...]" or "http://..." -> a channel.
std::shared_ptr<PluginChannel> make_channel(const std::string& spec);

/// Reader protocol: {question, passage_text} -> {start, end, score}; a
/// response of null or {"abstain": true} means no answer.
class PluginReader final : public Reader {
public:
    PluginReader(std::shared_ptr<PluginChannel> channel, std::string name,
                 std::size_t max_passage_tokens = 512);

    std::optional<AnswerSpan> extract(std::string_view question,
                                      const Passage& passage) const override;
    std::size_t max_passage_tokens() const override { return max_tokens_; }
    bool concurrency_safe() const override { return false; }
    std::string name() const override { return name_; }

private:
    std::shared_ptr<PluginChannel> channel_;
    std::string name_;
    std::size_t max_tokens_;
};

/// Embedder protocol: {text} -> {vector: [..]}.
class PluginEmbedder final : public Embedder {
public:
    PluginEmbedder(std::shared_ptr<PluginChannel> channel, std::size_t dimension);
    std::size_t dimension() const override { return dimension_; }
    std::vector<double> embed(std::string_view text) const override;
    bool concurrency_safe() const override { return false; }

private:
    std::shared_ptr<PluginChannel> channel_;
    std::size_t dimension_;
};

/// Cross-encoder protocol: {question, passage_text} -> {score}.
class PluginScorer final : public CrossScorer {
public:
    explicit PluginScorer(std::shared_ptr<PluginChannel> channel);
    double score(std::string_view question, std::string_view passage) const override;
    bool concurrency_safe() const override { return false; }

private:
    std::shared_ptr<PluginChannel> channel_;
};

}  // namespace reqqa
