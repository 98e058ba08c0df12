#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "reqqa/corpus.hpp"
#include "reqqa/pipeline.hpp"

namespace reqqa {

struct ServiceOptions {
    std::filesystem::path data_dir = "reqqa-data";
    PipelineConfig defaults{};
    /// Backend for "auto" corpora. Null: the wiki API behind a disk cache in
    /// data_dir/cache.
    std::shared_ptr<ArticleFetcher> fetcher;
};

struct HttpReply {
    int status = 200;
    nlohmann::json body;
};

/// Project store and HTTP API.
///
///   POST /projects                     {srs, srs_id?, corpus?, srs_group?, domain?, config?}
///   GET  /projects/{id}/status
///   POST /projects/{id}/questions      {question, k?}
///   GET  /projects/{id}/passages/{pid}
///   GET  /health
///
/// `corpus` is a corpus manifest object, "auto" to assemble one from the
/// SRS (or `srs_group`, a list of texts), or absent for an SRS-only project.
/// Builds run in the background; each project lives in its own directory
/// under data_dir/projects and is reloaded on startup.
class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Routes one request. Never throws; errors become 4xx/5xx replies.
    HttpReply handle(std::string_view method, std::string_view path, std::string_view body);

    /// Blocks until every pending build has finished.
    void wait_idle();

    /// Serves on host:port until stop(). Port 0 picks a free port.
    void start(const std::string& host, int port);
    int port() const;
    void stop();
    /// Blocks until the server started by start() has stopped.
    void wait();
    /// start() and block until stop() is called from another thread.
    void run(const std::string& host, int port);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reqqa
