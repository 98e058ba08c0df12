#include "reqqa/plugin.hpp"

#include <cmath>
#include <csignal>
#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "reqqa/error.hpp"

namespace reqqa {

using nlohmann::json;

// --------------------------------------------------------------------------
// SubprocessChannel

SubprocessChannel::SubprocessChannel(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw InvalidArgument("plugin command is empty");
}

SubprocessChannel::~SubprocessChannel() { stop(); }

void SubprocessChannel::start() {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (pipe2(in_pipe, O_CLOEXEC) != 0) throw ResourceError("pipe() failed");
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw ResourceError("pipe() failed");
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) throw ResourceError("fork() failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = fdopen(in_pipe[1], "w");
    from_child_ = fdopen(out_pipe[0], "r");
}

void SubprocessChannel::stop() noexcept {
    if (to_child_) std::fclose(to_child_);
    if (from_child_) std::fclose(from_child_);
    to_child_ = nullptr;
    from_child_ = nullptr;
    if (pid_ > 0) {
        int status = 0;
        waitpid(pid_, &status, 0);
    }
    pid_ = -1;
}

json SubprocessChannel::call(const json& request) {
    std::lock_guard lock(mutex_);
    if (pid_ < 0) start();
    const auto line = request.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), to_child_) != line.size() || std::fflush(to_child_) != 0) {
        stop();
        throw ResourceError("plugin '" + argv_.front() + "' closed its input");
    }
    std::string response;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, from_child_)) {
        response += buf;
        if (!response.empty() && response.back() == '\n') break;
    }
    if (response.empty()) {
        stop();
        throw ResourceError("plugin '" + argv_.front() + "' exited without a response");
    }
    try {
        return json::parse(response);
    } catch (const json::parse_error& e) {
        throw DataError("plugin '" + argv_.front() + "' sent invalid JSON: " + e.what());
    }
}

// --------------------------------------------------------------------------
// HttpChannel

HttpChannel::HttpChannel(std::string url, int timeout_seconds) : timeout_seconds_(timeout_seconds) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InvalidArgument("plugin URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

json HttpChannel::call(const json& request) {
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    const auto res = client.Post(path_, request.dump(), "application/json");
    if (!res) {
        throw ResourceError("plugin endpoint " + base_ + path_ + " unreachable: " +
                            httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ResourceError("plugin endpoint " + base_ + path_ + " returned HTTP " +
                            std::to_string(res->status));
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw DataError("plugin endpoint sent invalid JSON: " + std::string(e.what()));
    }
}

std::shared_ptr<PluginChannel> make_channel(const std::string& spec) {
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
        return std::make_shared<HttpChannel>(spec);
    }
    if (spec.rfind("cmd:", 0) == 0) {
        std::vector<std::string> argv;
        std::string cur;
        for (const char ch : spec.substr(4)) {
            if (ch == ' ') {
                if (!cur.empty()) argv.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!cur.empty()) argv.push_back(std::move(cur));
        return std::make_shared<SubprocessChannel>(std::move(argv));
    }
    throw InvalidArgument("plugin spec must start with cmd: or http(s)://, got '" + spec + "'");
}

// --------------------------------------------------------------------------
// Adapters

PluginReader::PluginReader(std::shared_ptr<PluginChannel> channel, std::string name,
                           std::size_t max_passage_tokens)
    : channel_(std::move(channel)), name_(std::move(name)), max_tokens_(max_passage_tokens) {}

std::optional<AnswerSpan> PluginReader::extract(std::string_view question, const Passage& passage) const {
    const auto res = channel_->call({{"question", question}, {"passage_text", passage.text}});
    if (res.is_null() || res.value("abstain", false)) return std::nullopt;
    try {
        AnswerSpan span;
        span.passage_id = passage.id;
        span.start = res.at("start").get<std::size_t>();
        span.end = res.at("end").get<std::size_t>();
        span.score = res.value("score", 0.0);
        if (span.start > span.end || span.end > passage.text.size()) {
            throw DataError("reader plugin '" + name_ + "': span outside the passage");
        }
        span.text = passage.text.substr(span.start, span.end - span.start);
        return span;
    } catch (const json::exception& e) {
        throw DataError("reader plugin '" + name_ + "': " + e.what());
    }
}

PluginEmbedder::PluginEmbedder(std::shared_ptr<PluginChannel> channel, std::size_t dimension)
    : channel_(std::move(channel)), dimension_(dimension) {}

std::vector<double> PluginEmbedder::embed(std::string_view text) const {
    const auto res = channel_->call({{"text", text}});
    std::vector<double> v;
    try {
        res.at("vector").get_to(v);
    } catch (const json::exception& e) {
        throw DataError(std::string("embedder plugin: ") + e.what());
    }
    if (v.size() != dimension_) throw DataError("embedder plugin returned the wrong dimension");
    for (const double x : v) {
        if (!std::isfinite(x)) throw DataError("embedder plugin returned a non-finite value");
    }
    return v;
}

PluginScorer::PluginScorer(std::shared_ptr<PluginChannel> channel) : channel_(std::move(channel)) {}

double PluginScorer::score(std::string_view question, std::string_view passage) const {
    const auto res = channel_->call({{"question", question}, {"passage_text", passage}});
    try {
        return res.at("score").get<double>();
    } catch (const json::exception& e) {
        throw DataError(std::string("scorer plugin: ") + e.what());
    }
}

}  // namespace reqqa
