#include "reqqa/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "io.hpp"
#include "reqqa/config.hpp"
#include "reqqa/error.hpp"

namespace reqqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kProjectFormatVersion = 1;

struct Project {
    std::string id;
    fs::path dir;
    json request;  // the creation request, config included

    std::shared_mutex lock;  // exclusive while building
    std::string status = "building";
    std::string error;
    std::vector<std::string> warnings;
    std::string version;
    std::shared_ptr<const Engine> engine;
};

HttpReply error_reply(int status, std::string message) { return {status, {{"error", std::move(message)}}}; }

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        auto slash = path.find('/', pos);
        if (slash == std::string_view::npos) slash = path.size();
        if (slash > pos) parts.emplace_back(path.substr(pos, slash - pos));
        pos = slash + 1;
    }
    return parts;
}

std::string version_of(const std::string& srs, const json& corpus, const json& config) {
    auto h = fnv1a64(srs);
    h = fnv1a64(corpus.dump(), h);
    h = fnv1a64(config.dump(), h);
    h = fnv1a64(std::to_string(kProjectFormatVersion), h);
    return hex64(h);
}

/// Rejects malformed creation requests before anything is stored.
void validate_request(const json& req, const PipelineConfig& defaults) {
    if (!req.is_object()) throw InvalidArgument("request body must be a JSON object");
    if (!req.contains("srs") || !req.at("srs").is_string()) throw InvalidArgument("'srs' must be a string");
    if (trim(req.at("srs").get_ref<const std::string&>()).empty()) throw InvalidArgument("SRS is empty");
    if (req.contains("srs_id")) {
        const auto& id = req.at("srs_id");
        if (!id.is_string() || id.get_ref<const std::string&>().empty() ||
            id.get_ref<const std::string&>().find_first_of("/#") != std::string::npos) {
            throw InvalidArgument("'srs_id' must be a non-empty string without '/' or '#'");
        }
    }
    if (req.contains("corpus") && !req.at("corpus").is_null()) {
        const auto& c = req.at("corpus");
        if (c.is_string()) {
            if (c.get_ref<const std::string&>() != "auto") throw InvalidArgument("'corpus' must be a manifest or \"auto\"");
        } else if (c.is_object()) {
            try {
                (void)corpus_from_json(c);
            } catch (const std::exception& e) {
                throw InvalidArgument(std::string("bad corpus manifest: ") + e.what());
            }
        } else {
            throw InvalidArgument("'corpus' must be a manifest or \"auto\"");
        }
    }
    if (req.contains("srs_group")) {
        const auto& g = req.at("srs_group");
        if (!g.is_array()) throw InvalidArgument("'srs_group' must be a list of texts");
        for (const auto& t : g) {
            if (!t.is_string()) throw InvalidArgument("'srs_group' must be a list of texts");
        }
    }
    if (req.contains("domain") && !req.at("domain").is_string()) throw InvalidArgument("'domain' must be a string");
    if (req.contains("config")) (void)pipeline_config_from_json(req.at("config"), defaults);
}

json load_json(const fs::path& p) { return json::parse(io::read_file(p.string())); }

}  // namespace

struct Service::Impl {
    ServiceOptions options;
    fs::path projects_dir;

    std::mutex registry_mutex;
    std::map<std::string, std::shared_ptr<Project>> projects;
    std::size_t next_id = 1;

    std::mutex pending_mutex;
    std::condition_variable pending_cv;
    std::size_t pending = 0;
    std::vector<std::thread> builders;

    httplib::Server server;
    std::thread server_thread;
    std::atomic<int> bound_port{0};

    explicit Impl(ServiceOptions o) : options(std::move(o)) {
        projects_dir = options.data_dir / "projects";
        fs::create_directories(projects_dir);
        if (!options.fetcher) {
            WikiApiFetcher::Options wiki;
            options.fetcher = std::make_shared<CachingFetcher>(std::make_shared<WikiApiFetcher>(wiki),
                                                               options.data_dir / "cache");
        }
        reload();
        install_routes();
    }

    ~Impl() {
        stop_server();
        std::vector<std::thread> threads;
        {
            std::lock_guard guard(pending_mutex);
            threads.swap(builders);
        }
        for (auto& t : threads) {
            if (t.joinable()) t.join();
        }
    }

    // ----------------------------------------------------------------------
    // Persistence

    void reload() {
        std::vector<fs::path> dirs;
        for (const auto& entry : fs::directory_iterator(projects_dir)) {
            if (entry.is_directory()) dirs.push_back(entry.path());
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& dir : dirs) {
            const auto name = dir.filename().string();
            if (name.size() < 2 || name[0] != 'p') continue;
            try {
                next_id = std::max<std::size_t>(next_id, std::stoul(name.substr(1)) + 1);
            } catch (const std::exception&) {
                continue;
            }
            if (!fs::exists(dir / "request.json")) continue;
            auto project = std::make_shared<Project>();
            project->id = name;
            project->dir = dir;
            try {
                project->request = load_json(dir / "request.json");
            } catch (const std::exception& e) {
                spdlog::warn("project {}: unreadable request ({})", name, e.what());
                continue;
            }
            projects.emplace(name, project);
            const auto manifest_path = dir / "manifest.json";
            bool restored = false;
            if (fs::exists(manifest_path)) {
                try {
                    const auto manifest = load_json(manifest_path);
                    if (manifest.value("status", "") == "ready") {
                        restore(*project, manifest);
                        restored = true;
                    }
                } catch (const std::exception& e) {
                    spdlog::warn("project {}: reload failed ({}), rebuilding", name, e.what());
                }
            }
            if (!restored) schedule_build(project);
        }
    }

    /// Rebuilds the in-memory engine from the stored SRS and corpus, with no
    /// fetching.
    void restore(Project& p, const json& manifest) {
        const auto srs_text = io::read_file((p.dir / "srs.txt").string());
        const auto corpus = load_corpus((p.dir / "corpus.json").string());
        const auto config = pipeline_config_from_json(p.request.value("config", json::object()), options.defaults);
        auto engine = std::make_shared<Engine>(
            std::vector<Document>{parse_plain_text(p.request.value("srs_id", "srs"), srs_text)}, corpus, config);
        p.warnings = manifest.value("warnings", std::vector<std::string>{});
        p.version = manifest.value("version", "");
        const auto expected = version_of(srs_text, to_json(corpus), p.request.value("config", json::object()));
        if (expected != p.version) {
            persist(p, srs_text, corpus, *engine);
        }
        p.engine = std::move(engine);
        p.status = "ready";
        spdlog::info("project {} restored", p.id);
    }

    void persist(Project& p, const std::string& srs_text, const Corpus& corpus, const Engine& engine) {
        const auto corpus_json = to_json(corpus);
        p.version = version_of(srs_text, corpus_json, p.request.value("config", json::object()));
        io::write_file((p.dir / "srs.txt").string(), srs_text);
        save_corpus(corpus, (p.dir / "corpus.json").string());
        if (const auto* idx = engine.srs_index()) save_index(*idx, (p.dir / "index" / "srs_passages.bm25.json").string());
        if (const auto* idx = engine.corpus_index()) {
            save_index(*idx, (p.dir / "index" / "corpus_documents.bm25.json").string());
        }
        write_manifest(p);
    }

    void write_manifest(const Project& p) {
        json m = {{"project_id", p.id},
                  {"format_version", kProjectFormatVersion},
                  {"status", p.status},
                  {"version", p.version},
                  {"warnings", p.warnings}};
        if (!p.error.empty()) m["error"] = p.error;
        io::write_file((p.dir / "manifest.json").string(), m.dump(2) + "\n");
    }

    // ----------------------------------------------------------------------
    // Builds

    void schedule_build(std::shared_ptr<Project> project) {
        std::lock_guard guard(pending_mutex);
        ++pending;
        builders.emplace_back([this, project]() {
            build(*project);
            std::lock_guard lock(pending_mutex);
            --pending;
            pending_cv.notify_all();
        });
    }

    void build(Project& p) {
        std::unique_lock lock(p.lock);
        const auto t0 = std::chrono::steady_clock::now();
        p.status = "building";
        p.error.clear();
        p.warnings.clear();
        try {
            const auto& req = p.request;
            const auto srs_text = req.at("srs").get<std::string>();
            const auto srs_id = req.value("srs_id", "srs");
            const auto srs = parse_plain_text(srs_id, srs_text);
            const auto config = pipeline_config_from_json(req.value("config", json::object()), options.defaults);

            Corpus corpus;
            const auto corpus_req = req.value("corpus", json());
            if (corpus_req.is_object()) {
                corpus = corpus_from_json(corpus_req);
            } else if (corpus_req.is_string()) {
                std::vector<Document> group;
                if (req.contains("srs_group")) {
                    for (const auto& t : req.at("srs_group")) {
                        group.push_back(parse_plain_text(srs_id + "-" + std::to_string(group.size()), t.get<std::string>()));
                    }
                }
                if (group.empty()) group.push_back(srs);
                AssembleOptions ao;
                ao.domain = req.value("domain", "");
                corpus = build_domain_corpus_if_absent(std::nullopt, group, *options.fetcher, ao, &p.warnings);
            }
            if (corpus.empty()) p.warnings.emplace_back("no domain corpus; questions are answered from the SRS only");

            auto engine = std::make_shared<Engine>(std::vector<Document>{srs}, std::move(corpus), config);
            persist(p, srs_text, engine->corpus(), *engine);
            p.engine = std::move(engine);
            p.status = "ready";
            write_manifest(p);
            const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            spdlog::info("project {} ready in {:.1f} ms ({} SRS passages, {} corpus documents)", p.id, ms,
                         p.engine->srs_passages().size(), p.engine->corpus().size());
        } catch (const std::exception& e) {
            p.status = "failed";
            p.error = e.what();
            spdlog::error("project {} build failed: {}", p.id, e.what());
            try {
                write_manifest(p);
            } catch (const std::exception&) {
            }
        }
    }

    // ----------------------------------------------------------------------
    // Endpoints

    std::shared_ptr<Project> find(const std::string& id) {
        std::lock_guard lock(registry_mutex);
        const auto it = projects.find(id);
        return it == projects.end() ? nullptr : it->second;
    }

    HttpReply create(std::string_view body) {
        json req;
        try {
            req = json::parse(body);
        } catch (const json::exception& e) {
            return error_reply(400, std::string("malformed JSON: ") + e.what());
        }
        try {
            validate_request(req, options.defaults);
        } catch (const Error& e) {
            return error_reply(400, e.what());
        }
        auto project = std::make_shared<Project>();
        project->request = std::move(req);
        {
            std::lock_guard lock(registry_mutex);
            project->id = "p" + std::to_string(next_id++);
            project->dir = projects_dir / project->id;
            projects.emplace(project->id, project);
        }
        fs::create_directories(project->dir);
        io::write_file((project->dir / "request.json").string(), project->request.dump() + "\n");
        write_manifest(*project);
        schedule_build(project);
        return {202, {{"project_id", project->id}, {"status", "building"}}};
    }

    HttpReply status(const std::string& id) {
        const auto p = find(id);
        if (!p) return error_reply(404, "unknown project '" + id + "'");
        std::shared_lock lock(p->lock, std::try_to_lock);
        if (!lock.owns_lock()) return {200, {{"project_id", id}, {"status", "building"}}};
        json out = {{"project_id", id}, {"status", p->status}, {"warnings", p->warnings}};
        if (!p->error.empty()) out["error"] = p->error;
        if (p->engine) {
            out["version"] = p->version;
            out["srs_passages"] = p->engine->srs_passages().size();
            out["corpus_documents"] = p->engine->corpus().size();
            out["config"] = to_json(p->engine->config());
        }
        return {200, out};
    }

    HttpReply question(const std::string& id, std::string_view body) {
        const auto p = find(id);
        if (!p) return error_reply(404, "unknown project '" + id + "'");
        std::shared_lock lock(p->lock, std::try_to_lock);
        if (!lock.owns_lock() || p->status != "ready") {
            json out = {{"error", "project is not ready"},
                        {"project_id", id},
                        {"status", lock.owns_lock() ? p->status : "building"}};
            return {409, out};
        }
        json req;
        try {
            req = json::parse(body);
        } catch (const json::exception& e) {
            return error_reply(400, std::string("malformed JSON: ") + e.what());
        }
        if (!req.is_object() || !req.contains("question") || !req.at("question").is_string() ||
            trim(req.at("question").get_ref<const std::string&>()).empty()) {
            return error_reply(400, "'question' must be a non-empty string");
        }
        std::optional<std::size_t> k;
        if (req.contains("k") && !req.at("k").is_null()) {
            if (!req.at("k").is_number_integer() || req.at("k").get<long long>() < 1) {
                return error_reply(400, "'k' must be a positive integer");
            }
            k = req.at("k").get<std::size_t>();
        }
        auto out = to_json(p->engine->ask(req.at("question").get<std::string>(), k));
        out["project_id"] = id;
        return {200, out};
    }

    HttpReply passage(const std::string& id, const std::string& pid) {
        const auto p = find(id);
        if (!p) return error_reply(404, "unknown project '" + id + "'");
        std::shared_lock lock(p->lock, std::try_to_lock);
        if (!lock.owns_lock() || p->status != "ready") {
            return {409, {{"error", "project is not ready"}, {"project_id", id}}};
        }
        const auto found = p->engine->find_passage(pid);
        if (!found) return error_reply(404, "unknown passage '" + pid + "'");
        return {200, to_json(*found)};
    }

    HttpReply route(std::string_view method, std::string_view path, std::string_view body) {
        const auto parts = split_path(path);
        const auto n = parts.size();
        if (method == "GET" && n == 1 && parts[0] == "health") {
            std::lock_guard lock(registry_mutex);
            return {200, {{"status", "ok"}, {"projects", projects.size()}}};
        }
        if (n >= 1 && parts[0] == "projects") {
            if (n == 1 && method == "POST") return create(body);
            if (n == 3 && parts[2] == "status" && method == "GET") return status(parts[1]);
            if (n == 3 && parts[2] == "questions" && method == "POST") return question(parts[1], body);
            if (n >= 4 && parts[2] == "passages" && method == "GET") {
                std::string pid = parts[3];
                for (std::size_t i = 4; i < n; ++i) pid += "/" + parts[i];
                return passage(parts[1], pid);
            }
        }
        return error_reply(404, "no route for " + std::string(method) + " " + std::string(path));
    }

    HttpReply handle(std::string_view method, std::string_view path, std::string_view body) {
        const auto t0 = std::chrono::steady_clock::now();
        HttpReply reply;
        try {
            reply = route(method, path, body);
        } catch (const InvalidArgument& e) {
            reply = error_reply(400, e.what());
        } catch (const std::exception& e) {
            reply = error_reply(500, e.what());
        }
        const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        spdlog::info("{} {} -> {} ({:.2f} ms)", method, path, reply.status, ms);
        return reply;
    }

    // ----------------------------------------------------------------------
    // HTTP

    void install_routes() {
        const auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
            const auto reply = handle(req.method, req.path, req.body);
            res.status = reply.status;
            res.set_content(reply.body.dump(), "application/json");
        };
        server.Get(".*", dispatch);
        server.Post(".*", dispatch);
    }

    void stop_server() {
        if (server.is_running()) server.stop();
        if (server_thread.joinable()) server_thread.join();
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() = default;

HttpReply Service::handle(std::string_view method, std::string_view path, std::string_view body) {
    return impl_->handle(method, path, body);
}

void Service::wait_idle() {
    std::unique_lock lock(impl_->pending_mutex);
    impl_->pending_cv.wait(lock, [this] { return impl_->pending == 0; });
}

void Service::start(const std::string& host, int port) {
    auto& s = impl_->server;
    if (port == 0) {
        impl_->bound_port = s.bind_to_any_port(host);
    } else if (s.bind_to_port(host, port)) {
        impl_->bound_port = port;
    } else {
        impl_->bound_port = -1;
    }
    if (impl_->bound_port <= 0) throw ResourceError("cannot bind " + host + ":" + std::to_string(port));
    impl_->server_thread = std::thread([&s]() { s.listen_after_bind(); });
    s.wait_until_ready();
    spdlog::info("listening on {}:{}", host, impl_->bound_port.load());
}

int Service::port() const { return impl_->bound_port; }

void Service::stop() { impl_->stop_server(); }

void Service::wait() {
    if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void Service::run(const std::string& host, int port) {
    start(host, port);
    wait();
}

}  // namespace reqqa
