#include "reqqa/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <csignal>
#include <filesystem>
#include <iomanip>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "io.hpp"
#include "reqqa/config.hpp"
#include "reqqa/corpus.hpp"
#include "reqqa/error.hpp"
#include "reqqa/evalharness.hpp"
#include "reqqa/pipeline.hpp"
#include "reqqa/qgen.hpp"
#include "reqqa/service.hpp"

namespace reqqa {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<Document> load_documents(const std::string& path, Source source) {
    const fs::path p(path);
    if (!fs::exists(p)) throw ResourceError("not found: " + path);
    std::vector<fs::path> files;
    if (fs::is_directory(p)) {
        for (const auto& e : fs::directory_iterator(p)) {
            const auto ext = e.path().extension();
            if (e.is_regular_file() && (ext == ".txt" || ext == ".jsonl")) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(p);
    }
    std::vector<Document> out;
    for (const auto& f : files) {
        const auto text = io::read_file(f.string());
        if (f.extension() == ".jsonl") {
            auto docs = parse_jsonl_documents(text, source);
            out.insert(out.end(), docs.begin(), docs.end());
        } else {
            out.push_back(parse_plain_text(f.stem().string(), text, source));
        }
    }
    return out;
}

json load_json_file(const std::string& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& content) { io::write_file(path, content); }

std::string corpus_out_path(const std::string& out) {
    const fs::path p(out);
    if (p.extension() == ".json") return out;
    return (p / "manifest.json").string();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        if (nl > pos) lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

void print_result_text(std::ostream& out, const QAResult& r) {
    out << "Question: " << r.question << "\n";
    const auto pane = [&](const char* title, const std::vector<PassageHit>& hits) {
        out << "\n" << title << "\n";
        if (hits.empty()) out << "  (none)\n";
        for (std::size_t i = 0; i < hits.size(); ++i) {
            const auto& h = hits[i];
            out << "  " << (i + 1) << ". [" << h.passage.id << "] score " << std::fixed << std::setprecision(4)
                << h.score << "\n";
            out << "     answer: " << (h.answer ? h.answer->text : std::string("(none)")) << "\n";
        }
    };
    pane("From the SRS", r.srs_hits);
    pane("From the domain corpus", r.corpus_hits);
    for (const auto& w : r.warnings) out << "warning: " << w << "\n";
}

// ----------------------------------------------------------------------------
// Subcommands. Each one reads its captured options and writes to `out`.

struct Common {
    std::string format = "json";
};

int cmd_split(const std::string& input, const std::string& source, std::size_t budget, const Common& c,
              std::ostream& out) {
    SplitConfig config;
    config.token_budget = budget;
    const auto docs = load_documents(input, source_from_string(source));
    const auto passages = split_passages(docs, config);
    if (c.format == "json") {
        json arr = json::array();
        for (const auto& p : passages) arr.push_back(to_json(p));
        print_json(out, arr);
    } else {
        for (const auto& p : passages) out << p.id << "\t" << p.token_count << "\t" << p.text << "\n";
    }
    return kExitOk;
}

int cmd_index(const std::string& corpus_path, const std::string& srs_path, const std::string& out_path,
              const std::string& kind, std::size_t budget, const Common& c, std::ostream& out) {
    if (corpus_path.empty() == srs_path.empty()) throw InvalidArgument("give exactly one of --corpus or --srs");
    std::vector<Item> items;
    if (!corpus_path.empty()) {
        items = load_corpus(corpus_path).items();
    } else {
        SplitConfig config;
        config.token_budget = budget;
        for (const auto& p : split_passages(load_documents(srs_path, Source::Srs), config)) {
            items.push_back({p.id, p.text});
        }
    }
    const auto k = retriever_from_string(kind);
    json summary = {{"items", items.size()}, {"out", out_path}, {"retriever", to_string(k)}};
    if (k == RetrieverKind::Tfidf) {
        const auto idx = TfidfIndex::build(items);
        save_index(idx, out_path);
        summary["vocabulary"] = idx.vocabulary_size();
    } else if (k == RetrieverKind::Bm25) {
        const auto idx = Bm25Index::build(items);
        save_index(idx, out_path);
        summary["avg_len"] = idx.avg_len();
    } else {
        throw InvalidArgument("only tfidf and bm25 indices are persisted");
    }
    if (c.format == "json") {
        print_json(out, summary);
    } else {
        out << "indexed " << items.size() << " items into " << out_path << "\n";
    }
    return kExitOk;
}

int cmd_ask(const std::string& srs_path, const std::string& corpus_path, const std::string& question,
            std::optional<std::size_t> k, std::optional<std::size_t> c_docs, const std::string& config_path,
            const Common& c, std::ostream& out) {
    PipelineConfig config;
    if (!config_path.empty()) config = pipeline_config_from_json(load_json_file(config_path));
    if (k) config.k = *k;
    if (c_docs) config.c = *c_docs;
    const auto srs = load_documents(srs_path, Source::Srs);
    const Corpus corpus = corpus_path.empty() ? Corpus{} : load_corpus(corpus_path);
    const Engine engine(srs, corpus, config);
    auto result = engine.ask(question);
    result.timings.splitting_ms += engine.srs_split_ms();
    if (c.format == "json") {
        print_json(out, to_json(result));
    } else {
        print_result_text(out, result);
    }
    return kExitOk;
}

int cmd_build_corpus(const std::string& group_path, const std::string& out_path, const std::string& domain,
                     const std::string& fixtures, const std::string& cache, std::size_t n_keywords,
                     double rate_limit, const Common& c, std::ostream& out) {
    const auto group = load_documents(group_path, Source::Srs);
    const auto keywords = select_keywords(extract_concepts(group), n_keywords);
    std::shared_ptr<ArticleFetcher> fetcher;
    if (!fixtures.empty()) {
        fetcher = std::make_shared<FixtureFetcher>(fs::path(fixtures));
    } else {
        WikiApiFetcher::Options wiki;
        wiki.requests_per_second = rate_limit;
        fetcher = std::make_shared<WikiApiFetcher>(wiki);
    }
    if (!cache.empty()) fetcher = std::make_shared<CachingFetcher>(fetcher, fs::path(cache));
    AssembleOptions options;
    options.domain = domain;
    AssembleReport report;
    const auto corpus = assemble_corpus(keywords, *fetcher, options, &report);
    const auto path = corpus_out_path(out_path);
    save_corpus(corpus, path);
    json summary = {{"documents", corpus.size()},
                    {"keywords", keywords},
                    {"failed_keywords", report.failed_keywords},
                    {"warnings", report.warnings},
                    {"out", path}};
    if (c.format == "json") {
        print_json(out, summary);
    } else {
        out << "wrote " << corpus.size() << " documents to " << path << "\n";
    }
    return kExitOk;
}

struct GenerateArgs {
    std::string input;
    std::string corpus;
    std::string domain;
    std::string out;
    std::string annotations;
    std::string manual;
    std::uint64_t seed = 0;
    double fraction = 0.05;
    std::size_t max_pairs = 3;
    std::size_t budget = 512;
    bool no_filter = false;
};

int cmd_generate(const GenerateArgs& a, const Common& c, std::ostream& out) {
    SplitConfig split;
    split.token_budget = a.budget;
    const ReferenceGenerator generator(a.max_pairs);
    const ReferenceEvaluator evaluator;
    std::vector<QAPair> pairs;
    if (!a.input.empty()) {
        const auto passages = split_passages(load_documents(a.input, Source::Srs), split);
        auto generated = generate_pairs(passages, generator, a.seed, &evaluator, a.domain);
        pairs.insert(pairs.end(), generated.begin(), generated.end());
    }
    if (!a.corpus.empty()) {
        const auto corpus = load_corpus(a.corpus);
        const auto domain = a.domain.empty() ? corpus.domain() : a.domain;
        std::vector<Document> docs;
        for (const auto& d : corpus.documents()) docs.push_back(parse_plain_text(d.id, d.text, Source::Corpus));
        const auto passages = split_passages(docs, split);
        auto generated = generate_pairs(passages, generator, a.seed, &evaluator, domain);
        pairs.insert(pairs.end(), generated.begin(), generated.end());
    }
    if (a.input.empty() && a.corpus.empty()) throw InvalidArgument("give --input and/or --corpus");
    const auto generated_count = pairs.size();
    if (!a.no_filter) pairs = filter_top_fraction(std::move(pairs), evaluator, a.fraction);
    const auto filtered_count = pairs.size();
    if (!a.annotations.empty()) {
        std::vector<QAPair> manual;
        if (!a.manual.empty()) manual = read_dataset(io::read_file(a.manual));
        pairs = apply_validation(std::move(pairs), read_annotations(io::read_file(a.annotations)), std::move(manual));
    }
    const auto dataset = write_dataset(pairs);
    if (!a.out.empty()) write_text(a.out, dataset);
    if (c.format == "json") {
        json summary = {{"generated", generated_count}, {"selected", filtered_count}, {"written", pairs.size()}};
        if (!a.out.empty()) {
            summary["out"] = a.out;
        } else {
            summary["pairs"] = json::array();
            for (const auto& line : split_lines(dataset)) summary["pairs"].push_back(json::parse(line));
        }
        print_json(out, summary);
    } else if (a.out.empty()) {
        out << dataset;
    } else {
        out << "wrote " << pairs.size() << " pairs to " << a.out << "\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& dataset_path, const std::string& config_path, const std::string& srs_dir,
             const std::vector<std::string>& corpora, const Common& c, std::ostream& out) {
    ExperimentInputs inputs;
    inputs.dataset = read_dataset(io::read_file(dataset_path));
    if (!srs_dir.empty()) {
        for (auto& d : load_documents(srs_dir, Source::Srs)) {
            auto id = d.id;
            inputs.srs.emplace(std::move(id), std::move(d));
        }
    }
    for (const auto& spec : corpora) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw InvalidArgument("--corpus expects domain=path, got '" + spec + "'");
        auto corpus = load_corpus(spec.substr(eq + 1));
        corpus.set_domain(spec.substr(0, eq));
        inputs.corpora.emplace(spec.substr(0, eq), std::move(corpus));
    }
    const auto config = config_path.empty() ? ExperimentConfig{} : experiment_config_from_json(load_json_file(config_path));
    const auto report = run_experiment(inputs, config);
    if (c.format == "json") {
        print_json(out, to_json(report));
    } else if (c.format == "csv") {
        out << format_csv(report);
    } else {
        out << format_table(report);
    }
    return kExitOk;
}

Service* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(const std::string& data_dir, const std::string& host, int port, const std::string& fixtures,
              const std::string& config_path, std::ostream& out) {
    ServiceOptions options;
    options.data_dir = data_dir;
    if (!config_path.empty()) options.defaults = pipeline_config_from_json(load_json_file(config_path));
    if (!fixtures.empty()) options.fetcher = std::make_shared<FixtureFetcher>(fs::path(fixtures));
    Service service(std::move(options));
    service.start(host, port);
    out << json{{"listening", host + ":" + std::to_string(service.port())}}.dump() << std::endl;
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.wait();
    g_service = nullptr;
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Question answering over requirements specifications", "reqqa"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "reqqa 0.1.0");
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

    Common common;
    const auto add_format = [&](CLI::App* sub, std::vector<std::string> choices) {
        sub->add_option("--format", common.format, "Output format")
            ->check(CLI::IsMember(std::move(choices)))
            ->capture_default_str();
    };

    std::function<int()> action;

    // split
    auto* split = app.add_subcommand("split", "Split documents into passages");
    std::string split_input, split_source = "srs";
    std::size_t budget = 512;
    split->add_option("--input", split_input, "Text, JSONL or directory")->required();
    split->add_option("--source", split_source, "srs|corpus")->check(CLI::IsMember({"srs", "corpus"}));
    split->add_option("--token-budget", budget, "Passage token budget")->check(CLI::PositiveNumber);
    add_format(split, {"json", "text"});
    split->callback([&] { action = [&] { return cmd_split(split_input, split_source, budget, common, out); }; });

    // index
    auto* index = app.add_subcommand("index", "Build and save a lexical index");
    std::string index_corpus, index_srs, index_out, index_kind = "bm25";
    index->add_option("--corpus", index_corpus, "Corpus manifest or directory");
    index->add_option("--srs", index_srs, "SRS text whose passages are indexed");
    index->add_option("--out", index_out, "Index file")->required();
    index->add_option("--retriever", index_kind, "bm25|tfidf")->check(CLI::IsMember({"bm25", "tfidf"}));
    index->add_option("--token-budget", budget, "Passage token budget")->check(CLI::PositiveNumber);
    add_format(index, {"json", "text"});
    index->callback([&] {
        action = [&] { return cmd_index(index_corpus, index_srs, index_out, index_kind, budget, common, out); };
    });

    // ask
    auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
    std::string ask_srs, ask_corpus, ask_question, ask_config;
    std::optional<std::size_t> ask_k, ask_c;
    ask_cmd->add_option("--srs", ask_srs, "SRS text or JSONL")->required();
    ask_cmd->add_option("--corpus", ask_corpus, "Corpus manifest or directory");
    ask_cmd->add_option("--question,-q", ask_question, "Question")->required();
    ask_cmd->add_option("-k", ask_k, "Passages per source")->check(CLI::PositiveNumber);
    ask_cmd->add_option("-c", ask_c, "Corpus documents retrieved")->check(CLI::PositiveNumber);
    ask_cmd->add_option("--config", ask_config, "JSON configuration file");
    add_format(ask_cmd, {"json", "text"});
    ask_cmd->callback([&] {
        action = [&] { return cmd_ask(ask_srs, ask_corpus, ask_question, ask_k, ask_c, ask_config, common, out); };
    });

    // build-corpus
    auto* build = app.add_subcommand("build-corpus", "Assemble a domain corpus from SRS keywords");
    std::string group_path, corpus_out, domain, fixtures, cache;
    std::size_t n_keywords = 50;
    double rate_limit = 1.0;
    build->add_option("--srs-group", group_path, "SRS file or directory")->required();
    build->add_option("--out", corpus_out, "Output directory or .json file")->required();
    build->add_option("--domain", domain, "Domain label");
    build->add_option("--fixtures", fixtures, "Serve articles from a local directory instead of the wiki API");
    build->add_option("--cache", cache, "Fetch cache directory");
    build->add_option("--keywords", n_keywords, "Keywords to search")->check(CLI::PositiveNumber);
    build->add_option("--rate-limit", rate_limit, "Wiki API requests per second")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_format(build, {"json", "text"});
    build->callback([&] {
        action = [&] {
            return cmd_build_corpus(group_path, corpus_out, domain, fixtures, cache, n_keywords, rate_limit, common,
                                    out);
        };
    });

    // generate-qa
    auto* gen = app.add_subcommand("generate-qa", "Generate, filter and validate question-answer pairs");
    GenerateArgs ga;
    gen->add_option("--input", ga.input, "SRS text, JSONL or directory");
    gen->add_option("--corpus", ga.corpus, "Corpus manifest or directory");
    gen->add_option("--domain", ga.domain, "Domain label");
    gen->add_option("--out", ga.out, "Dataset JSONL");
    gen->add_option("--seed", ga.seed, "Generator seed");
    gen->add_option("--fraction", ga.fraction, "Share kept per group")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--max-pairs", ga.max_pairs, "Pairs per passage")->check(CLI::PositiveNumber);
    gen->add_option("--token-budget", ga.budget, "Passage token budget")->check(CLI::PositiveNumber);
    gen->add_option("--annotations", ga.annotations, "Validation labels JSONL");
    gen->add_option("--manual", ga.manual, "Manually written pairs JSONL");
    gen->add_flag("--no-filter", ga.no_filter, "Keep every generated pair");
    add_format(gen, {"json", "jsonl"});
    gen->callback([&] { action = [&] { return cmd_generate(ga, common, out); }; });

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate retrievers and readers on a dataset");
    std::string dataset, eval_config, srs_dir;
    std::vector<std::string> eval_corpora;
    eval->add_option("--dataset", dataset, "Dataset JSONL")->required();
    eval->add_option("--config", eval_config, "JSON experiment matrix");
    eval->add_option("--srs-dir", srs_dir, "Directory of SRS documents named by doc_id");
    eval->add_option("--corpus", eval_corpora, "domain=path, repeatable");
    add_format(eval, {"json", "table", "csv"});
    eval->callback([&] {
        action = [&] { return cmd_eval(dataset, eval_config, srs_dir, eval_corpora, common, out); };
    });

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string data_dir = "reqqa-data", host = "127.0.0.1", serve_fixtures, serve_config;
    int port = 8080;
    serve->add_option("--data-dir", data_dir, "Project store")->capture_default_str();
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port, 0 for any")->capture_default_str();
    serve->add_option("--fixtures", serve_fixtures, "Serve auto corpora from a local article directory");
    serve->add_option("--config", serve_config, "Default pipeline configuration");
    add_format(serve, {"json"});
    serve->callback([&] {
        action = [&] { return cmd_serve(data_dir, host, port, serve_fixtures, serve_config, out); };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const auto code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    try {
        return action();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace reqqa
