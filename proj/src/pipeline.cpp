#include "reqqa/pipeline.hpp"

#include <chrono>
#include <future>

#include <nlohmann/json.hpp>

#include "reqqa/error.hpp"

namespace reqqa {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

bool has_text(const std::vector<Document>& docs) {
    for (const auto& d : docs) {
        for (const auto& p : d.paragraphs) {
            if (!trim(p.text).empty()) return true;
        }
    }
    return false;
}

Document corpus_document(const CorpusDocument& doc) {
    return parse_plain_text(doc.id, doc.text, Source::Corpus);
}

struct Branch {
    std::vector<PassageHit> hits;
    std::vector<std::string> warnings;
    double retrieval_ms = 0.0;
    double reading_ms = 0.0;
};

}  // namespace

void PipelineConfig::validate() const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (c < 1) throw InvalidArgument("c must be >= 1");
    if (split.overlap_sentences != 1) throw InvalidArgument("overlap must be exactly one sentence");
}

Engine::Engine(std::vector<Document> srs, Corpus corpus, PipelineConfig config)
    : config_(std::move(config)), corpus_(std::move(corpus)) {
    config_.validate();
    if (!has_text(srs)) throw InvalidArgument("SRS is empty");
    for (auto& d : srs) d.source = Source::Srs;

    const auto t0 = Clock::now();
    srs_passages_ = split_passages(srs, config_.split);
    srs_split_ms_ = ms_since(t0);

    std::vector<Item> items;
    items.reserve(srs_passages_.size());
    for (std::size_t i = 0; i < srs_passages_.size(); ++i) {
        srs_by_id_.emplace(srs_passages_[i].id, i);
        items.push_back({srs_passages_[i].id, srs_passages_[i].text});
    }
    srs_retriever_.emplace(Retriever::build(std::move(items), config_.passage_retriever));
    if (!corpus_.empty()) corpus_retriever_.emplace(Retriever::build(corpus_.items(), config_.document_retriever));

    reader_ = config_.reader ? config_.reader : std::make_shared<ReferenceReader>();
    if (!reader_->concurrency_safe()) reader_mutex_ = std::make_unique<std::mutex>();
}

std::vector<Passage> Engine::corpus_passages(std::string_view doc_id) const {
    const auto* doc = corpus_.find(doc_id);
    if (!doc) throw InvalidArgument("unknown corpus document: " + std::string(doc_id));
    return split_passages(corpus_document(*doc), config_.split);
}

std::optional<Passage> Engine::find_passage(std::string_view passage_id) const {
    if (auto it = srs_by_id_.find(passage_id); it != srs_by_id_.end()) return srs_passages_[it->second];
    const auto hash = passage_id.rfind('#');
    if (hash == std::string_view::npos) return std::nullopt;
    const auto doc_id = passage_id.substr(0, hash);
    if (!corpus_.find(doc_id)) return std::nullopt;
    for (auto& p : corpus_passages(doc_id)) {
        if (p.id == passage_id) return std::move(p);
    }
    return std::nullopt;
}

const Bm25Index* Engine::srs_index() const noexcept { return srs_retriever_ ? srs_retriever_->bm25() : nullptr; }

const Bm25Index* Engine::corpus_index() const noexcept {
    return corpus_retriever_ ? corpus_retriever_->bm25() : nullptr;
}

std::vector<PassageHit> Engine::read_hits(std::string_view question, const std::vector<Passage>& passages,
                                          const RankedHits& ranked, std::vector<std::string>& warnings) const {
    std::map<std::string_view, const Passage*, std::less<>> by_id;
    for (const auto& p : passages) by_id.emplace(p.id, &p);
    std::vector<PassageHit> out;
    out.reserve(ranked.size());
    for (const auto& hit : ranked.hits) {
        PassageHit h;
        h.passage = *by_id.at(hit.id);
        h.score = hit.score;
        try {
            std::unique_lock<std::mutex> lock;
            if (reader_mutex_) lock = std::unique_lock<std::mutex>(*reader_mutex_);
            h.answer = extract_answer(*reader_, question, h.passage);
        } catch (const std::exception& e) {
            h.warning = "reader '" + reader_->name() + "' failed on " + hit.id + ": " + e.what();
            warnings.push_back(*h.warning);
        }
        out.push_back(std::move(h));
    }
    return out;
}

QAResult Engine::ask(std::string_view question, std::optional<std::size_t> k_override) const {
    const auto t_total = Clock::now();
    const auto k = k_override.value_or(config_.k);
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (trim(question).empty()) throw InvalidArgument("question is empty");

    QAResult result;
    result.question = std::string(question);

    // Step 1.
    auto t0 = Clock::now();
    if (corpus_retriever_) {
        result.retrieved_doc_ids = corpus_retriever_->rank(question).top(config_.c).ids();
    } else {
        result.corpus_missing = true;
        result.warnings.emplace_back("no domain corpus; answering from the SRS only");
    }
    result.timings.document_retrieval_ms = ms_since(t0);

    // Step 2. The SRS is split once, up front.
    t0 = Clock::now();
    std::vector<Passage> corpus_passages;
    for (const auto& id : result.retrieved_doc_ids) {
        auto part = this->corpus_passages(id);
        corpus_passages.insert(corpus_passages.end(), std::make_move_iterator(part.begin()),
                               std::make_move_iterator(part.end()));
    }
    result.timings.splitting_ms = ms_since(t0);

    // Steps 3 and 4, per source.
    const auto srs_branch = [&]() {
        Branch b;
        auto t = Clock::now();
        const auto ranked = srs_retriever_->rank(question).top(k);
        b.retrieval_ms = ms_since(t);
        t = Clock::now();
        b.hits = read_hits(question, srs_passages_, ranked, b.warnings);
        b.reading_ms = ms_since(t);
        return b;
    };
    const auto corpus_branch = [&]() {
        Branch b;
        if (corpus_passages.empty()) return b;
        auto t = Clock::now();
        std::vector<Item> items;
        items.reserve(corpus_passages.size());
        for (const auto& p : corpus_passages) items.push_back({p.id, p.text});
        const auto ranked = Retriever::build(std::move(items), config_.passage_retriever).rank(question).top(k);
        b.retrieval_ms = ms_since(t);
        t = Clock::now();
        b.hits = read_hits(question, corpus_passages, ranked, b.warnings);
        b.reading_ms = ms_since(t);
        return b;
    };

    Branch srs;
    Branch corpus;
    if (config_.parallel && !corpus_passages.empty()) {
        auto pending = std::async(std::launch::async, corpus_branch);
        srs = srs_branch();
        corpus = pending.get();
    } else {
        srs = srs_branch();
        corpus = corpus_branch();
    }

    result.srs_hits = std::move(srs.hits);
    result.corpus_hits = std::move(corpus.hits);
    for (auto* b : {&srs, &corpus}) {
        result.warnings.insert(result.warnings.end(), b->warnings.begin(), b->warnings.end());
        result.timings.passage_retrieval_ms += b->retrieval_ms;
        result.timings.answer_extraction_ms += b->reading_ms;
    }
    result.timings.total_ms = ms_since(t_total);
    return result;
}

QAResult ask(std::string_view question, const Document& srs, const Corpus& corpus, const PipelineConfig& config) {
    const auto t0 = Clock::now();
    const Engine engine({srs}, corpus, config);
    const auto setup_ms = ms_since(t0);
    auto result = engine.ask(question);
    result.timings.splitting_ms += engine.srs_split_ms();
    result.timings.total_ms += setup_ms;
    return result;
}

Corpus build_domain_corpus_if_absent(const std::optional<Corpus>& corpus, const std::vector<Document>& srs_group,
                                     ArticleFetcher& fetcher, const AssembleOptions& options,
                                     std::vector<std::string>* warnings) {
    if (corpus) return *corpus;
    const auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };
    try {
        const auto keywords = select_keywords(extract_concepts(srs_group));
        if (keywords.empty()) {
            warn("no domain keywords found in the SRS group; corpus left empty");
            return Corpus(options.domain);
        }
        AssembleReport report;
        auto built = assemble_corpus(keywords, fetcher, options, &report);
        for (auto& w : report.warnings) warn(std::move(w));
        return built;
    } catch (const std::exception& e) {
        warn(std::string("corpus build failed: ") + e.what());
        return Corpus(options.domain);
    }
}

// --------------------------------------------------------------------------
// JSON

json to_json(const Passage& p) {
    return {{"id", p.id},
            {"doc_id", p.doc_id},
            {"source", to_string(p.source)},
            {"paragraph_index", p.paragraph_index},
            {"first_sentence", p.first_sentence},
            {"last_sentence", p.last_sentence},
            {"text", p.text},
            {"token_count", p.token_count},
            {"oversized", p.oversized}};
}

json to_json(const AnswerSpan& s) {
    return {{"passage_id", s.passage_id}, {"start", s.start}, {"end", s.end}, {"text", s.text}, {"score", s.score}};
}

namespace {

json hits_json(const std::vector<PassageHit>& hits) {
    json out = json::array();
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto& h = hits[i];
        json row = {{"rank", i + 1}, {"score", h.score}, {"passage", to_json(h.passage)}};
        row["answer"] = h.answer ? to_json(*h.answer) : json(nullptr);
        if (h.warning) row["warning"] = *h.warning;
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace

json to_json(const QAResult& r) {
    return {{"question", r.question},
            {"srs_hits", hits_json(r.srs_hits)},
            {"corpus_hits", hits_json(r.corpus_hits)},
            {"retrieved_doc_ids", r.retrieved_doc_ids},
            {"corpus_missing", r.corpus_missing},
            {"warnings", r.warnings},
            {"timings",
             {{"document_retrieval_ms", r.timings.document_retrieval_ms},
              {"splitting_ms", r.timings.splitting_ms},
              {"passage_retrieval_ms", r.timings.passage_retrieval_ms},
              {"answer_extraction_ms", r.timings.answer_extraction_ms},
              {"total_ms", r.timings.total_ms}}}};
}

}  // namespace reqqa
