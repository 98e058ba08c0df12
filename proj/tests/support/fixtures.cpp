#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "reqqa/text.hpp"

namespace fixture {

namespace fs = std::filesystem;

fs::path data_dir() { return REQQA_FIXTURE_DIR; }

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    for (;;) {
        path_ = fs::temp_directory_path() /
                ("reqqa-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        if (fs::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

std::string pseudo_word(std::mt19937_64& rng, std::size_t syllables) {
    static const std::string consonants = "bdfgklmnprstvz";
    static const std::string vowels = "aeiou";
    for (;;) {
        std::string w;
        for (std::size_t i = 0; i < syllables; ++i) {
            w += consonants[rng() % consonants.size()];
            w += vowels[rng() % vowels.size()];
        }
        if (!reqqa::default_stopwords().contains(w)) return w;
    }
}

std::string paragraph_with_lengths(std::mt19937_64& rng, const std::vector<std::size_t>& words) {
    std::string out;
    for (std::size_t s = 0; s < words.size(); ++s) {
        if (s) out += ' ';
        for (std::size_t w = 0; w < words[s]; ++w) {
            auto word = pseudo_word(rng, 1 + rng() % 3);
            if (w == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
            if (w) out += ' ';
            out += word;
        }
        out += '.';
    }
    return out;
}

std::vector<std::string> random_vocab(std::mt19937_64& rng, std::size_t n) {
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < n) {
        auto w = pseudo_word(rng, 2);
        if (seen.insert(w).second) out.push_back(w);
    }
    return out;
}

std::vector<reqqa::Item> random_items(std::mt19937_64& rng, std::size_t n, const std::vector<std::string>& vocab) {
    std::vector<reqqa::Item> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto len = 1 + rng() % 30;
        std::string text;
        for (std::size_t w = 0; w < len; ++w) {
            if (w) text += ' ';
            // a few stopwords keep the analyzer honest
            text += (rng() % 7 == 0) ? "the" : vocab[rng() % vocab.size()];
        }
        char id[32];
        std::snprintf(id, sizeof id, "i%03zu", i);
        out.push_back({id, text});
    }
    return out;
}

std::string random_query(std::mt19937_64& rng, const std::vector<std::string>& vocab) {
    const auto len = 1 + rng() % 5;
    std::string q;
    for (std::size_t w = 0; w < len; ++w) {
        if (w) q += ' ';
        q += vocab[rng() % vocab.size()];
    }
    return q;
}

Planted make_planted(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<std::string> used;
    auto fresh = [&](std::size_t syl) {
        for (;;) {
            auto w = pseudo_word(rng, syl);
            if (used.insert(w).second) return w;
        }
    };
    static const char* units[] = {"kw", "hz", "kg", "mm", "lux"};

    struct Fact {
        std::string sentence;
        PlantedQuestion q;
    };
    std::vector<Fact> facts;
    for (std::size_t i = 0; i < 50; ++i) {
        const auto attr = fresh(3);
        const auto uid = "u" + std::to_string(1000 + i * 7);
        std::string code;
        for (;;) {
            code = std::string(1, static_cast<char>('a' + rng() % 26)) + static_cast<char>('a' + rng() % 26) +
                   std::to_string(1000 + rng() % 9000);
            if (used.insert(code).second) break;
        }
        const std::string answer = code + " " + units[rng() % 5];
        Fact f;
        f.sentence = "The " + attr + " code for unit " + uid + " is " + answer + ".";
        f.q.question = "What is the " + attr + " code for unit " + uid + "?";
        f.q.answer = answer;
        facts.push_back(std::move(f));
    }

    Planted out;
    out.srs.id = "srs-synthetic";
    out.srs.source = reqqa::Source::Srs;
    for (std::size_t p = 0; p < 20; ++p) {
        std::string text = "The system shall record each " + fresh(2) + " event.";
        for (std::size_t i = p; i < facts.size(); i += 20) {
            text += " " + facts[i].sentence;
            facts[i].q.srs_passage_id = reqqa::passage_id(out.srs.id, p);
        }
        out.srs.paragraphs.push_back({p, text});
    }

    out.corpus.set_domain("synthetic");
    for (std::size_t d = 0; d < 5; ++d) {
        reqqa::CorpusDocument doc;
        doc.id = "catalogue-" + std::to_string(d);
        doc.title = "Catalogue " + std::to_string(d);
        doc.text = "This catalogue lists " + fresh(2) + " entries.";
        std::size_t ordinal = 1;
        for (std::size_t i = d; i < facts.size(); i += 5) {
            doc.text += "\n\n" + facts[i].sentence;
            facts[i].q.corpus_doc_id = doc.id;
            facts[i].q.corpus_passage_id = reqqa::passage_id(doc.id, ordinal++);
        }
        out.corpus.add(std::move(doc));
    }
    for (auto& f : facts) out.questions.push_back(std::move(f.q));
    return out;
}

std::vector<reqqa::QAPair> planted_dataset(const Planted& planted) {
    std::map<std::string, std::string> text;
    for (const auto& p : reqqa::split_passages(planted.srs)) text[p.id] = p.text;
    for (const auto& d : planted.corpus.documents()) {
        for (const auto& p : reqqa::split_passages(reqqa::parse_plain_text(d.id, d.text, reqqa::Source::Corpus))) {
            text[p.id] = p.text;
        }
    }
    std::vector<reqqa::QAPair> out;
    for (std::size_t i = 0; i < planted.questions.size(); ++i) {
        const auto& q = planted.questions[i];
        reqqa::QAPair row;
        row.id = "srs-" + std::to_string(i);
        row.domain = planted.corpus.domain();
        row.question = q.question;
        row.answer = q.answer;
        row.source = reqqa::Source::Srs;
        row.doc_id = planted.srs.id;
        row.passage_id = q.srs_passage_id;
        row.passage_text = text.at(q.srs_passage_id);
        out.push_back(row);
        row.id = "corpus-" + std::to_string(i);
        row.source = reqqa::Source::Corpus;
        row.doc_id = q.corpus_doc_id;
        row.passage_id = q.corpus_passage_id;
        row.passage_text = text.at(q.corpus_passage_id);
        out.push_back(row);
    }
    return out;
}

std::vector<reqqa::Passage> make_qgen_passages() {
    static const char* components[] = {"navigation camera", "star tracker", "reaction wheel", "power unit",
                                       "thermal controller", "radio transponder", "propulsion module",
                                       "flight computer", "solar array", "data recorder"};
    static const char* stations[] = {"Ground Station", "Mission Control", "Science Operations Centre",
                                     "Flight Dynamics Team", "Launch Authority"};
    static const char* units[] = {"kg", "W", "Hz", "minutes", "seconds"};

    std::vector<reqqa::Passage> out;
    auto make_doc = [&](const std::string& id, reqqa::Source source, std::size_t n, std::size_t offset) {
        reqqa::Document doc{id, source, {}};
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = offset + i;
            const std::string comp = components[k % 10];
            const std::string text =
                "REQ-" + std::to_string(100 + k) + " The " + comp + " shall not exceed " +
                std::to_string(10 + 7 * k) + " " + units[k % 5] + " during phase " + std::to_string(k % 4 + 1) +
                ". The " + comp + " shall report its status to the " + stations[k % 5] + " every " +
                std::to_string(2 + k % 9) + " seconds.";
            doc.paragraphs.push_back({i, text});
        }
        auto passages = reqqa::split_passages(doc);
        out.insert(out.end(), passages.begin(), passages.end());
    };
    make_doc("srs-a", reqqa::Source::Srs, 15, 0);
    make_doc("srs-b", reqqa::Source::Srs, 15, 15);
    make_doc("space-articles", reqqa::Source::Corpus, 10, 30);
    return out;
}

}  // namespace fixture
