#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reqqa/qgen.hpp"
#include "reqqa/retrieval.hpp"
#include "reqqa/textseg.hpp"

namespace fixture {

/// Directory of the checked-in test data.
std::filesystem::path data_dir();

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& content);

/// Pronounceable lowercase word that is not a stopword.
std::string pseudo_word(std::mt19937_64& rng, std::size_t syllables = 3);

/// A paragraph of sentences with the given word counts. Each sentence is
/// capitalized and ends in '.', so its token count is words + 1.
std::string paragraph_with_lengths(std::mt19937_64& rng, const std::vector<std::size_t>& words);

/// Random items over a small vocabulary, so terms repeat across items.
std::vector<reqqa::Item> random_items(std::mt19937_64& rng, std::size_t n, const std::vector<std::string>& vocab);
std::string random_query(std::mt19937_64& rng, const std::vector<std::string>& vocab);
std::vector<std::string> random_vocab(std::mt19937_64& rng, std::size_t n);

struct PlantedQuestion {
    std::string question;
    std::string answer;
    std::string srs_passage_id;
    std::string corpus_doc_id;
    std::string corpus_passage_id;
};

/// A 20-paragraph SRS and a 5-document corpus with 50 planted facts. Each
/// fact sentence appears once in the SRS and once in the corpus; its
/// question shares every content word with it except the answer.
struct Planted {
    reqqa::Document srs;
    reqqa::Corpus corpus;
    std::vector<PlantedQuestion> questions;
};

Planted make_planted(std::uint64_t seed = 7);

/// Dataset rows for the planted facts: one SRS row and one corpus row each.
std::vector<reqqa::QAPair> planted_dataset(const Planted& planted);

/// Requirement-style passages for question generation: two SRS documents of
/// 15 passages and a 10-passage corpus article set.
std::vector<reqqa::Passage> make_qgen_passages();

}  // namespace fixture
