#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reqqa/textseg.hpp"

namespace reqqa {

enum class Origin { Auto, Manual };
enum class QuestionLabel { Valid, Rephrased, Invalid, Unlabeled };
enum class AnswerLabel { Correct, Corrected, Invalid, NotInContext, Unlabeled };

std::string_view to_string(Origin o) noexcept;
std::string_view to_string(QuestionLabel l) noexcept;
std::string_view to_string(AnswerLabel l) noexcept;
/// The parsers throw DataError for unknown names.
Origin origin_from_string(std::string_view s);
QuestionLabel question_label_from_string(std::string_view s);
AnswerLabel answer_label_from_string(std::string_view s);

/// One dataset row: a question-answer pair anchored to a passage.
struct QAPair {
    std::string id;
    std::string domain;
    std::string question;
    std::string answer;
    Source source = Source::Srs;
    std::string doc_id;
    std::string passage_id;
    std::string passage_text;
    std::optional<std::size_t> answer_start;  // byte offset of an auto answer
    Origin origin = Origin::Auto;
    QuestionLabel question_label = QuestionLabel::Unlabeled;
    AnswerLabel answer_label = AnswerLabel::Unlabeled;
    double generator_score = 0.0;
    double evaluator_score = 0.0;

    /// False when either side is labeled invalid; NOT_IN_CONTEXT counts as invalid.
    bool valid() const noexcept;
};

struct GeneratedPair {
    std::string question;
    std::string answer;
    std::size_t answer_start = 0;  // offset into the passage text
    double score = 0.0;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual std::vector<GeneratedPair> generate(const Passage& passage, std::uint64_t seed) const = 0;
};

/// Rule-based generator. Answer candidates per sentence are numeric
/// quantities (with a trailing unit word), runs of two or more capitalized
/// words past the sentence start, and the object phrase after a modal verb
/// and its main verb. The question is the sentence with the answer replaced
/// by a wh-word: inverted around the modal when one precedes the answer
/// ("What shall the wet mass not exceed?"), in place otherwise. At most
/// `max_pairs` candidates are kept per passage, chosen by a seeded shuffle.
class ReferenceGenerator final : public Generator {
public:
    explicit ReferenceGenerator(std::size_t max_pairs = 3) : max_pairs_(max_pairs) {}
    std::vector<GeneratedPair> generate(const Passage& passage, std::uint64_t seed) const override;

private:
    std::size_t max_pairs_;
};

class Evaluator {
public:
    virtual ~Evaluator() = default;
    /// Higher means more likely valid.
    virtual double evaluate(std::string_view question, std::string_view answer,
                            std::string_view passage) const = 0;
};

/// Share of answer words found in the passage, times a well-formedness
/// factor: 1 for a question opening with a wh-word, auxiliary or modal and
/// ending in '?', 0.5 when it only ends in '?', 0 otherwise.
class ReferenceEvaluator final : public Evaluator {
public:
    double evaluate(std::string_view question, std::string_view answer,
                    std::string_view passage) const override;
};

/// Runs the generator over every passage. Pair ids are
/// "<passage_id>/q<n>"; origin is Auto. When an evaluator is given its score
/// is attached as well.
std::vector<QAPair> generate_pairs(std::span<const Passage> passages, const Generator& generator,
                                   std::uint64_t seed, const Evaluator* evaluator = nullptr,
                                   std::string_view domain = {});

using GroupKey = std::function<std::string(const QAPair&)>;

/// SRS pairs group by their document; corpus pairs by domain.
std::string default_group_key(const QAPair& pair);

/// Per group, keeps the max(1, ceil(fraction * size)) best pairs by
/// evaluator score (ties by id). Identical (question, answer) pairs are
/// collapsed to their first occurrence beforehand. Output is grouped in
/// order of first appearance, best first.
std::vector<QAPair> filter_top_fraction(std::vector<QAPair> pairs, const Evaluator& evaluator,
                                        double fraction = 0.05,
                                        const GroupKey& group = default_group_key);

struct Annotation {
    std::string pair_id;
    QuestionLabel question_label = QuestionLabel::Valid;
    std::optional<std::string> rephrased_question;
    AnswerLabel answer_label = AnswerLabel::Correct;
    std::optional<std::string> corrected_answer;
};

/// Drops pairs labeled invalid on either side, substitutes rephrased
/// questions and corrected answers, then appends the manual pairs. Throws
/// DataError naming every annotation whose pair id is unknown.
std::vector<QAPair> apply_validation(std::vector<QAPair> pairs, const std::vector<Annotation>& labels,
                                     std::vector<QAPair> manual_pairs = {});

/// 2 * |common tokens| / (|q1| + |q2|) over lowercased word tokens, with
/// multiset overlap. Throws InvalidArgument if either side has no tokens.
double simplified_bleu(std::string_view q1, std::string_view q2);

// Dataset files (JSON Lines).
std::string write_dataset(const std::vector<QAPair>& pairs);
std::vector<QAPair> read_dataset(std::string_view jsonl);
std::vector<Annotation> read_annotations(std::string_view jsonl);
std::string write_annotations(const std::vector<Annotation>& labels);

}  // namespace reqqa
