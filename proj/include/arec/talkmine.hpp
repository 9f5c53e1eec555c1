#pragma once

#include "arec/corpus.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace arec {

struct TalkMineConfig {
    double lambda_plus = 0.1;
    double lambda_minus = 0.02;
    double dispute_threshold = 0.2;
    std::size_t question_budget = 10;
    double entropy_floor = 0.25;
    // History membership at or above this answers "relevant" automatically.
    double auto_answer_threshold = 0.5;
    double membership_floor = 0.01;

    void validate() const;
};

// A knowledge context taking part in a conversation. History contexts belong
// to the user and may answer questions on their behalf.
struct ContextRef {
    std::string id;
    const KnowledgeContext* context = nullptr;
    bool history = false;
};

enum class AnsweredBy { user, history };

std::string_view to_string(AnsweredBy by);

struct Question {
    std::string keyword;
    // (context id, membership) for every participating context, in context order.
    std::vector<std::pair<std::string, double>> memberships;

    friend bool operator==(const Question&, const Question&) = default;
};

struct Answer {
    std::string keyword;
    bool relevant = false;
    AnsweredBy answered_by = AnsweredBy::user;

    friend bool operator==(const Answer&, const Answer&) = default;
};

// Conversation state. Keywords are the union of every context's profile
// neighborhood, sorted; membership[c][i] is F_c of keywords[i] and blend[i] is B.
struct ConversationState {
    std::vector<std::string> profile;
    std::vector<std::string> context_ids;
    std::vector<char> history;
    std::vector<std::string> keywords;
    std::vector<std::vector<double>> membership;
    std::vector<double> blend;
    std::vector<char> resolved;
    std::vector<Answer> answers;
    std::size_t questions_asked = 0;

    // Index of a keyword in `keywords`, or nullopt.
    std::optional<std::size_t> find(std::string_view keyword) const;
    double spread(std::size_t i) const;
};

// Builds F_c for every context as the pointwise max of the working keyword
// proximity rows of the profile keywords (each profile keyword at 1 in the
// contexts that know it), and B = max_c F_c. Profile keywords start resolved.
// History contexts without keywords are skipped. Throws std::invalid_argument
// for an empty profile or no contexts, and NotFound listing every profile
// keyword that no context knows.
ConversationState init_category(std::span<const std::string> profile, std::span<const ContextRef> contexts);

// Normalized fuzzy entropy of a membership vector, in [0,1]; 0 when empty.
double fuzzy_entropy(std::span<const double> memberships);

// The unresolved keyword with the largest spread above the dispute threshold
// (ties go to the lexicographically first), or nullopt when the conversation is
// done: nothing disputed, entropy of B below the floor, or budget spent.
std::optional<Question> next_question(const ConversationState& state, const TalkMineConfig& config);

// Relevant keeps the strongest reading (max over contexts), irrelevant the
// weakest (min, 0 when a context lacks the keyword). Counts against the
// question budget. Throws NotFound for keywords outside the state and
// StateError for resolved ones.
void apply_answer(ConversationState& state, const Answer& answer);

// The answer the user's history gives for `keyword`, if the history is
// confident enough for the given auto-answer level: with F the history
// membership, confidence |2F - 1| must reach 1 - level. Level 0 never answers.
std::optional<Answer> try_auto_answer(const ConversationState& state, std::string_view keyword, double level,
                                      const TalkMineConfig& config);

struct CategoryEntry {
    std::string keyword;
    double membership = 0.0;
    // Contexts in which the keyword had positive membership.
    std::vector<std::string> contexts;

    friend bool operator==(const CategoryEntry&, const CategoryEntry&) = default;
};

struct FuzzyCategory {
    std::vector<CategoryEntry> entries;  // sorted by keyword

    bool empty() const { return entries.empty(); }
    double membership(std::string_view keyword) const;

    friend bool operator==(const FuzzyCategory&, const FuzzyCategory&) = default;
};

// Rescales B to a peak of 1 and drops memberships below the floor. Throws
// StateError if a question is still pending.
FuzzyCategory finalize(const ConversationState& state, const TalkMineConfig& config);

inline constexpr std::string_view kCategoryHeader = "#cat 1";

void write_category(std::ostream& out, const FuzzyCategory& category);
FuzzyCategory parse_category(std::istream& in);

struct RecordScore {
    std::string record;
    double score = 0.0;

    friend bool operator==(const RecordScore&, const RecordScore&) = default;
};

// score(r) = sum_k mu(k) a_kr / sum_k mu(k) over all category keywords. Records
// scoring 0 are left out; order is descending score, then record id.
std::vector<RecordScore> recommend_records(const FuzzyCategory& category, const KnowledgeContext& ctx,
                                           std::size_t top_n);

// Hebbian update of the working keyword proximity. Pairs inside the category
// move toward 1 by lambda_plus mu_i mu_j; pairs with exactly one end inside the
// category and positive proximity decay by lambda_minus. The diagonal is left alone.
void adapt(KnowledgeContext& ctx, const FuzzyCategory& category, double lambda_plus, double lambda_minus);

// Adds category keywords unknown to the context (qualifying no records) with
// proximity lambda_plus mu mu_j to every other category keyword in the context.
// Returns the keywords added.
std::vector<std::string> propagate_keywords(KnowledgeContext& ctx, const FuzzyCategory& category, double lambda_plus);

}  // namespace arec
