#pragma once

#include "arec/apweb.hpp"
#include "arec/corpus.hpp"
#include "arec/spreading.hpp"
#include "arec/talkmine.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

namespace arec {

struct EngineConfig {
    IngestOptions ingest;
    TalkMineConfig talkmine;
    RewardConfig reward;
    std::int64_t session_gap = kDefaultSessionGap;
    CompositeWeights composite;
    double structural_lambda = 0.5;
    SAConfig spreading;
    double adaptation_period_seconds = 60.0;
    // Run a cycle as soon as a conversation finishes instead of on the timer.
    bool per_category_adaptation = false;
    std::size_t recommendation_count = 20;
    std::size_t related_count = 10;
    double default_auto_answer_level = 0.0;

    void validate() const;
};

nlohmann::json to_json(const EngineConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
EngineConfig engine_config_from_json(const nlohmann::json& j);

struct RecommendedRecord {
    std::string context;
    std::string record;
    double score = 0.0;
    std::vector<std::string> keywords;
};

struct RelatedDocument {
    std::string document;
    double activation = 0.0;
    std::vector<std::string> keywords;
};

// Outcome of a query or answer: either the next question, or the finished
// category with its recommendations.
struct ConversationStep {
    std::optional<Question> question;
    std::optional<FuzzyCategory> category;
    std::vector<RecommendedRecord> recommendations;
    std::vector<Answer> auto_answers;
};

struct SessionView {
    std::string id;
    std::string user;
    double auto_answer_level = 0.0;
    std::int64_t created_at = 0;
    std::int64_t last_active = 0;
    std::vector<std::string> profile;
    std::optional<Question> pending_question;
    std::vector<Answer> answers;
    std::optional<FuzzyCategory> category;
    std::vector<ClickEvent> clicks;
};

struct KeywordInfo {
    std::string keyword;
    std::size_t records = 0;  // 0 for propagated keywords
    bool propagated = false;
};

struct ContextStats {
    std::string id;
    std::size_t records = 0;
    std::size_t keywords = 0;
    std::vector<std::string> propagated_keywords;
    std::size_t cited = 0;
    std::size_t citing_records = 0;
    std::size_t documents = 0;
    std::size_t universe = 0;
    std::size_t citations = 0;
    std::size_t keyword_assignments = 0;
    std::size_t working_ksp_entries = 0;
    std::size_t traversal_entries = 0;
    std::size_t path_triples = 0;
};

struct CycleReport {
    bool applied = false;
    std::size_t log_length = 0;
    std::size_t categories = 0;
    std::map<std::string, std::vector<std::string>> propagated;
    std::uint64_t version = 0;
};

struct PathStats {
    std::size_t clicks = 0;
    std::size_t triples = 0;
    std::size_t pending_categories = 0;
};

// The recommendation engine: knowledge contexts with their networks, user
// histories, sessions, the append-only click log and the queue of finished
// categories awaiting adaptation.
//
// Readers work on an immutable snapshot of the contexts; adaptation cycles
// build a new snapshot off to the side and swap it in. Every state change is
// written to the journal (one JSON object per line) so that replay() can
// rebuild the same state.
class Engine {
public:
    using Clock = std::function<std::int64_t()>;

    explicit Engine(EngineConfig config = {}, Clock clock = {});
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    const EngineConfig& config() const { return config_; }

    // Writes the configuration line, then one line per state change.
    void set_journal(std::ostream* journal);

    ContextStats add_context(const std::string& id, const std::filesystem::path& record_file,
                             const IngestOptions& options);
    std::vector<ContextStats> list_contexts() const;
    ContextStats context_stats(const std::string& id) const;
    std::vector<Record> records(const std::string& context) const;
    std::vector<KeywordInfo> keywords(const std::string& context) const;

    SessionView create_session(const std::string& user, std::optional<double> auto_answer_level,
                               std::optional<std::int64_t> timestamp = std::nullopt);
    SessionView session(const std::string& id) const;
    ConversationStep query(const std::string& session, const std::vector<std::string>& keywords,
                           std::optional<std::int64_t> timestamp = std::nullopt);
    ConversationStep answer(const std::string& session, const std::string& keyword, bool relevant,
                            std::optional<std::int64_t> timestamp = std::nullopt);
    std::vector<RecommendedRecord> recommendations(const std::string& session, std::size_t n) const;
    std::vector<RelatedDocument> click(const std::string& session, const std::string& document,
                                       std::optional<std::int64_t> timestamp = std::nullopt);

    // Spreading activation from one document over the named network
    // (composite, structural, inwards, outwards, record_semantic, traversal).
    std::vector<RelatedDocument> related(const std::string& document, const std::string& network,
                                         std::size_t n) const;

    // Strict alpha-neighborhood of a node. Keyword networks are working_ksp and
    // keyword_semantic; the rest are document networks as in related().
    std::vector<std::pair<std::string, double>> neighbors(const std::string& context, const std::string& network,
                                                          const std::string& node, double alpha) const;

    PathStats path_stats() const;

    // Applies pending categories (adapt, then propagate) and relearns traversal
    // proximity from the log. A no-op when nothing is pending.
    CycleReport run_cycle();

    // Persists everything to a directory; restore() reads it back.
    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<Engine> restore(const std::filesystem::path& dir, Clock clock = {});

    // Re-applies one journal line. The configuration line is skipped.
    void apply_event(const nlohmann::json& event);
    // Builds an engine from a journal, optionally on top of a restored snapshot.
    static std::unique_ptr<Engine> replay(std::istream& journal,
                                          const std::optional<std::filesystem::path>& restore_dir = std::nullopt);

    std::uint64_t version() const;

    // Opaque internals, defined in the implementation.
    struct State;
    struct Session;
    struct SessionSlot;
    struct ContextEntry;
    struct Snapshot;

private:
    std::shared_ptr<const Snapshot> current() const;
    std::shared_ptr<SessionSlot> slot(const std::string& id) const;
    std::int64_t stamp(std::optional<std::int64_t> timestamp) const;
    void journal_locked(const nlohmann::json& event);
    ConversationStep advance(Session& s, const Snapshot& snap);
    CycleReport cycle(std::optional<std::pair<std::size_t, std::size_t>> bounds);
    void maybe_cycle_after(const ConversationStep& step);

    EngineConfig config_;
    Clock clock_;

    // Held shared by every mutating request for its whole duration and
    // exclusively while a new snapshot is swapped in, so the journal order
    // agrees with the snapshot each request saw.
    mutable std::shared_mutex epoch_;
    // Serializes cycles, context additions and saves.
    mutable std::mutex cycle_mutex_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    // Guards the state and the journal stream.
    mutable std::mutex state_mutex_;
    std::unique_ptr<State> state_;
    std::ostream* journal_ = nullptr;
    bool replaying_ = false;
};

}  // namespace arec
