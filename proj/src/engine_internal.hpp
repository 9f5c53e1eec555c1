#pragma once

#include "arec/engine.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace arec {

struct Engine::Session {
    std::string id;
    std::string user;
    double auto_answer_level = 0.0;
    std::int64_t created_at = 0;
    std::int64_t last_active = 0;
    std::vector<std::string> profile;
    std::optional<ConversationState> conversation;
    std::optional<Question> pending;
    std::optional<FuzzyCategory> category;
    std::vector<ClickEvent> clicks;
};

struct Engine::SessionSlot {
    std::mutex mutex;
    Session session;
};

// Networks that depend only on the raw relations, in universe (R u S) indices.
struct FixedNetworks {
    SparseProximity inwards;
    SparseProximity outwards;
    SparseProximity structural;
    SparseProximity record_semantic;
};

struct Engine::ContextEntry {
    std::string id;
    KnowledgeContext context;
    std::shared_ptr<const FixedNetworks> fixed;
    SparseProximity traversal;  // lifted to the universe
    SparseProximity composite;
    std::size_t path_triples = 0;
};

struct Engine::Snapshot {
    std::uint64_t version = 0;
    std::map<std::string, std::shared_ptr<const ContextEntry>> contexts;
    std::map<std::string, std::shared_ptr<const KnowledgeContext>> histories;
};

struct QueuedCategory {
    std::string session;
    std::vector<std::string> contexts;
    FuzzyCategory category;
};

struct Engine::State {
    std::uint64_t next_session = 1;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions;
    std::vector<ClickEvent> log;
    std::vector<QueuedCategory> queue;
    // Log prefix already learned into traversal proximity and user histories.
    std::size_t processed_log = 0;
};

namespace engine_detail {

std::string history_id(const std::string& user);

std::shared_ptr<const FixedNetworks> fixed_networks(const KnowledgeContext& ctx, double structural_lambda);

// Extracted paths lying entirely inside the context's documents, as document indices.
std::vector<std::array<Index, 3>> context_triples(const KnowledgeContext& ctx, std::span<const UserPath> paths);

// Completes an entry whose context already carries its traversal proximity.
std::shared_ptr<const Engine::ContextEntry> finish_entry(std::string id, KnowledgeContext ctx,
                                                         std::shared_ptr<const FixedNetworks> fixed,
                                                         std::size_t triples, const EngineConfig& config);

Record record_of(const KnowledgeContext& ctx, Index r);

nlohmann::json to_json(const Question& q);
nlohmann::json to_json(const Answer& a);
nlohmann::json to_json(const FuzzyCategory& c);
FuzzyCategory category_from_json(const nlohmann::json& j);
Question question_from_json(const nlohmann::json& j);
Answer answer_from_json(const nlohmann::json& j);

}  // namespace engine_detail

}  // namespace arec
