#include "engine_internal.hpp"

#include "arec/errors.hpp"
#include "arec/proximity.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace arec {

using nlohmann::json;

namespace engine_detail {

std::string history_id(const std::string& user) { return "history:" + user; }

std::shared_ptr<const FixedNetworks> fixed_networks(const KnowledgeContext& ctx, double structural_lambda) {
    auto f = std::make_shared<FixedNetworks>();
    const auto u = ctx.universe().size();
    const auto in = inwards_proximity(ctx);
    const auto out = outwards_proximity(ctx);
    f->inwards = lift(in, ctx.document_to_universe(), u);
    f->outwards = lift(out, ctx.document_to_universe(), u);
    f->structural = lift(combine_structural(in, out, structural_lambda), ctx.document_to_universe(), u);
    f->record_semantic = lift(record_semantic_proximity(ctx), ctx.record_to_universe(), u);
    return f;
}

std::vector<std::array<Index, 3>> context_triples(const KnowledgeContext& ctx, std::span<const UserPath> paths) {
    std::vector<std::array<Index, 3>> out;
    const auto& d = ctx.documents();
    for (const auto& p : paths) {
        const auto a = d.find(p.first), b = d.find(p.second), c = d.find(p.third);
        if (a && b && c) out.push_back({*a, *b, *c});
    }
    return out;
}

std::shared_ptr<const Engine::ContextEntry> finish_entry(std::string id, KnowledgeContext ctx,
                                                         std::shared_ptr<const FixedNetworks> fixed,
                                                         std::size_t triples, const EngineConfig& config) {
    auto e = std::make_shared<Engine::ContextEntry>();
    e->id = std::move(id);
    e->context = std::move(ctx);
    e->fixed = fixed ? std::move(fixed) : fixed_networks(e->context, config.structural_lambda);
    e->traversal = lift(e->context.traversal(), e->context.document_to_universe(), e->context.universe().size());
    e->composite = composite_proximity(e->traversal, e->fixed->structural, e->fixed->record_semantic, config.composite);
    e->path_triples = triples;
    return e;
}

Record record_of(const KnowledgeContext& ctx, Index r) {
    Record rec{ctx.records().name(r), {}, {}};
    for (Index k : ctx.keywords_by_record().row(r)) rec.keywords.push_back(ctx.keywords().name(k));
    const Index d = ctx.record_document(r);
    if (d != KnowledgeContext::npos)
        for (Index c : ctx.citation().row(d)) rec.citations.push_back(ctx.documents().name(c));
    return rec;
}

}  // namespace engine_detail

using namespace engine_detail;

namespace {

void require_identifier(const std::string& s, const char* what) {
    if (!is_valid_identifier(s)) throw std::invalid_argument(std::string("invalid ") + what + " '" + s + "'");
}

// Learns traversal proximity for the context from the extracted paths.
std::size_t relearn_traversal(KnowledgeContext& ctx, std::span<const UserPath> paths, const RewardConfig& reward) {
    const auto triples = context_triples(ctx, paths);
    ctx.set_traversal(triples.empty() ? SparseProximity(ctx.document_count(), ProximityKind::traversal)
                                      : learn(triples, ctx.document_count(), reward));
    return triples.size();
}

const SparseProximity& document_network(const Engine::ContextEntry& e, const std::string& network) {
    if (network == "composite") return e.composite;
    if (network == "traversal") return e.traversal;
    if (network == "structural") return e.fixed->structural;
    if (network == "inwards") return e.fixed->inwards;
    if (network == "outwards") return e.fixed->outwards;
    if (network == "record_semantic") return e.fixed->record_semantic;
    throw std::invalid_argument("unknown network '" + network + "'");
}

std::vector<std::string> record_keywords(const KnowledgeContext& ctx, Index u) {
    std::vector<std::string> out;
    const Index r = ctx.universe_record(u);
    if (r == KnowledgeContext::npos) return out;
    for (Index k : ctx.keywords_by_record().row(r)) out.push_back(ctx.keywords().name(k));
    return out;
}

ContextStats stats_of(const Engine::ContextEntry& e) {
    const auto& c = e.context;
    ContextStats s;
    s.id = e.id;
    s.records = c.record_count();
    s.keywords = c.keyword_count();
    for (Index k = 0; k < c.keyword_count(); ++k)
        if (c.is_propagated(k)) s.propagated_keywords.push_back(c.keywords().name(k));
    s.cited = c.cited_count();
    s.citing_records = c.citing_records().size();
    s.documents = c.document_count();
    s.universe = c.universe().size();
    s.citations = c.citation().nonzeros();
    s.keyword_assignments = c.incidence().nonzeros();
    s.working_ksp_entries = c.working_keyword_proximity().nonzeros();
    s.traversal_entries = c.traversal().nonzeros();
    s.path_triples = e.path_triples;
    return s;
}

void sort_related(std::vector<RelatedDocument>& v, std::size_t n) {
    std::sort(v.begin(), v.end(), [](const RelatedDocument& a, const RelatedDocument& b) {
        return a.activation != b.activation ? a.activation > b.activation : a.document < b.document;
    });
    if (v.size() > n) v.resize(n);
}

}  // namespace

Engine::Engine(EngineConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)), snapshot_(std::make_shared<Snapshot>()),
      state_(std::make_unique<State>()) {
    config_.validate();
    if (!clock_)
        clock_ = [] {
            return std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
        };
}

Engine::~Engine() = default;

void Engine::set_journal(std::ostream* journal) {
    std::lock_guard lock(state_mutex_);
    journal_ = journal;
    journal_locked({{"op", "config"}, {"config", to_json(config_)}});
}

void Engine::journal_locked(const json& event) {
    if (!journal_) return;
    *journal_ << event.dump() << '\n';
    journal_->flush();
}

std::shared_ptr<const Engine::Snapshot> Engine::current() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

std::uint64_t Engine::version() const { return current()->version; }

std::shared_ptr<Engine::SessionSlot> Engine::slot(const std::string& id) const {
    std::lock_guard lock(state_mutex_);
    auto it = state_->sessions.find(id);
    if (it == state_->sessions.end()) throw NotFound("unknown session '" + id + "'");
    return it->second;
}

std::int64_t Engine::stamp(std::optional<std::int64_t> timestamp) const { return timestamp ? *timestamp : clock_(); }

ContextStats Engine::add_context(const std::string& id, const std::filesystem::path& record_file,
                                 const IngestOptions& options) {
    require_identifier(id, "context id");
    if (id.starts_with("history:")) throw std::invalid_argument("context ids may not start with 'history:'");
    std::lock_guard cycle_lock(cycle_mutex_);
    auto snap = current();
    if (snap->contexts.count(id)) throw StateError("context '" + id + "' already exists");

    auto ctx = ingest(record_file, options);
    std::vector<ClickEvent> log;
    {
        std::lock_guard lock(state_mutex_);
        log.assign(state_->log.begin(), state_->log.begin() + static_cast<std::ptrdiff_t>(state_->processed_log));
    }
    const auto triples = relearn_traversal(ctx, extract_paths(log, config_.session_gap), config_.reward);
    auto entry = finish_entry(id, std::move(ctx), nullptr, triples, config_);
    const auto stats = stats_of(*entry);

    auto next = std::make_shared<Snapshot>(*snap);
    next->contexts[id] = std::move(entry);
    next->version = snap->version + 1;
    std::unique_lock epoch(epoch_);
    std::lock_guard lock(state_mutex_);
    {
        std::lock_guard slock(snapshot_mutex_);
        snapshot_ = std::move(next);
    }
    journal_locked({{"op", "add_context"},
                    {"id", id},
                    {"record_file", record_file.string()},
                    {"min_keyword_frequency", options.min_keyword_frequency},
                    {"stem", options.stem}});
    return stats;
}

std::vector<ContextStats> Engine::list_contexts() const {
    std::vector<ContextStats> out;
    for (const auto& [id, e] : current()->contexts) out.push_back(stats_of(*e));
    return out;
}

ContextStats Engine::context_stats(const std::string& id) const {
    auto snap = current();
    auto it = snap->contexts.find(id);
    if (it == snap->contexts.end()) throw NotFound("unknown context '" + id + "'");
    return stats_of(*it->second);
}

std::vector<Record> Engine::records(const std::string& context) const {
    auto snap = current();
    auto it = snap->contexts.find(context);
    if (it == snap->contexts.end()) throw NotFound("unknown context '" + context + "'");
    const auto& ctx = it->second->context;
    std::vector<Record> out;
    for (Index r = 0; r < ctx.record_count(); ++r) out.push_back(record_of(ctx, r));
    return out;
}

std::vector<KeywordInfo> Engine::keywords(const std::string& context) const {
    auto snap = current();
    auto it = snap->contexts.find(context);
    if (it == snap->contexts.end()) throw NotFound("unknown context '" + context + "'");
    const auto& ctx = it->second->context;
    std::vector<KeywordInfo> out;
    for (Index k = 0; k < ctx.keyword_count(); ++k)
        out.push_back({std::string(ctx.keywords().name(k)), ctx.incidence().row_size(k), ctx.is_propagated(k)});
    return out;
}

namespace {

SessionView view_of(const Engine::Session& s) {
    SessionView v;
    v.id = s.id;
    v.user = s.user;
    v.auto_answer_level = s.auto_answer_level;
    v.created_at = s.created_at;
    v.last_active = s.last_active;
    v.profile = s.profile;
    v.pending_question = s.pending;
    if (s.conversation) v.answers = s.conversation->answers;
    v.category = s.category;
    v.clicks = s.clicks;
    return v;
}

}  // namespace

SessionView Engine::create_session(const std::string& user, std::optional<double> auto_answer_level,
                                   std::optional<std::int64_t> timestamp) {
    if (!user.empty()) require_identifier(user, "user id");
    const double level = auto_answer_level.value_or(config_.default_auto_answer_level);
    if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("auto_answer_level must be in [0,1]");
    const auto ts = stamp(timestamp);

    std::shared_lock epoch(epoch_);
    std::lock_guard lock(state_mutex_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(state_->next_session++));
    auto slot = std::make_shared<SessionSlot>();
    Session& s = slot->session;
    s.id = buf;
    s.user = user;
    s.auto_answer_level = level;
    s.created_at = s.last_active = ts;
    state_->sessions.emplace(s.id, slot);
    journal_locked({{"op", "create_session"},
                    {"session", s.id},
                    {"user", user},
                    {"auto_answer_level", level},
                    {"timestamp", ts}});
    return view_of(s);
}

SessionView Engine::session(const std::string& id) const {
    auto sl = slot(id);
    std::lock_guard lock(sl->mutex);
    return view_of(sl->session);
}

namespace {

std::vector<RecommendedRecord> recommend(const FuzzyCategory& category,
                                         const std::map<std::string, std::shared_ptr<const Engine::ContextEntry>>& ctxs,
                                         std::size_t n) {
    std::vector<RecommendedRecord> out;
    if (category.empty() || n == 0) return out;
    for (const auto& [id, e] : ctxs)
        for (auto& rs : recommend_records(category, e->context, n)) {
            const Index r = e->context.records().at(rs.record);
            out.push_back({id, std::move(rs.record), rs.score, record_of(e->context, r).keywords});
        }
    std::sort(out.begin(), out.end(), [](const RecommendedRecord& a, const RecommendedRecord& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.record != b.record) return a.record < b.record;
        return a.context < b.context;
    });
    if (out.size() > n) out.resize(n);
    return out;
}

}  // namespace

ConversationStep Engine::advance(Session& s, const Snapshot& snap) {
    ConversationStep step;
    auto& conv = *s.conversation;
    while (auto q = next_question(conv, config_.talkmine)) {
        if (auto a = try_auto_answer(conv, q->keyword, s.auto_answer_level, config_.talkmine)) {
            apply_answer(conv, *a);
            step.auto_answers.push_back(*a);
            continue;
        }
        s.pending = q;
        step.question = std::move(q);
        return step;
    }
    s.pending.reset();
    s.category = finalize(conv, config_.talkmine);
    step.category = s.category;
    step.recommendations = recommend(*s.category, snap.contexts, config_.recommendation_count);
    return step;
}

namespace {

void enqueue_category(std::vector<QueuedCategory>& queue, const Engine::Session& s) {
    if (!s.category || s.category->empty()) return;
    QueuedCategory item{s.id, {}, *s.category};
    for (std::size_t c = 0; c < s.conversation->context_ids.size(); ++c)
        if (!s.conversation->history[c]) item.contexts.push_back(s.conversation->context_ids[c]);
    if (!item.contexts.empty()) queue.push_back(std::move(item));
}

}  // namespace

ConversationStep Engine::query(const std::string& session, const std::vector<std::string>& keywords,
                               std::optional<std::int64_t> timestamp) {
    if (keywords.empty()) throw std::invalid_argument("empty keyword list");
    for (const auto& k : keywords) require_identifier(k, "keyword");
    ConversationStep step;
    {
        std::shared_lock epoch(epoch_);
        auto snap = current();
        auto sl = slot(session);
        std::lock_guard slock(sl->mutex);
        Session& s = sl->session;
        const auto ts = stamp(timestamp);

        std::vector<ContextRef> refs;
        for (const auto& [id, e] : snap->contexts) refs.push_back({id, &e->context, false});
        if (!s.user.empty())
            if (auto h = snap->histories.find(s.user); h != snap->histories.end())
                refs.push_back({history_id(s.user), h->second.get(), true});
        auto conv = init_category(keywords, refs);

        s.profile = conv.profile;
        s.conversation = std::move(conv);
        s.pending.reset();
        s.category.reset();
        s.last_active = ts;
        step = advance(s, *snap);

        std::lock_guard lock(state_mutex_);
        if (step.category) enqueue_category(state_->queue, s);
        journal_locked({{"op", "query"}, {"session", session}, {"keywords", keywords}, {"timestamp", ts}});
    }
    maybe_cycle_after(step);
    return step;
}

ConversationStep Engine::answer(const std::string& session, const std::string& keyword, bool relevant,
                                std::optional<std::int64_t> timestamp) {
    ConversationStep step;
    {
        std::shared_lock epoch(epoch_);
        auto snap = current();
        auto sl = slot(session);
        std::lock_guard slock(sl->mutex);
        Session& s = sl->session;
        if (!s.pending) throw StateError("session '" + session + "' has no pending question");
        if (s.pending->keyword != keyword)
            throw StateError("pending question is about '" + s.pending->keyword + "', not '" + keyword + "'");
        const auto ts = stamp(timestamp);

        apply_answer(*s.conversation, {keyword, relevant, AnsweredBy::user});
        s.last_active = ts;
        step = advance(s, *snap);

        std::lock_guard lock(state_mutex_);
        if (step.category) enqueue_category(state_->queue, s);
        journal_locked({{"op", "answer"},
                        {"session", session},
                        {"keyword", keyword},
                        {"relevant", relevant},
                        {"timestamp", ts}});
    }
    maybe_cycle_after(step);
    return step;
}

void Engine::maybe_cycle_after(const ConversationStep& step) {
    if (config_.per_category_adaptation && step.category && !replaying_) run_cycle();
}

std::vector<RecommendedRecord> Engine::recommendations(const std::string& session, std::size_t n) const {
    auto snap = current();
    auto sl = slot(session);
    std::lock_guard slock(sl->mutex);
    const Session& s = sl->session;
    if (!s.category) throw StateError("session '" + session + "' has no finished category yet");
    return recommend(*s.category, snap->contexts, n);
}

namespace {

std::vector<RelatedDocument> spread_from(const Engine::Snapshot& snap, const std::string& document,
                                         const std::string& network, std::size_t n, SAConfig cfg) {
    bool known = false;
    std::map<std::string, RelatedDocument> merged;
    cfg.top_k = n;
    for (const auto& [id, e] : snap.contexts) {
        const auto& net = document_network(*e, network);
        const auto u = e->context.universe().find(document);
        if (!u) continue;
        known = true;
        const Index cue[] = {*u};
        for (const auto& node : spread(net, cue, cfg).ranking) {
            const auto& name = e->context.universe().name(node.node);
            auto& r = merged[name];
            r.document = name;
            r.activation = std::max(r.activation, node.activation);
            for (auto& k : record_keywords(e->context, node.node)) r.keywords.push_back(std::move(k));
        }
    }
    if (!known) throw NotFound("unknown document '" + document + "'");
    std::vector<RelatedDocument> out;
    for (auto& [name, r] : merged) {
        std::sort(r.keywords.begin(), r.keywords.end());
        r.keywords.erase(std::unique(r.keywords.begin(), r.keywords.end()), r.keywords.end());
        out.push_back(std::move(r));
    }
    sort_related(out, n);
    return out;
}

}  // namespace

std::vector<RelatedDocument> Engine::click(const std::string& session, const std::string& document,
                                           std::optional<std::int64_t> timestamp) {
    require_identifier(document, "document id");
    std::shared_lock epoch(epoch_);
    auto snap = current();
    auto sl = slot(session);
    std::lock_guard slock(sl->mutex);
    Session& s = sl->session;
    const auto ts = stamp(timestamp);
    if (!s.clicks.empty() && ts < s.clicks.back().epoch_seconds)
        throw std::invalid_argument("click timestamp precedes the previous click of the session");
    auto related = spread_from(*snap, document, "composite", config_.related_count, config_.spreading);

    ClickEvent e{session, ts, document};
    s.clicks.push_back(e);
    s.last_active = ts;
    std::lock_guard lock(state_mutex_);
    state_->log.push_back(std::move(e));
    journal_locked({{"op", "click"}, {"session", session}, {"document", document}, {"timestamp", ts}});
    return related;
}

std::vector<RelatedDocument> Engine::related(const std::string& document, const std::string& network,
                                             std::size_t n) const {
    return spread_from(*current(), document, network, n, config_.spreading);
}

std::vector<std::pair<std::string, double>> Engine::neighbors(const std::string& context, const std::string& network,
                                                              const std::string& node, double alpha) const {
    auto snap = current();
    auto it = snap->contexts.find(context);
    if (it == snap->contexts.end()) throw NotFound("unknown context '" + context + "'");
    const auto& e = *it->second;
    std::vector<std::pair<std::string, double>> out;
    auto collect = [&](const SparseProximity& p, const Interner& names) {
        const auto i = names.find(node);
        if (!i) throw NotFound("unknown node '" + node + "' in context '" + context + "'");
        for (const auto& n : neighborhood(p, *i, alpha).members) out.emplace_back(names.name(n.node), n.proximity);
    };
    if (network == "working_ksp") {
        collect(e.context.working_keyword_proximity(), e.context.keywords());
    } else if (network == "keyword_semantic") {
        auto raw = keyword_semantic_proximity(e.context);
        raw.resize(e.context.keyword_count());
        collect(raw, e.context.keywords());
    } else {
        collect(document_network(e, network), e.context.universe());
    }
    return out;
}

PathStats Engine::path_stats() const {
    std::lock_guard lock(state_mutex_);
    return {state_->log.size(), extract_paths(state_->log, config_.session_gap).size(), state_->queue.size()};
}

CycleReport Engine::run_cycle() { return cycle(std::nullopt); }

CycleReport Engine::cycle(std::optional<std::pair<std::size_t, std::size_t>> bounds) {
    std::lock_guard cycle_lock(cycle_mutex_);
    auto snap = current();
    CycleReport report;
    report.version = snap->version;

    std::size_t L = 0, Q = 0, processed = 0;
    std::vector<ClickEvent> log;
    std::vector<QueuedCategory> items;
    std::map<std::string, std::string> users;
    {
        std::lock_guard lock(state_mutex_);
        processed = state_->processed_log;
        L = bounds ? bounds->first : state_->log.size();
        Q = bounds ? bounds->second : state_->queue.size();
        if (L > state_->log.size() || L < processed || Q > state_->queue.size())
            throw StateError("cycle bounds do not match the engine state");
        if (L == processed && Q == 0) return report;
        log.assign(state_->log.begin(), state_->log.begin() + static_cast<std::ptrdiff_t>(L));
        items.assign(state_->queue.begin(), state_->queue.begin() + static_cast<std::ptrdiff_t>(Q));
        for (std::size_t i = processed; i < L; ++i) {
            auto it = state_->sessions.find(log[i].session);
            if (it != state_->sessions.end()) users[log[i].session] = it->second->session.user;
        }
    }

    const auto paths = extract_paths(log, config_.session_gap);
    auto next = std::make_shared<Snapshot>();
    next->version = snap->version + 1;
    for (const auto& [id, e] : snap->contexts) {
        KnowledgeContext ctx = e->context;
        for (const auto& item : items) {
            if (std::find(item.contexts.begin(), item.contexts.end(), id) == item.contexts.end()) continue;
            adapt(ctx, item.category, config_.talkmine.lambda_plus, config_.talkmine.lambda_minus);
            auto added = propagate_keywords(ctx, item.category, config_.talkmine.lambda_plus);
            auto& list = report.propagated[id];
            list.insert(list.end(), added.begin(), added.end());
        }
        const auto triples = relearn_traversal(ctx, paths, config_.reward);
        next->contexts[id] = finish_entry(id, std::move(ctx), e->fixed, triples, config_);
    }

    // Fold newly clicked records into the users' history contexts.
    next->histories = snap->histories;
    std::map<std::string, std::vector<Record>> fresh;
    for (std::size_t i = processed; i < L; ++i) {
        const auto& user = users[log[i].session];
        if (user.empty()) continue;
        for (const auto& [id, e] : snap->contexts)
            if (auto r = e->context.records().find(log[i].document)) {
                fresh[user].push_back(record_of(e->context, *r));
                break;
            }
    }
    for (auto& [user, added] : fresh) {
        std::vector<Record> records;
        if (auto h = next->histories.find(user); h != next->histories.end()) records = h->second->to_records();
        std::set<std::string> seen;
        for (const auto& r : records) seen.insert(r.id);
        for (auto& r : added)
            if (seen.insert(r.id).second) records.push_back(std::move(r));
        next->histories[user] =
            std::make_shared<const KnowledgeContext>(KnowledgeContext::build(std::move(records), {1, false}));
    }

    std::unique_lock epoch(epoch_);
    std::lock_guard lock(state_mutex_);
    {
        std::lock_guard slock(snapshot_mutex_);
        snapshot_ = next;
    }
    state_->queue.erase(state_->queue.begin(), state_->queue.begin() + static_cast<std::ptrdiff_t>(Q));
    state_->processed_log = L;
    journal_locked({{"op", "cycle"}, {"log_length", L}, {"queue_length", Q}});

    report.applied = true;
    report.log_length = L;
    report.categories = Q;
    report.version = next->version;
    return report;
}

}  // namespace arec
