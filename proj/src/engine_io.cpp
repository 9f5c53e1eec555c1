#include "engine_internal.hpp"

#include "arec/errors.hpp"
#include "arec/proximity.hpp"
#include "arec/text.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace arec {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- configuration ----------------------------------------------------------

void EngineConfig::validate() const {
    talkmine.validate();
    reward.validate();
    composite.validate();
    spreading.validate();
    if (session_gap < 0) throw std::invalid_argument("session_gap must be nonnegative");
    if (!(structural_lambda >= 0.0 && structural_lambda <= 1.0))
        throw std::invalid_argument("structural_lambda must be in [0,1]");
    if (!(adaptation_period_seconds > 0.0)) throw std::invalid_argument("adaptation_period_seconds must be positive");
    if (!(default_auto_answer_level >= 0.0 && default_auto_answer_level <= 1.0))
        throw std::invalid_argument("default_auto_answer_level must be in [0,1]");
}

json to_json(const EngineConfig& c) {
    return {
        {"ingest", {{"min_keyword_frequency", c.ingest.min_keyword_frequency}, {"stem", c.ingest.stem}}},
        {"talkmine",
         {{"lambda_plus", c.talkmine.lambda_plus},
          {"lambda_minus", c.talkmine.lambda_minus},
          {"dispute_threshold", c.talkmine.dispute_threshold},
          {"question_budget", c.talkmine.question_budget},
          {"entropy_floor", c.talkmine.entropy_floor},
          {"auto_answer_threshold", c.talkmine.auto_answer_threshold},
          {"membership_floor", c.talkmine.membership_floor}}},
        {"reward", {{"symm_factor", c.reward.symm_factor}, {"trans_factor", c.reward.trans_factor}}},
        {"session_gap", c.session_gap},
        {"composite",
         {{"traversal", c.composite.traversal},
          {"structural", c.composite.structural},
          {"record_semantic", c.composite.record_semantic}}},
        {"structural_lambda", c.structural_lambda},
        {"spreading",
         {{"decay", c.spreading.decay},
          {"max_iterations", c.spreading.max_iterations},
          {"tolerance", c.spreading.tolerance}}},
        {"adaptation_period_seconds", c.adaptation_period_seconds},
        {"per_category_adaptation", c.per_category_adaptation},
        {"recommendation_count", c.recommendation_count},
        {"related_count", c.related_count},
        {"default_auto_answer_level", c.default_auto_answer_level},
    };
}

namespace {

// Copies j[key] into out when present; rejects keys not in `known`.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw std::invalid_argument(where_ + " must be an object");
    }
    template <typename T>
    void get(const char* key, T& out) {
        seen_.push_back(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw std::invalid_argument(where_ + "." + key + " has the wrong type");
        }
    }
    const json* child(const char* key) {
        seen_.push_back(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
                throw std::invalid_argument("unknown configuration key " + where_ + "." + k);
    }

private:
    const json& j_;
    std::string where_;
    std::vector<std::string> seen_;
};

}  // namespace

EngineConfig engine_config_from_json(const json& j) {
    EngineConfig c;
    Reader r(j, "config");
    if (auto* x = r.child("ingest")) {
        Reader s(*x, "config.ingest");
        s.get("min_keyword_frequency", c.ingest.min_keyword_frequency);
        s.get("stem", c.ingest.stem);
        s.finish();
    }
    if (auto* x = r.child("talkmine")) {
        Reader s(*x, "config.talkmine");
        s.get("lambda_plus", c.talkmine.lambda_plus);
        s.get("lambda_minus", c.talkmine.lambda_minus);
        s.get("dispute_threshold", c.talkmine.dispute_threshold);
        s.get("question_budget", c.talkmine.question_budget);
        s.get("entropy_floor", c.talkmine.entropy_floor);
        s.get("auto_answer_threshold", c.talkmine.auto_answer_threshold);
        s.get("membership_floor", c.talkmine.membership_floor);
        s.finish();
    }
    if (auto* x = r.child("reward")) {
        Reader s(*x, "config.reward");
        s.get("symm_factor", c.reward.symm_factor);
        s.get("trans_factor", c.reward.trans_factor);
        s.finish();
    }
    r.get("session_gap", c.session_gap);
    if (auto* x = r.child("composite")) {
        Reader s(*x, "config.composite");
        s.get("traversal", c.composite.traversal);
        s.get("structural", c.composite.structural);
        s.get("record_semantic", c.composite.record_semantic);
        s.finish();
    }
    r.get("structural_lambda", c.structural_lambda);
    if (auto* x = r.child("spreading")) {
        Reader s(*x, "config.spreading");
        s.get("decay", c.spreading.decay);
        s.get("max_iterations", c.spreading.max_iterations);
        s.get("tolerance", c.spreading.tolerance);
        s.finish();
    }
    r.get("adaptation_period_seconds", c.adaptation_period_seconds);
    r.get("per_category_adaptation", c.per_category_adaptation);
    r.get("recommendation_count", c.recommendation_count);
    r.get("related_count", c.related_count);
    r.get("default_auto_answer_level", c.default_auto_answer_level);
    r.finish();
    c.validate();
    return c;
}

// ---- conversation values ------------------------------------------------------

namespace engine_detail {

json to_json(const Question& q) {
    json m = json::object();
    for (const auto& [ctx, v] : q.memberships) m[ctx] = v;
    return {{"keyword", q.keyword}, {"memberships", m}};
}

Question question_from_json(const json& j) {
    Question q{j.at("keyword").get<std::string>(), {}};
    for (const auto& [ctx, v] : j.at("memberships").items()) q.memberships.emplace_back(ctx, v.get<double>());
    return q;
}

json to_json(const Answer& a) {
    return {{"keyword", a.keyword}, {"relevant", a.relevant}, {"answered_by", to_string(a.answered_by)}};
}

Answer answer_from_json(const json& j) {
    const auto by = j.at("answered_by").get<std::string>();
    if (by != "user" && by != "history") throw std::invalid_argument("bad answered_by '" + by + "'");
    return {j.at("keyword").get<std::string>(), j.at("relevant").get<bool>(),
            by == "user" ? AnsweredBy::user : AnsweredBy::history};
}

json to_json(const FuzzyCategory& c) {
    json out = json::array();
    for (const auto& e : c.entries)
        out.push_back({{"keyword", e.keyword}, {"membership", e.membership}, {"contexts", e.contexts}});
    return out;
}

FuzzyCategory category_from_json(const json& j) {
    FuzzyCategory c;
    for (const auto& e : j)
        c.entries.push_back({e.at("keyword").get<std::string>(), e.at("membership").get<double>(),
                             e.at("contexts").get<std::vector<std::string>>()});
    return c;
}

}  // namespace engine_detail

using namespace engine_detail;

namespace {

json conversation_to_json(const ConversationState& s) {
    json answers = json::array();
    for (const auto& a : s.answers) answers.push_back(to_json(a));
    std::vector<bool> history(s.history.begin(), s.history.end());
    std::vector<bool> resolved(s.resolved.begin(), s.resolved.end());
    return {{"profile", s.profile},     {"context_ids", s.context_ids}, {"history", history},
            {"keywords", s.keywords},   {"membership", s.membership},   {"blend", s.blend},
            {"resolved", resolved},     {"answers", answers},           {"questions_asked", s.questions_asked}};
}

ConversationState conversation_from_json(const json& j) {
    ConversationState s;
    s.profile = j.at("profile").get<std::vector<std::string>>();
    s.context_ids = j.at("context_ids").get<std::vector<std::string>>();
    for (bool b : j.at("history").get<std::vector<bool>>()) s.history.push_back(b ? 1 : 0);
    s.keywords = j.at("keywords").get<std::vector<std::string>>();
    s.membership = j.at("membership").get<std::vector<std::vector<double>>>();
    s.blend = j.at("blend").get<std::vector<double>>();
    for (bool b : j.at("resolved").get<std::vector<bool>>()) s.resolved.push_back(b ? 1 : 0);
    for (const auto& a : j.at("answers")) s.answers.push_back(answer_from_json(a));
    s.questions_asked = j.at("questions_asked").get<std::size_t>();
    return s;
}

json session_to_json(const Engine::Session& s) {
    json clicks = json::array();
    for (const auto& c : s.clicks) clicks.push_back({{"document", c.document}, {"timestamp", c.epoch_seconds}});
    return {{"id", s.id},
            {"user", s.user},
            {"auto_answer_level", s.auto_answer_level},
            {"created_at", s.created_at},
            {"last_active", s.last_active},
            {"profile", s.profile},
            {"conversation", s.conversation ? conversation_to_json(*s.conversation) : json(nullptr)},
            {"pending", s.pending ? to_json(*s.pending) : json(nullptr)},
            {"category", s.category ? to_json(*s.category) : json(nullptr)},
            {"clicks", clicks}};
}

Engine::Session session_from_json(const json& j) {
    Engine::Session s;
    s.id = j.at("id").get<std::string>();
    s.user = j.at("user").get<std::string>();
    s.auto_answer_level = j.at("auto_answer_level").get<double>();
    s.created_at = j.at("created_at").get<std::int64_t>();
    s.last_active = j.at("last_active").get<std::int64_t>();
    s.profile = j.at("profile").get<std::vector<std::string>>();
    if (!j.at("conversation").is_null()) s.conversation = conversation_from_json(j.at("conversation"));
    if (!j.at("pending").is_null()) s.pending = question_from_json(j.at("pending"));
    if (!j.at("category").is_null()) s.category = category_from_json(j.at("category"));
    for (const auto& c : j.at("clicks"))
        s.clicks.push_back({s.id, c.at("timestamp").get<std::int64_t>(), c.at("document").get<std::string>()});
    return s;
}

// ---- snapshot files -----------------------------------------------------------

constexpr std::string_view kManifestHeader = "#arec-snapshot 1";
constexpr std::string_view kQueueHeader = "#queue 1";

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFound("missing snapshot file " + p.string());
    return in;
}

void write_queue(std::ostream& out, const std::vector<QueuedCategory>& queue) {
    out << kQueueHeader << '\n';
    for (const auto& item : queue) {
        out << "@item\t" << item.session << '\t';
        for (std::size_t i = 0; i < item.contexts.size(); ++i) out << (i ? "," : "") << item.contexts[i];
        out << '\n';
        write_category(out, item.category);
    }
}

std::vector<QueuedCategory> read_queue(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kQueueHeader) throw ParseError(1, "expected header '#queue 1'");
    std::vector<QueuedCategory> out;
    std::string block;
    auto flush = [&] {
        if (out.empty()) return;
        std::istringstream cat(block);
        out.back().category = parse_category(cat);
        block.clear();
    };
    while (std::getline(in, line)) {
        if (line.starts_with("@item\t")) {
            flush();
            const auto f = text::split(line, '\t');
            if (f.size() != 3) throw ParseError(0, "malformed queue item");
            QueuedCategory item{std::string(f[1]), {}, {}};
            for (auto c : text::split(f[2], ',')) item.contexts.emplace_back(c);
            out.push_back(std::move(item));
        } else {
            block += line;
            block += '\n';
        }
    }
    flush();
    return out;
}

}  // namespace

void Engine::save(const fs::path& dir) const {
    std::lock_guard cycle_lock(cycle_mutex_);
    std::unique_lock epoch(epoch_);
    std::lock_guard lock(state_mutex_);
    const auto snap = current();

    fs::create_directories(dir);
    fs::remove_all(dir / "contexts");
    fs::remove_all(dir / "histories");
    fs::create_directories(dir / "contexts");
    fs::create_directories(dir / "histories");

    {
        auto out = open_out(dir / "manifest.txt");
        out << kManifestHeader << '\n'
            << "version\t" << snap->version << '\n'
            << "next_session\t" << state_->next_session << '\n'
            << "processed_log\t" << state_->processed_log << '\n';
        for (const auto& [id, e] : snap->contexts) out << "context\t" << id << '\n';
        for (const auto& [user, h] : snap->histories) out << "history\t" << user << '\n';
    }
    open_out(dir / "config.json") << to_json(config_).dump(2) << '\n';

    for (const auto& [id, e] : snap->contexts) {
        const auto cdir = dir / "contexts" / id;
        fs::create_directories(cdir);
        const auto& ctx = e->context;
        const auto records = ctx.to_records();
        {
            auto out = open_out(cdir / "records.krc");
            write_record_file(out, records);
        }
        {
            auto out = open_out(cdir / "keywords.txt");
            for (const auto& k : ctx.keywords().names()) out << k << '\n';
        }
        {
            auto out = open_out(cdir / "working_ksp.prox");
            write_proximity(out, ctx.working_keyword_proximity(), true);
        }
        {
            auto out = open_out(cdir / "traversal.prox");
            write_proximity(out, ctx.traversal(), true);
        }
    }
    for (const auto& [user, h] : snap->histories) {
        auto out = open_out(dir / "histories" / (user + ".krc"));
        const auto records = h->to_records();
        write_record_file(out, records);
    }
    {
        auto out = open_out(dir / "paths.plog");
        write_path_log(out, state_->log);
    }
    {
        auto out = open_out(dir / "queue.txt");
        write_queue(out, state_->queue);
    }
    {
        json sessions = json::array();
        for (const auto& [id, sl] : state_->sessions) sessions.push_back(session_to_json(sl->session));
        open_out(dir / "sessions.json") << sessions.dump(1) << '\n';
    }
}

std::unique_ptr<Engine> Engine::restore(const fs::path& dir, Clock clock) {
    json cfg;
    {
        auto in = open_in(dir / "config.json");
        cfg = json::parse(in);
    }
    auto engine = std::make_unique<Engine>(engine_config_from_json(cfg), std::move(clock));
    const auto& config = engine->config_;

    std::vector<std::string> context_ids, users;
    auto snap = std::make_shared<Snapshot>();
    State& st = *engine->state_;
    {
        auto in = open_in(dir / "manifest.txt");
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (n == 1) {
                if (line != kManifestHeader) throw ParseError(1, "not a snapshot manifest");
                continue;
            }
            const auto f = text::split(line, '\t');
            if (f.size() != 2) throw ParseError(n, "malformed manifest line");
            bool ok = true;
            if (f[0] == "version") ok = text::parse_int(f[1], snap->version);
            else if (f[0] == "next_session") ok = text::parse_int(f[1], st.next_session);
            else if (f[0] == "processed_log") ok = text::parse_int(f[1], st.processed_log);
            else if (f[0] == "context") context_ids.emplace_back(f[1]);
            else if (f[0] == "history") users.emplace_back(f[1]);
            else ok = false;
            if (!ok) throw ParseError(n, "malformed manifest line");
        }
    }

    {
        auto in = open_in(dir / "paths.plog");
        st.log = parse_path_log(in);
    }
    if (st.processed_log > st.log.size()) throw ParseError(0, "processed_log exceeds the path log");
    const std::span<const ClickEvent> processed(st.log.data(), st.processed_log);
    const auto paths = extract_paths(processed, config.session_gap);

    for (const auto& id : context_ids) {
        const auto cdir = dir / "contexts" / id;
        auto in = open_in(cdir / "records.krc");
        auto ctx = KnowledgeContext::build(parse_record_file(in), {1, false});
        auto kin = open_in(cdir / "keywords.txt");
        std::string k;
        Index i = 0;
        while (std::getline(kin, k)) {
            if (i < ctx.keyword_count()) {
                if (ctx.keywords().name(i) != k) throw ParseError(i + 1, "keyword order differs from records");
            } else {
                ctx.add_keyword(k);
            }
            ++i;
        }
        if (i != ctx.keyword_count()) throw ParseError(0, "keywords.txt is missing keywords");
        auto win = open_in(cdir / "working_ksp.prox");
        ctx.working_keyword_proximity() = read_proximity(win, ProximityKind::keyword_semantic, ctx.keyword_count());
        auto tin = open_in(cdir / "traversal.prox");
        ctx.set_traversal(read_proximity(tin, ProximityKind::traversal, ctx.document_count()));
        const auto triples = context_triples(ctx, paths).size();
        snap->contexts[id] = finish_entry(id, std::move(ctx), nullptr, triples, config);
    }
    for (const auto& user : users) {
        auto in = open_in(dir / "histories" / (user + ".krc"));
        snap->histories[user] =
            std::make_shared<const KnowledgeContext>(KnowledgeContext::build(parse_record_file(in), {1, false}));
    }
    {
        auto in = open_in(dir / "queue.txt");
        st.queue = read_queue(in);
    }
    {
        auto in = open_in(dir / "sessions.json");
        for (const auto& j : json::parse(in)) {
            auto slot = std::make_shared<SessionSlot>();
            slot->session = session_from_json(j);
            st.sessions.emplace(slot->session.id, std::move(slot));
        }
    }
    engine->snapshot_ = std::move(snap);
    return engine;
}

// ---- journal replay -------------------------------------------------------------

namespace {

std::optional<std::int64_t> timestamp_of(const json& e) {
    if (!e.contains("timestamp")) return std::nullopt;
    return e.at("timestamp").get<std::int64_t>();
}

}  // namespace

void Engine::apply_event(const json& e) {
    const auto op = e.at("op").get<std::string>();
    if (op == "config") return;
    if (op == "add_context") {
        add_context(e.at("id").get<std::string>(), e.at("record_file").get<std::string>(),
                    {e.at("min_keyword_frequency").get<std::size_t>(), e.at("stem").get<bool>()});
    } else if (op == "create_session") {
        auto v = create_session(e.at("user").get<std::string>(), e.at("auto_answer_level").get<double>(),
                                timestamp_of(e));
        if (v.id != e.at("session").get<std::string>())
            throw StateError("journal out of step: expected session " + e.at("session").get<std::string>() +
                             ", got " + v.id);
    } else if (op == "query") {
        query(e.at("session").get<std::string>(), e.at("keywords").get<std::vector<std::string>>(), timestamp_of(e));
    } else if (op == "answer") {
        answer(e.at("session").get<std::string>(), e.at("keyword").get<std::string>(), e.at("relevant").get<bool>(),
               timestamp_of(e));
    } else if (op == "click") {
        click(e.at("session").get<std::string>(), e.at("document").get<std::string>(), timestamp_of(e));
    } else if (op == "cycle") {
        auto r = cycle(std::pair{e.at("log_length").get<std::size_t>(), e.at("queue_length").get<std::size_t>()});
        if (!r.applied) throw StateError("journal cycle had nothing to apply");
    } else {
        throw std::invalid_argument("unknown journal op '" + op + "'");
    }
}

std::unique_ptr<Engine> Engine::replay(std::istream& journal, const std::optional<fs::path>& restore_dir) {
    std::unique_ptr<Engine> engine;
    if (restore_dir) engine = restore(*restore_dir);
    std::string line;
    std::size_t n = 0;
    while (std::getline(journal, line)) {
        ++n;
        if (line.empty()) continue;
        json e;
        try {
            e = json::parse(line);
        } catch (const json::parse_error& err) {
            throw ParseError(n, std::string("journal line is not JSON: ") + err.what());
        }
        if (!engine) {
            if (e.value("op", "") != "config") throw ParseError(n, "journal must start with a config line");
            engine = std::make_unique<Engine>(engine_config_from_json(e.at("config")));
        }
        engine->replaying_ = true;
        try {
            engine->apply_event(e);
        } catch (const json::exception& err) {
            throw ParseError(n, std::string("malformed journal event: ") + err.what());
        }
    }
    if (!engine) throw ParseError(0, "empty journal");
    engine->replaying_ = false;
    return engine;
}

}  // namespace arec
