#include "arec/api.hpp"

#include "engine_internal.hpp"

#include "arec/errors.hpp"
#include "arec/text.hpp"

#include <cctype>
#include <cstdio>

namespace arec {

using nlohmann::json;
using engine_detail::to_json;

namespace {

ApiResponse error(int status, std::string_view code, std::string_view message) {
    return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

std::vector<std::string_view> segments(std::string_view path) {
    std::vector<std::string_view> out;
    for (auto s : text::split(path, '/'))
        if (!s.empty()) out.push_back(s);
    return out;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out += ' ';
        } else if (s[i] == '%' && i + 2 < s.size()) {
            unsigned v = 0;
            if (std::sscanf(std::string(s.substr(i + 1, 2)).c_str(), "%2x", &v) != 1)
                throw std::invalid_argument("bad percent escape");
            out += static_cast<char>(v);
            i += 2;
        } else {
            out += s[i];
        }
    }
    return out;
}

const std::string* param(const std::multimap<std::string, std::string>& params, const char* key) {
    auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
}

std::size_t count_param(const std::multimap<std::string, std::string>& params, const char* key, std::size_t fallback) {
    const auto* v = param(params, key);
    if (!v) return fallback;
    std::size_t n = 0;
    if (!text::parse_int(*v, n) || n == 0) throw std::invalid_argument(std::string(key) + " must be a positive integer");
    return n;
}

std::optional<std::int64_t> timestamp_of(const json& body) {
    if (!body.contains("timestamp") || body.at("timestamp").is_null()) return std::nullopt;
    return body.at("timestamp").get<std::int64_t>();
}

json to_json(const std::vector<RecommendedRecord>& recs) {
    json out = json::array();
    for (const auto& r : recs)
        out.push_back({{"context", r.context}, {"record_id", r.record}, {"score", r.score}, {"keywords", r.keywords}});
    return out;
}

json to_json(const std::vector<RelatedDocument>& docs) {
    json out = json::array();
    for (const auto& d : docs)
        out.push_back({{"document_id", d.document}, {"activation", d.activation}, {"keywords", d.keywords}});
    return out;
}

json to_json(const ContextStats& s) {
    return {{"id", s.id},
            {"records", s.records},
            {"keywords", s.keywords},
            {"propagated_keywords", s.propagated_keywords},
            {"cited", s.cited},
            {"citing_records", s.citing_records},
            {"documents", s.documents},
            {"universe", s.universe},
            {"citations", s.citations},
            {"keyword_assignments", s.keyword_assignments},
            {"working_ksp_entries", s.working_ksp_entries},
            {"traversal_entries", s.traversal_entries},
            {"path_triples", s.path_triples}};
}

json to_json(const std::string& session, const ConversationStep& step) {
    json auto_answers = json::array();
    for (const auto& a : step.auto_answers) auto_answers.push_back(to_json(a));
    json out{{"session_id", session}, {"status", step.question ? "question" : "done"}, {"auto_answers", auto_answers}};
    if (step.question) out["question"] = to_json(*step.question);
    if (step.category) {
        out["category"] = to_json(*step.category);
        out["recommendations"] = to_json(step.recommendations);
    }
    return out;
}

json to_json(const SessionView& v) {
    json answers = json::array();
    for (const auto& a : v.answers) answers.push_back(to_json(a));
    json clicks = json::array();
    for (const auto& c : v.clicks) clicks.push_back({{"document_id", c.document}, {"timestamp", c.epoch_seconds}});
    return {{"session_id", v.id},
            {"user_id", v.user},
            {"auto_answer_level", v.auto_answer_level},
            {"created_at", v.created_at},
            {"last_active", v.last_active},
            {"profile", v.profile},
            {"pending_question", v.pending_question ? to_json(*v.pending_question) : json(nullptr)},
            {"answers", answers},
            {"category", v.category ? to_json(*v.category) : json(nullptr)},
            {"clicks", clicks}};
}

json to_json(const CycleReport& r) {
    return {{"applied", r.applied},
            {"log_length", r.log_length},
            {"categories", r.categories},
            {"propagated", r.propagated},
            {"version", r.version}};
}

}  // namespace

ApiResponse Api::handle(std::string_view method, std::string_view path,
                        const std::multimap<std::string, std::string>& params, std::string_view body) {
    try {
        json parsed = body.empty() ? json::object() : json::parse(body);
        if (!parsed.is_object()) return error(400, "bad_request", "request body must be a JSON object");
        return route(method, path, params, parsed);
    } catch (const NotFound& e) {
        return error(404, "not_found", e.what());
    } catch (const StateError& e) {
        return error(409, "conflict", e.what());
    } catch (const ParseError& e) {
        return error(400, "parse_error", e.what());
    } catch (const std::invalid_argument& e) {
        return error(400, "invalid_argument", e.what());
    } catch (const json::exception& e) {
        return error(400, "bad_request", e.what());
    } catch (const std::exception& e) {
        return error(500, "internal", e.what());
    }
}

ApiResponse Api::handle_target(std::string_view method, std::string_view target, std::string_view body) {
    std::multimap<std::string, std::string> params;
    const auto q = target.find('?');
    const auto path = target.substr(0, q);
    try {
        if (q != std::string_view::npos)
            for (auto kv : text::split(target.substr(q + 1), '&')) {
                if (kv.empty()) continue;
                const auto eq = kv.find('=');
                params.emplace(percent_decode(kv.substr(0, eq)),
                               eq == std::string_view::npos ? "" : percent_decode(kv.substr(eq + 1)));
            }
    } catch (const std::invalid_argument& e) {
        return error(400, "bad_request", e.what());
    }
    return handle(method, percent_decode(path), params, body);
}

ApiResponse Api::route(std::string_view method, std::string_view path,
                       const std::multimap<std::string, std::string>& params, const json& body) {
    const auto seg = segments(path);
    const bool get = method == "GET", post = method == "POST";
    auto not_allowed = [&] { return error(405, "method_not_allowed", std::string(method) + " " + std::string(path)); };
    auto is = [&](std::initializer_list<std::string_view> pattern) {
        if (pattern.size() != seg.size()) return false;
        std::size_t i = 0;
        for (auto p : pattern) {
            if (p != "*" && p != seg[i]) return false;
            ++i;
        }
        return true;
    };

    if (is({"healthz"})) {
        if (!get) return not_allowed();
        const auto paths = engine_.path_stats();
        return {200,
                {{"status", "ok"},
                 {"version", engine_.version()},
                 {"contexts", engine_.list_contexts().size()},
                 {"clicks", paths.clicks}}};
    }
    if (is({"sessions"})) {
        if (!post) return not_allowed();
        std::optional<double> level;
        if (body.contains("auto_answer_level")) level = body.at("auto_answer_level").get<double>();
        const auto v = engine_.create_session(body.value("user_id", std::string()), level, timestamp_of(body));
        return {201, to_json(v)};
    }
    if (is({"sessions", "*"})) {
        if (!get) return not_allowed();
        return {200, to_json(engine_.session(std::string(seg[1])))};
    }
    if (is({"sessions", "*", "query"})) {
        if (!post) return not_allowed();
        const std::string id(seg[1]);
        const auto keywords = body.at("keywords").get<std::vector<std::string>>();
        return {200, to_json(id, engine_.query(id, keywords, timestamp_of(body)))};
    }
    if (is({"sessions", "*", "answer"})) {
        if (!post) return not_allowed();
        const std::string id(seg[1]);
        return {200, to_json(id, engine_.answer(id, body.at("keyword").get<std::string>(),
                                                body.at("relevant").get<bool>(), timestamp_of(body)))};
    }
    if (is({"sessions", "*", "recommendations"})) {
        if (!get) return not_allowed();
        const std::string id(seg[1]);
        const auto n = count_param(params, "n", 20);
        const auto v = engine_.session(id);
        return {200,
                {{"session_id", id},
                 {"category", v.category ? to_json(*v.category) : json(nullptr)},
                 {"recommendations", to_json(engine_.recommendations(id, n))}}};
    }
    if (is({"sessions", "*", "click"})) {
        if (!post) return not_allowed();
        const std::string id(seg[1]);
        const auto doc = body.at("document_id").get<std::string>();
        return {200, {{"session_id", id}, {"document_id", doc}, {"related", to_json(engine_.click(id, doc, timestamp_of(body)))}}};
    }
    if (is({"documents", "*", "related"})) {
        if (!get) return not_allowed();
        const std::string doc(seg[1]);
        const auto* net = param(params, "network");
        const std::string network = net ? *net : "composite";
        const auto n = count_param(params, "n", 10);
        return {200, {{"document_id", doc}, {"network", network}, {"related", to_json(engine_.related(doc, network, n))}}};
    }
    if (is({"admin", "contexts"})) {
        if (get) {
            json out = json::array();
            for (const auto& s : engine_.list_contexts()) out.push_back(to_json(s));
            return {200, {{"contexts", out}}};
        }
        if (!post) return not_allowed();
        const std::filesystem::path file = body.at("record_file").get<std::string>();
        IngestOptions opt = engine_.config().ingest;
        opt.min_keyword_frequency = body.value("min_keyword_frequency", opt.min_keyword_frequency);
        opt.stem = body.value("stem", opt.stem);
        const auto id = body.value("id", file.stem().string());
        return {201, to_json(engine_.add_context(id, file, opt))};
    }
    if (is({"admin", "contexts", "*", "stats"})) {
        if (!get) return not_allowed();
        return {200, to_json(engine_.context_stats(std::string(seg[2])))};
    }
    if (is({"admin", "contexts", "*", "records"})) {
        if (!get) return not_allowed();
        json out = json::array();
        for (const auto& r : engine_.records(std::string(seg[2])))
            out.push_back({{"record_id", r.id}, {"keywords", r.keywords}, {"citations", r.citations}});
        return {200, {{"context", seg[2]}, {"records", out}}};
    }
    if (is({"admin", "contexts", "*", "keywords"})) {
        if (!get) return not_allowed();
        json out = json::array();
        for (const auto& k : engine_.keywords(std::string(seg[2])))
            out.push_back({{"keyword", k.keyword}, {"records", k.records}, {"propagated", k.propagated}});
        return {200, {{"context", seg[2]}, {"keywords", out}}};
    }
    if (is({"admin", "contexts", "*", "neighbors"})) {
        if (!get) return not_allowed();
        const auto* node = param(params, "node");
        if (!node) throw std::invalid_argument("node parameter is required");
        const auto* net = param(params, "network");
        const std::string network = net ? *net : "working_ksp";
        double alpha = 0.0;
        if (const auto* a = param(params, "alpha"); a && !text::parse_double(*a, alpha))
            throw std::invalid_argument("alpha must be a number");
        json out = json::array();
        for (const auto& [name, p] : engine_.neighbors(std::string(seg[2]), network, *node, alpha))
            out.push_back({{"id", name}, {"proximity", p}});
        return {200, {{"context", seg[2]}, {"network", network}, {"node", *node}, {"alpha", alpha}, {"neighbors", out}}};
    }
    if (is({"admin", "adapt-now"})) {
        if (!post) return not_allowed();
        return {200, to_json(engine_.run_cycle())};
    }
    if (is({"admin", "paths"})) {
        if (!get) return not_allowed();
        const auto s = engine_.path_stats();
        return {200, {{"clicks", s.clicks}, {"triples", s.triples}, {"pending_categories", s.pending_categories}}};
    }
    return error(404, "not_found", "no route for " + std::string(path));
}

ApiResponse InProcessTransport::call(std::string_view method, const std::string& target, const json& body) {
    return api_.handle_target(method, target, body.is_null() ? std::string() : body.dump());
}

std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == ':') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

}  // namespace arec
