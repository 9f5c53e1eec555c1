#include "arec/simharness.hpp"

#include "arec/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

namespace arec {

using nlohmann::json;

void CommunitySpec::validate() const {
    if (users == 0) throw std::invalid_argument("community: users must be positive");
    if (clusters.empty()) throw std::invalid_argument("community: at least one cluster is required");
    for (const auto& c : clusters) {
        if (c.keywords.empty()) throw std::invalid_argument("community: cluster '" + c.name + "' has no keywords");
        if (!(c.weight > 0.0)) throw std::invalid_argument("community: cluster '" + c.name + "' needs a positive weight");
        if (c.profile.empty() && (profile_size == 0 || profile_size > c.keywords.size()))
            throw std::invalid_argument("community: profile_size does not fit cluster '" + c.name + "'");
    }
    for (double p : {p_relevant_in_cluster, p_relevant_out_cluster})
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("community: answer probabilities must be in [0,1]");
    if (!(auto_answer_level >= 0.0 && auto_answer_level <= 1.0))
        throw std::invalid_argument("community: auto_answer_level must be in [0,1]");
    if (recommendations == 0) throw std::invalid_argument("community: recommendations must be positive");
    if (click_spacing <= 0) throw std::invalid_argument("community: click_spacing must be positive");
    if (session_spacing <= click_spacing * static_cast<std::int64_t>(clicks_per_session + 1))
        throw std::invalid_argument("community: session_spacing must exceed the clicks of one session");
}

json to_json(const CommunitySpec& s) {
    json clusters = json::array();
    for (const auto& c : s.clusters)
        clusters.push_back({{"name", c.name}, {"keywords", c.keywords}, {"weight", c.weight}, {"profile", c.profile}});
    return {{"users", s.users},
            {"sessions_per_user", s.sessions_per_user},
            {"clicks_per_session", s.clicks_per_session},
            {"profile_size", s.profile_size},
            {"clusters", clusters},
            {"p_relevant_in_cluster", s.p_relevant_in_cluster},
            {"p_relevant_out_cluster", s.p_relevant_out_cluster},
            {"auto_answer_level", s.auto_answer_level},
            {"recommendations", s.recommendations},
            {"start_time", s.start_time},
            {"session_spacing", s.session_spacing},
            {"click_spacing", s.click_spacing},
            {"seed", s.seed}};
}

namespace {

template <class T>
void take(const json& j, const char* key, T& field) {
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(std::string("community: field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw std::invalid_argument("community: unknown field '" + key + "' in " + where);
}

}  // namespace

CommunitySpec community_spec_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("community: spec must be a JSON object");
    reject_unknown(j,
                   {"users", "sessions_per_user", "clicks_per_session", "profile_size", "clusters",
                    "p_relevant_in_cluster", "p_relevant_out_cluster", "auto_answer_level", "recommendations",
                    "start_time", "session_spacing", "click_spacing", "seed"},
                   "spec");
    CommunitySpec s;
    take(j, "users", s.users);
    take(j, "sessions_per_user", s.sessions_per_user);
    take(j, "clicks_per_session", s.clicks_per_session);
    take(j, "profile_size", s.profile_size);
    take(j, "p_relevant_in_cluster", s.p_relevant_in_cluster);
    take(j, "p_relevant_out_cluster", s.p_relevant_out_cluster);
    take(j, "auto_answer_level", s.auto_answer_level);
    take(j, "recommendations", s.recommendations);
    take(j, "start_time", s.start_time);
    take(j, "session_spacing", s.session_spacing);
    take(j, "click_spacing", s.click_spacing);
    take(j, "seed", s.seed);
    if (j.contains("clusters")) {
        if (!j.at("clusters").is_array()) throw std::invalid_argument("community: clusters must be an array");
        for (const auto& c : j.at("clusters")) {
            if (!c.is_object()) throw std::invalid_argument("community: each cluster must be an object");
            reject_unknown(c, {"name", "keywords", "weight", "profile"}, "cluster");
            PlantedCluster pc;
            take(c, "name", pc.name);
            take(c, "keywords", pc.keywords);
            take(c, "weight", pc.weight);
            take(c, "profile", pc.profile);
            if (pc.name.empty()) pc.name = "cluster" + std::to_string(s.clusters.size() + 1);
            s.clusters.push_back(std::move(pc));
        }
    }
    s.validate();
    return s;
}

CommunitySpec read_community_spec(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw NotFound("cannot open community spec " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, file.string() + ": " + e.what());
    }
    return community_spec_from_json(j);
}

std::vector<double> SimReport::series(const std::string& metric, const std::string& context,
                                      const std::string& subject) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.metric == metric && r.context == context && r.subject == subject) out.push_back(r.value);
    return out;
}

std::vector<std::size_t> SimReport::steps(const std::string& metric, const std::string& context,
                                          const std::string& subject) const {
    std::vector<std::size_t> out;
    for (const auto& r : rows)
        if (r.metric == metric && r.context == context && r.subject == subject) out.push_back(r.step);
    return out;
}

void write_report(std::ostream& out, const SimReport& report) {
    out << kSimReportHeader << '\n' << "step\tmetric\tcontext\tsubject\tvalue\n";
    char buf[32];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        out << r.step << '\t' << r.metric << '\t' << r.context << '\t' << r.subject << '\t' << buf << '\n';
    }
}

namespace {

// Portable draws: the standard distributions differ between libraries.
class Random {
public:
    explicit Random(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    // Index drawn with probability proportional to its weight.
    std::size_t weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double x = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (x < weights[i]) return i;
            x -= weights[i];
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

struct User {
    std::string id;
    std::size_t cluster = 0;
    std::vector<std::string> profile;
};

class Driver {
public:
    Driver(const CommunitySpec& spec, ApiTransport& api) : spec_(spec), api_(api), random_(spec.seed) {}

    SimReport run() {
        const auto contexts = get("/admin/contexts").at("contexts");
        if (contexts.size() < 2) throw StateError("simulation needs an engine serving at least two contexts");

        std::vector<double> weights;
        for (const auto& c : spec_.clusters) weights.push_back(c.weight);
        for (std::size_t u = 0; u < spec_.users; ++u) {
            char id[16];
            std::snprintf(id, sizeof id, "user%03zu", u + 1);
            User user{id, random_.weighted(weights), {}};
            const auto& cluster = spec_.clusters[user.cluster];
            user.profile = cluster.profile.empty() ? sample(cluster.keywords, spec_.profile_size) : cluster.profile;
            users_.push_back(std::move(user));
        }

        measure(0);
        std::size_t step = 0;
        for (std::size_t round = 0; round < spec_.sessions_per_user; ++round)
            for (const auto& user : users_) {
                ++step;
                session(user, step);
                post("/admin/adapt-now", json::object());
                measure(step);
            }
        return std::move(report_);
    }

private:
    json expect(std::string_view method, const std::string& target, const json& body) {
        auto r = api_.call(method, target, body);
        if (r.status / 100 != 2) {
            std::string message = r.body.is_object() && r.body.contains("error")
                                      ? r.body["error"].value("message", std::string())
                                      : r.body.dump();
            throw std::runtime_error("simulation: " + std::string(method) + " " + target + " returned " +
                                     std::to_string(r.status) + ": " + message);
        }
        return std::move(r.body);
    }
    json get(const std::string& target) { return expect("GET", target, nullptr); }
    json post(const std::string& target, const json& body) { return expect("POST", target, body); }

    std::vector<std::string> sample(std::vector<std::string> pool, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) std::swap(pool[i], pool[i + random_.below(pool.size() - i)]);
        pool.resize(n);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    bool in_cluster(std::size_t cluster, const std::string& keyword) const {
        const auto& k = spec_.clusters[cluster].keywords;
        return std::find(k.begin(), k.end(), keyword) != k.end();
    }
    bool relevant_record(std::size_t cluster, const json& keywords) const {
        for (const auto& k : keywords)
            if (in_cluster(cluster, k.get<std::string>())) return true;
        return false;
    }

    void add(std::size_t step, std::string metric, std::string context, std::string subject, double value) {
        report_.rows.push_back({step, std::move(metric), std::move(context), std::move(subject), value});
    }

    void session(const User& user, std::size_t step) {
        const std::int64_t t0 = spec_.start_time + static_cast<std::int64_t>(step - 1) * spec_.session_spacing;
        const std::string sid = post("/sessions", {{"user_id", user.id},
                                                   {"auto_answer_level", spec_.auto_answer_level},
                                                   {"timestamp", t0}})
                                    .at("session_id");
        const std::string base = "/sessions/" + url_encode(sid);
        auto step_reply = post(base + "/query", {{"keywords", user.profile}, {"timestamp", t0}});
        std::size_t questions = 0;
        while (step_reply.at("status") == "question") {
            const std::string keyword = step_reply.at("question").at("keyword");
            const double p = in_cluster(user.cluster, keyword) ? spec_.p_relevant_in_cluster
                                                               : spec_.p_relevant_out_cluster;
            const bool relevant = random_.uniform() < p;
            ++questions;
            step_reply = post(base + "/answer", {{"keyword", keyword}, {"relevant", relevant}, {"timestamp", t0}});
        }
        const auto& cluster = spec_.clusters[user.cluster].name;
        add(step, "questions", "all", cluster, static_cast<double>(questions));

        auto recs = get(base + "/recommendations?n=" + std::to_string(spec_.recommendations)).at("recommendations");
        if (recs.empty()) return;
        std::size_t relevant = 0;
        for (const auto& r : recs) relevant += relevant_record(user.cluster, r.at("keywords"));
        add(step, "precision", "all", cluster, static_cast<double>(relevant) / static_cast<double>(recs.size()));

        // clicks without replacement, proportional to score
        std::vector<double> weights;
        for (const auto& r : recs) weights.push_back(r.at("score").get<double>());
        std::int64_t t = t0 + spec_.click_spacing;
        for (std::size_t c = 0; c < spec_.clicks_per_session && c < recs.size(); ++c) {
            const auto i = random_.weighted(weights);
            weights[i] = 0.0;
            post(base + "/click", {{"document_id", recs[i].at("record_id")}, {"timestamp", t}});
            t += spec_.click_spacing;
        }
    }

    std::map<std::string, double> row(const std::string& context, const std::string& network,
                                      const std::string& node) {
        std::map<std::string, double> out;
        const auto reply = get("/admin/contexts/" + url_encode(context) + "/neighbors?network=" + network +
                               "&node=" + url_encode(node));
        for (const auto& n : reply.at("neighbors")) out[n.at("id")] = n.at("proximity");
        return out;
    }

    static double at(const std::map<std::string, double>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? 0.0 : it->second;
    }

    void measure(std::size_t step) {
        const auto contexts = get("/admin/contexts").at("contexts");
        for (const auto& ctx : contexts) {
            const std::string id = ctx.at("id");
            std::vector<std::string> keywords;
            std::set<std::string> propagated;
            const auto listed = get("/admin/contexts/" + url_encode(id) + "/keywords").at("keywords");
            for (const auto& k : listed) {
                keywords.push_back(k.at("keyword"));
                if (k.at("propagated").get<bool>()) propagated.insert(k.at("keyword"));
            }
            const auto records = get("/admin/contexts/" + url_encode(id) + "/records").at("records");
            std::map<std::string, std::map<std::string, double>> traversal;
            for (const auto& r : records) traversal[r.at("record_id")] = row(id, "traversal", r.at("record_id"));

            for (std::size_t c = 0; c < spec_.clusters.size(); ++c) {
                const auto& name = spec_.clusters[c].name;
                std::vector<std::string> present, absent;
                for (const auto& k : keywords) (in_cluster(c, k) ? present : absent).push_back(k);
                std::map<std::string, std::map<std::string, double>> ksp;
                for (const auto& k : present) ksp[k] = row(id, "working_ksp", k);

                if (present.size() >= 2) {
                    double sum = 0.0;
                    std::size_t n = 0;
                    for (std::size_t a = 0; a < present.size(); ++a)
                        for (std::size_t b = a + 1; b < present.size(); ++b, ++n)
                            sum += at(ksp[present[a]], present[b]);
                    add(step, "ksp_in", id, name, sum / static_cast<double>(n));
                }
                if (!present.empty() && !absent.empty()) {
                    double sum = 0.0;
                    for (const auto& a : present)
                        for (const auto& b : absent) sum += at(ksp[a], b);
                    add(step, "ksp_out", id, name, sum / static_cast<double>(present.size() * absent.size()));
                }
                for (const auto& p : present) {
                    if (!propagated.count(p)) continue;
                    for (const auto& q : present)
                        if (q != p) add(step, "propagated_ksp", id, p + "~" + q, at(ksp[p], q));
                }

                std::vector<std::string> in, out;
                for (const auto& r : records)
                    (relevant_record(c, r.at("keywords")) ? in : out).push_back(r.at("record_id"));
                auto sym = [&](const std::string& a, const std::string& b) {
                    return 0.5 * (at(traversal[a], b) + at(traversal[b], a));
                };
                if (in.size() >= 2) {
                    double sum = 0.0;
                    std::size_t n = 0;
                    for (std::size_t a = 0; a < in.size(); ++a)
                        for (std::size_t b = a + 1; b < in.size(); ++b, ++n) sum += sym(in[a], in[b]);
                    add(step, "traversal_intra", id, name, sum / static_cast<double>(n));
                }
                if (!in.empty() && !out.empty()) {
                    double sum = 0.0;
                    for (const auto& a : in)
                        for (const auto& b : out) sum += sym(a, b);
                    add(step, "traversal_inter", id, name, sum / static_cast<double>(in.size() * out.size()));
                }
            }
        }
    }

    const CommunitySpec& spec_;
    ApiTransport& api_;
    Random random_;
    std::vector<User> users_;
    SimReport report_;
};

}  // namespace

SimReport run_community_sim(const CommunitySpec& spec, ApiTransport& api) {
    spec.validate();
    return Driver(spec, api).run();
}

}  // namespace arec
