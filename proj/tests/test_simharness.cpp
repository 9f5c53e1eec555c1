#include "arec/errors.hpp"
#include "arec/server.hpp"
#include "arec/simharness.hpp"

#include "doctest.h"
#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>
#include <sstream>

using namespace arec;
using nlohmann::json;

namespace {

struct Bench {
    Engine engine{{}, [] { return std::int64_t{0}; }};
    Api api{engine};
    InProcessTransport transport{api};

    Bench() {
        engine.add_context("sfi", fixture::data("toy/sfi.krc"), {});
        engine.add_context("philbio", fixture::data("toy/philbio.krc"), {});
    }
};

CommunitySpec toy_spec() { return read_community_spec(fixture::data("toy/community.json")); }

// keyword -> records carrying it
std::map<std::string, std::set<std::string>> keyword_sets(const std::filesystem::path& file) {
    std::map<std::string, std::set<std::string>> out;
    std::istringstream in(fixture::slurp(file));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        const auto tab2 = line.find('\t', tab + 1);
        std::istringstream kws(line.substr(tab + 1, tab2 - tab - 1));
        std::string k;
        while (std::getline(kws, k, ',')) out[k].insert(line.substr(0, tab));
    }
    return out;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

}  // namespace

TEST_SUITE("simharness") {

TEST_CASE("spec parsing") {
    const auto spec = toy_spec();
    CHECK(spec.users == 5);
    CHECK(spec.clusters.size() == 1);
    CHECK(spec.clusters[0].profile == std::vector<std::string>{"GENETICS", "NATURAL_SELECTION"});
    CHECK(community_spec_from_json(to_json(spec)).seed == spec.seed);
    CHECK(to_json(community_spec_from_json(to_json(spec))) == to_json(spec));

    CHECK_THROWS_AS(community_spec_from_json({{"clusters", json::array()}}), std::invalid_argument);
    CHECK_THROWS_AS(community_spec_from_json({{"clusters", {{{"keywords", json::array()}}}}}), std::invalid_argument);
    json j = to_json(spec);
    j["colour"] = "red";
    CHECK_THROWS_AS(community_spec_from_json(j), std::invalid_argument);
    j = to_json(spec);
    j["p_relevant_in_cluster"] = 1.5;
    CHECK_THROWS_AS(community_spec_from_json(j), std::invalid_argument);
    j = to_json(spec);
    j["users"] = "many";
    CHECK_THROWS_AS(community_spec_from_json(j), std::invalid_argument);
    j = to_json(spec);
    j["clusters"][0]["profile"] = json::array();
    j["profile_size"] = 9;
    CHECK_THROWS_AS(community_spec_from_json(j), std::invalid_argument);

    fixture::TempDir tmp;
    CHECK_THROWS_AS(read_community_spec(tmp.write("bad.json", "{")), ParseError);
    CHECK_THROWS_AS(read_community_spec(tmp / "absent.json"), NotFound);
}

TEST_CASE("zero sessions report the initial state") {
    Bench b;
    auto spec = toy_spec();
    spec.sessions_per_user = 0;
    const auto version = b.engine.version();
    const auto report = run_community_sim(spec, b.transport);
    REQUIRE_FALSE(report.rows.empty());
    for (const auto& r : report.rows) CHECK(r.step == 0);
    // mean pairwise Jaccard over the cluster keywords, straight from the file
    const std::vector<std::string> cluster{"GENETICS", "NATURAL_SELECTION", "GENETIC_ALGORITHMS", "EVOLUTION"};
    const auto sets = keyword_sets(fixture::data("toy/sfi.krc"));
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < cluster.size(); ++i)
        for (std::size_t j = i + 1; j < cluster.size(); ++j, ++pairs) {
            const auto& a = sets.at(cluster[i]);
            const auto& bset = sets.at(cluster[j]);
            std::set<std::string> both, either(a.begin(), a.end());
            std::set_intersection(a.begin(), a.end(), bset.begin(), bset.end(), std::inserter(both, both.end()));
            either.insert(bset.begin(), bset.end());
            sum += static_cast<double>(both.size()) / static_cast<double>(either.size());
        }
    const auto ksp_in = report.series("ksp_in", "sfi", "evolution");
    REQUIRE(ksp_in.size() == 1);
    CHECK(std::abs(ksp_in[0] - sum / pairs) <= 1e-12);
    CHECK(report.series("propagated_ksp", "philbio", "GENETIC_ALGORITHMS~GENETICS").empty());
    CHECK(report.series("traversal_intra", "sfi", "evolution") == std::vector<double>{0.0});
    CHECK(b.engine.path_stats().clicks == 0);
    CHECK(b.engine.version() == version);
}

TEST_CASE("the toy community reinforces and propagates") {
    Bench b;
    const auto report = run_community_sim(toy_spec(), b.transport);

    for (const char* other : {"GENETICS", "NATURAL_SELECTION"}) {
        const auto series = report.series("propagated_ksp", "philbio", std::string("GENETIC_ALGORITHMS~") + other);
        CHECK(series.size() == 50);
        CHECK(strictly_increasing(series));
    }
    const auto in = report.series("ksp_in", "philbio", "evolution");
    const auto out = report.series("ksp_out", "philbio", "evolution");
    REQUIRE(in.size() == 51);
    CHECK(in.back() > in.front());
    CHECK(in.back() > out.back());

    const auto intra = report.series("traversal_intra", "sfi", "evolution");
    REQUIRE(intra.size() == 51);
    CHECK(intra.front() == 0.0);
    CHECK(intra.back() > 0.0);

    const auto precision = report.series("precision", "all", "evolution");
    CHECK(precision.size() == 50);
    for (double p : precision) CHECK(p > 0.0);
    CHECK(report.steps("precision", "all", "evolution").front() == 1);
    CHECK(b.engine.path_stats().clicks == 150);
}

TEST_CASE("fixed seeds give identical reports") {
    auto spec = toy_spec();
    spec.p_relevant_in_cluster = 0.7;
    spec.p_relevant_out_cluster = 0.2;
    spec.sessions_per_user = 3;
    spec.clusters[0].profile.clear();
    Bench a, b;
    const auto ra = run_community_sim(spec, a.transport);
    const auto rb = run_community_sim(spec, b.transport);
    CHECK(ra == rb);
    std::ostringstream sa, sb;
    write_report(sa, ra);
    write_report(sb, rb);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().rfind("#simreport 1\nstep\tmetric\tcontext\tsubject\tvalue\n", 0) == 0);

    spec.seed += 1;
    Bench c;
    const auto rc = run_community_sim(spec, c.transport);
    CHECK(rc.rows.size() > 0);
}

TEST_CASE("preconditions and transport failures") {
    Engine lonely({}, [] { return std::int64_t{0}; });
    lonely.add_context("sfi", fixture::data("toy/sfi.krc"), {});
    Api api(lonely);
    InProcessTransport t(api);
    CHECK_THROWS_AS(run_community_sim(toy_spec(), t), StateError);

    Bench b;
    auto spec = toy_spec();
    spec.clusters[0].profile = {"NOT_A_KEYWORD"};
    CHECK_THROWS_WITH_AS(run_community_sim(spec, b.transport), doctest::Contains("404"), std::runtime_error);

    HttpTransport nowhere("http://127.0.0.1:1");
    CHECK_THROWS_AS(run_community_sim(toy_spec(), nowhere), TransportError);
}

TEST_CASE("the simulation runs over HTTP") {
    Bench b;
    HttpServer server(b.engine, {.port = 0, .adaptation_timer = false});
    server.start();
    HttpTransport http("http://127.0.0.1:" + std::to_string(server.port()));
    auto spec = toy_spec();
    spec.sessions_per_user = 1;
    const auto over_http = run_community_sim(spec, http);
    server.stop();

    Bench local;
    CHECK(over_http == run_community_sim(spec, local.transport));
}

}  // TEST_SUITE
