#include "arec/errors.hpp"
#include "arec/proximity.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

using namespace arec;

namespace {

KnowledgeContext ctx_from(std::vector<Record> records, std::size_t min_freq = 1) {
    return KnowledgeContext::build(std::move(records), {.min_keyword_frequency = min_freq});
}

double pin(const KnowledgeContext& ctx, const SparseProximity& p, const char* a, const char* b) {
    return p.get(ctx.documents().at(a), ctx.documents().at(b));
}

// Every pair of named items agrees exactly with the set-based oracle.
void check_against_oracle(const SparseProximity& p, const Interner& names, const oracle::NameSets& sets) {
    REQUIRE(p.dimension() == names.size());
    for (Index i = 0; i < names.size(); ++i) {
        const auto& si = sets.at(names.name(i));
        for (Index j = 0; j < names.size(); ++j) {
            const double expected = oracle::jaccard(si, sets.at(names.name(j)));
            if (std::abs(p.get(i, j) - expected) > 1e-12) {
                FAIL_CHECK("pair (" << names.name(i) << "," << names.name(j) << "): " << p.get(i, j) << " vs " << expected);
                return;
            }
        }
    }
}

SparseProximity random_symmetric(std::mt19937_64& rng, std::size_t n, double density) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SparseProximity p(n, ProximityKind::composite);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            if (u(rng) < density) p.set(i, j, u(rng));
    return p;
}

}  // namespace

TEST_SUITE("proximity") {

TEST_CASE("inwards proximity examples") {
    SUBCASE("common single ancestor") {
        auto ctx = ctx_from({{"a", {}, {"d1", "d2"}}});
        CHECK(pin(ctx, inwards_proximity(ctx), "d1", "d2") == 1.0);
    }
    SUBCASE("ancestors {a,b} vs {b,c}") {
        auto ctx = ctx_from({{"a", {}, {"d1"}}, {"b", {}, {"d1", "d2"}}, {"c", {}, {"d2"}}});
        const double expected = oracle::jaccard({"a", "b"}, {"b", "c"});
        CHECK(expected == doctest::Approx(1.0 / 3.0));
        CHECK(pin(ctx, inwards_proximity(ctx), "d1", "d2") == expected);
    }
    SUBCASE("no shared ancestors") {
        auto ctx = ctx_from({{"a", {}, {"d1"}}, {"b", {}, {"d2"}}});
        auto p = inwards_proximity(ctx);
        CHECK(pin(ctx, p, "d1", "d2") == 0.0);
        // documents nobody cites have an empty ancestor set: diagonal stays 0
        CHECK(pin(ctx, p, "a", "a") == 0.0);
        CHECK(pin(ctx, p, "d1", "d1") == 1.0);
    }
}

TEST_CASE("outwards proximity examples") {
    auto ctx = ctx_from({{"d1", {}, {"x", "y", "z"}},
                         {"d2", {}, {"z", "w"}},
                         {"d3", {}, {"x", "y", "z"}},
                         {"d4", {}, {}},
                         {"d5", {}, {"d4"}}});
    auto p = outwards_proximity(ctx);
    CHECK(pin(ctx, p, "d1", "d3") == 1.0);
    CHECK(pin(ctx, p, "d1", "d2") == oracle::jaccard({"x", "y", "z"}, {"z", "w"}));
    CHECK(pin(ctx, p, "d1", "d2") == 0.25);
    const Index d4 = ctx.documents().at("d4");
    CHECK(p.row(d4).empty());
}

TEST_CASE("keyword semantic proximity matches the pairwise oracle") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        auto records = oracle::random_corpus(rng, {.records = 200, .keywords = 50, .keyword_density = 0.08});
        auto ctx = ctx_from(records);
        const std::set<std::string> kept(ctx.keywords().names().begin(), ctx.keywords().names().end());
        auto ksp = keyword_semantic_proximity(ctx);
        check_against_oracle(ksp, ctx.keywords(), oracle::keyword_records(records, kept));
        for (Index k = 0; k < ctx.keyword_count(); ++k) CHECK(ksp.get(k, k) == 1.0);
    }
}

TEST_CASE("record semantic proximity examples") {
    auto ctx = ctx_from({{"r1", {"k1", "k2", "k3"}, {}},
                         {"r2", {"k3", "k4"}, {}},
                         {"r3", {"k1", "k2", "k3"}, {}},
                         {"r4", {}, {}}});
    auto p = record_semantic_proximity(ctx);
    const auto& R = ctx.records();
    CHECK(p.get(R.at("r1"), R.at("r3")) == 1.0);
    CHECK(p.get(R.at("r1"), R.at("r2")) == 0.25);
    CHECK(p.row(R.at("r4")).empty());
}

TEST_CASE("all four proximities agree with the oracle on random corpora") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        auto records = oracle::random_corpus(rng, {.records = 80, .keywords = 30, .external_documents = 60});
        auto ctx = ctx_from(records, 2);
        const std::set<std::string> kept(ctx.keywords().names().begin(), ctx.keywords().names().end());
        check_against_oracle(inwards_proximity(ctx), ctx.documents(), oracle::ancestors(records));
        check_against_oracle(outwards_proximity(ctx), ctx.documents(), oracle::descendants(records));
        check_against_oracle(keyword_semantic_proximity(ctx), ctx.keywords(), oracle::keyword_records(records, kept));
        check_against_oracle(record_semantic_proximity(ctx), ctx.records(), oracle::record_keywords(records, kept));
    }
}

TEST_CASE("symmetry and range of derived proximities") {
    std::mt19937_64 rng(17);
    auto ctx = ctx_from(oracle::random_corpus(rng, {.records = 60}));
    for (const auto& p : {inwards_proximity(ctx), outwards_proximity(ctx), keyword_semantic_proximity(ctx),
                          record_semantic_proximity(ctx)}) {
        for (Index i = 0; i < p.dimension(); ++i) {
            for (const auto& e : p.row(i)) {
                CHECK(e.value > 0.0);
                CHECK(e.value <= 1.0);
                CHECK(p.get(e.col, i) == e.value);
            }
        }
    }
}

TEST_CASE("adding a shared ancestor never lowers inwards proximity") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> pick(0, 29);
    for (int trial = 0; trial < 30; ++trial) {
        auto records = oracle::random_corpus(rng, {.records = 30, .external_documents = 20, .citation_density = 0.08});
        const auto a = oracle::name("s", pick(rng) % 20), b = oracle::name("s", (pick(rng) + 1) % 20);
        if (a == b) continue;
        records.push_back({"anchor", {}, {a, b}});
        auto before_ctx = ctx_from(records);
        const double before = pin(before_ctx, inwards_proximity(before_ctx), a.c_str(), b.c_str());
        auto& citer = records[pick(rng)];
        citer.citations.push_back(a);
        citer.citations.push_back(b);
        auto after_ctx = ctx_from(records);
        const double after = pin(after_ctx, inwards_proximity(after_ctx), a.c_str(), b.c_str());
        CHECK(after >= before);
    }
}

TEST_CASE("structural combination") {
    SparseProximity in(3, ProximityKind::inwards), out(3, ProximityKind::outwards);
    in.set(0, 1, 0.2);
    out.set(0, 1, 0.6);
    out.set(1, 2, 0.3);
    CHECK(combine_structural(in, out, 1.0).get(0, 1) == 0.2);
    CHECK(combine_structural(in, out, 1.0).get(1, 2) == 0.0);
    CHECK(combine_structural(in, out, 0.5).get(0, 1) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK_THROWS_AS(combine_structural(in, SparseProximity(4, ProximityKind::outwards)), std::invalid_argument);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_symmetric(rng, 25, 0.3), b = random_symmetric(rng, 25, 0.3);
        const double lambda = u(rng);
        auto c = combine_structural(a, b, lambda);
        for (Index i = 0; i < 25; ++i)
            for (Index j = 0; j < 25; ++j) {
                const double expected = lambda * a.get(i, j) + (1 - lambda) * b.get(i, j);
                CHECK(c.get(i, j) == doctest::Approx(expected).epsilon(1e-14));
                CHECK(c.get(i, j) >= 0.0);
                CHECK(c.get(i, j) <= 1.0);
                CHECK(c.get(i, j) == c.get(j, i));
            }
    }
}

TEST_CASE("neighborhoods") {
    SparseProximity p(4, ProximityKind::composite);
    p.set(0, 0, 1.0);
    p.set(0, 1, 0.3);
    p.set(0, 2, 0.7);
    CHECK(neighborhood(p, 0, 1.0).members.empty());
    auto nb = neighborhood(p, 0, 0.0);
    REQUIRE(nb.members.size() == 2);
    CHECK(nb.members[0] == Neighbor{2, 0.7});
    CHECK(nb.members[1] == Neighbor{1, 0.3});
    CHECK(neighborhood(p, 0, 0.3).members.size() == 1);  // strict
    CHECK_THROWS_AS(neighborhood(p, 9, 0.5), NotFound);

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        auto q = random_symmetric(rng, 30, 0.5);
        for (Index node = 0; node < 30; ++node) {
            std::vector<Neighbor> expected;
            for (Index j = 0; j < 30; ++j)
                if (j != node && q.get(node, j) > 0.5) expected.push_back({j, q.get(node, j)});
            std::stable_sort(expected.begin(), expected.end(),
                             [](const Neighbor& a, const Neighbor& b) { return a.proximity > b.proximity; });
            CHECK(neighborhood(q, node, 0.5).members == expected);
        }
    }
}

TEST_CASE("HITS on structure-forced graphs") {
    SUBCASE("star") {
        std::vector<Record> recs;
        for (int i = 0; i < 5; ++i) recs.push_back({oracle::name("leaf", i), {}, {"target"}});
        auto ctx = ctx_from(recs);
        auto h = hits_rank(ctx);
        CHECK(h.converged);
        const Index t = ctx.documents().at("target");
        for (Index d = 0; d < ctx.document_count(); ++d) {
            CHECK(h.authority[d] == doctest::Approx(d == t ? 1.0 : 0.0));
            CHECK(h.hub[d] == doctest::Approx(d == t ? 0.0 : 1.0 / std::sqrt(5.0)));
        }
    }
    SUBCASE("two nodes") {
        auto c = CsrMatrix::from_rows(2, {{1}, {}});
        auto h = hits_rank(c);
        CHECK(h.authority == std::vector<double>{0.0, 1.0});
        CHECK(h.hub == std::vector<double>{1.0, 0.0});
    }
    SUBCASE("all-zero links") {
        CHECK_THROWS_AS(hits_rank(CsrMatrix::from_rows(3, {{}, {}, {}})), std::invalid_argument);
    }
}

TEST_CASE("HITS is invariant under global scaling and matches the dense eigenvector") {
    std::mt19937_64 rng(53);
    std::bernoulli_distribution edge(0.25);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<Index>> rows(15);
        for (Index i = 0; i < 15; ++i)
            for (Index j = 0; j < 15; ++j)
                if (i != j && edge(rng)) rows[i].push_back(j);
        auto c = CsrMatrix::from_rows(15, rows);
        auto scaled = c;
        scaled.values.assign(c.nonzeros(), 3.7);
        auto a = hits_rank(c, {.max_iterations = 2000});
        auto b = hits_rank(scaled, {.max_iterations = 2000});
        for (std::size_t i = 0; i < 15; ++i) {
            CHECK(a.authority[i] == doctest::Approx(b.authority[i]).epsilon(1e-12));
            CHECK(a.hub[i] == doctest::Approx(b.hub[i]).epsilon(1e-12));
        }

        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(15, 15);
        for (Index i = 0; i < 15; ++i)
            for (Index j : c.row(i)) dense(i, j) = 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense.transpose() * dense);
        Eigen::VectorXd v = es.eigenvectors().col(14).cwiseAbs();
        for (std::size_t i = 0; i < 15; ++i) CHECK(a.authority[i] == doctest::Approx(v(i)).epsilon(1e-6));
    }
}

TEST_CASE("semi-metric ratio") {
    SparseProximity p(3, ProximityKind::keyword_semantic);
    p.set(0, 1, 0.1);
    p.set(0, 2, 0.8);
    p.set(2, 1, 0.8);
    CHECK(proximity_to_distance(0.1) == doctest::Approx(9.0));
    CHECK(*semi_metric_ratio(p, 0, 1) == doctest::Approx(18.0).epsilon(1e-12));
    CHECK(*semi_metric_ratio(p, 0, 2) == 1.0);

    SparseProximity unit(2, ProximityKind::keyword_semantic);
    unit.set(0, 1, 1.0);
    CHECK(*semi_metric_ratio(unit, 0, 1) == 1.0);

    SparseProximity disconnected(3, ProximityKind::keyword_semantic);
    disconnected.set(0, 1, 0.5);
    CHECK_FALSE(semi_metric_ratio(disconnected, 0, 2).has_value());
    disconnected.set(1, 2, 0.5);
    CHECK(std::isinf(*semi_metric_ratio(disconnected, 0, 2)));
}

TEST_CASE("proximity file round trip") {
    std::mt19937_64 rng(61);
    auto p = random_symmetric(rng, 20, 0.3);
    p.set(3, 3, 1.0);
    for (bool diag : {false, true}) {
        std::stringstream s;
        write_proximity(s, p, diag);
        auto q = read_proximity(s, ProximityKind::composite, 20);
        if (diag) {
            CHECK(q == p);
        } else {
            CHECK(q.get(3, 3) == 0.0);
            q.set(3, 3, 1.0);
            CHECK(q == p);
        }
    }
    std::stringstream text("#prox 1\n0\t1\t0.5\n");
    auto t = read_proximity(text, ProximityKind::traversal);
    CHECK(t.get(0, 1) == 0.5);
    CHECK(t.get(1, 0) == 0.0);

    std::stringstream bad("#prox 1\n0\t1\n");
    CHECK_THROWS_AS(read_proximity(bad, ProximityKind::composite), ParseError);
}

}  // TEST_SUITE
