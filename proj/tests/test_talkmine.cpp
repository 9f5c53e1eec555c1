#include "arec/errors.hpp"
#include "arec/proximity.hpp"
#include "arec/talkmine.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace arec;

namespace {

// Context whose keywords each qualify one record, so ksp starts as the identity
// and tests can write the working proximity they need.
KnowledgeContext keyword_context(const std::vector<std::string>& keywords) {
    std::vector<Record> records;
    for (const auto& k : keywords) records.push_back({"r_" + k, {k}, {}});
    return KnowledgeContext::build(records, {.min_keyword_frequency = 1});
}

void set_ksp(KnowledgeContext& ctx, const std::string& a, const std::string& b, double v) {
    ctx.working_keyword_proximity().set(ctx.keywords().at(a), ctx.keywords().at(b), v);
}

double ksp(const KnowledgeContext& ctx, const std::string& a, const std::string& b) {
    return ctx.working_keyword_proximity().get(ctx.keywords().at(a), ctx.keywords().at(b));
}

double F(const ConversationState& st, std::size_t c, const std::string& k) {
    auto i = st.find(k);
    return i ? st.membership[c][*i] : 0.0;
}

double B(const ConversationState& st, const std::string& k) {
    auto i = st.find(k);
    return i ? st.blend[*i] : 0.0;
}

FuzzyCategory category(std::vector<std::pair<std::string, double>> entries) {
    FuzzyCategory c;
    std::sort(entries.begin(), entries.end());
    for (auto& [k, mu] : entries) c.entries.push_back({k, mu, {}});
    return c;
}

// A state built directly, for protocol tests independent of contexts.
ConversationState manual_state(std::vector<std::string> keywords, std::vector<std::vector<double>> f) {
    ConversationState st;
    st.keywords = std::move(keywords);
    for (std::size_t c = 0; c < f.size(); ++c) {
        st.context_ids.push_back("c" + std::to_string(c + 1));
        st.history.push_back(0);
    }
    st.membership = std::move(f);
    st.blend.assign(st.keywords.size(), 0.0);
    for (std::size_t i = 0; i < st.keywords.size(); ++i)
        for (const auto& row : st.membership) st.blend[i] = std::max(st.blend[i], row[i]);
    st.resolved.assign(st.keywords.size(), 0);
    return st;
}

const std::vector<std::string> kProfileK{"k"};

}  // namespace

TEST_SUITE("talkmine") {

TEST_CASE("single context projects the neighborhood") {
    auto ctx = keyword_context({"k", "k2", "k3"});
    set_ksp(ctx, "k", "k2", 0.4);
    const ContextRef refs[] = {{"c1", &ctx}};
    auto st = init_category(kProfileK, refs);
    CHECK(st.keywords == std::vector<std::string>{"k", "k2"});
    CHECK(F(st, 0, "k") == 1.0);
    CHECK(F(st, 0, "k2") == 0.4);
    CHECK(B(st, "k2") == 0.4);
    CHECK(st.resolved[*st.find("k")]);
    CHECK_FALSE(st.resolved[*st.find("k2")]);
}

TEST_CASE("two contexts blend by max and expose the spread") {
    auto a = keyword_context({"k", "k2"});
    auto b = keyword_context({"k", "k3"});
    set_ksp(a, "k", "k2", 0.4);
    const ContextRef refs[] = {{"a", &a}, {"b", &b}};
    auto st = init_category(kProfileK, refs);
    CHECK(B(st, "k2") == 0.4);
    CHECK(st.spread(*st.find("k2")) == doctest::Approx(0.4));
    CHECK(F(st, 1, "k2") == 0.0);
}

TEST_CASE("multi-keyword profiles take the pointwise max of rows") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        oracle::CorpusShape shape{.records = 40, .keywords = 15, .external_documents = 0, .keyword_density = 0.2};
        auto ctx = KnowledgeContext::build(oracle::random_corpus(rng, shape), {.min_keyword_frequency = 1});
        if (ctx.keyword_count() < 2) continue;
        const auto& names = ctx.keywords().names();
        const std::vector<std::string> profile{names[rng() % names.size()], names[rng() % names.size()]};
        const ContextRef refs[] = {{"c", &ctx}};
        auto st = init_category(profile, refs);

        // oracle: Jaccard over raw record sets, max over profile keywords
        const auto records = ctx.to_records();
        std::map<std::string, std::set<std::string>> kr;
        for (const auto& r : records)
            for (const auto& k : r.keywords) kr[k].insert(r.id);
        for (const auto& k : names) {
            double expected = 0.0;
            for (const auto& u : profile) expected = std::max(expected, u == k ? 1.0 : oracle::jaccard(kr[u], kr[k]));
            CHECK(F(st, 0, k) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("profile validation") {
    auto ctx = keyword_context({"k", "k2"});
    const ContextRef refs[] = {{"c", &ctx}};
    CHECK_THROWS_AS(init_category(std::vector<std::string>{}, refs), std::invalid_argument);
    const std::vector<std::string> bad{"k", "nope", "zilch"};
    try {
        init_category(bad, refs);
        FAIL("expected NotFound");
    } catch (const NotFound& e) {
        CHECK(std::string(e.what()).find("nope, zilch") != std::string::npos);
    }
    CHECK_THROWS_AS(init_category(kProfileK, std::span<const ContextRef>{}), std::invalid_argument);

    // an empty history takes no part
    KnowledgeContext empty_history;
    const ContextRef with_history[] = {{"c", &ctx}, {"user:u", &empty_history, true}};
    CHECK(init_category(kProfileK, with_history).context_ids == std::vector<std::string>{"c"});
}

TEST_CASE("question selection") {
    TalkMineConfig cfg;
    auto agreed = manual_state({"k", "k2"}, {{1, 0.4}, {1, 0.4}});
    CHECK_FALSE(next_question(agreed, cfg));

    auto st = manual_state({"k", "k2", "k3"}, {{1, 0.4, 0.7}, {1, 0, 0}});
    st.resolved[0] = 1;
    auto q = next_question(st, cfg);
    REQUIRE(q);
    CHECK(q->keyword == "k3");
    CHECK(q->memberships == std::vector<std::pair<std::string, double>>{{"c1", 0.7}, {"c2", 0.0}});

    auto tie = manual_state({"a", "b"}, {{0.5, 0.5}, {0, 0}});
    CHECK(next_question(tie, cfg)->keyword == "a");

    cfg.question_budget = 0;
    CHECK_FALSE(next_question(st, cfg));

    // spread below threshold is not disputed
    auto mild = manual_state({"k2"}, {{0.5}, {0.35}});
    CHECK_FALSE(next_question(mild, TalkMineConfig{}));
}

TEST_CASE("low entropy ends the conversation") {
    auto st = manual_state({"a", "b", "c", "d", "e"}, {{1, 1, 1, 1, 0.7}, {1, 1, 1, 1, 0.4}});
    CHECK(fuzzy_entropy(st.blend) < 0.25);
    CHECK_FALSE(next_question(st, TalkMineConfig{}));
    CHECK(next_question(st, {.entropy_floor = 0.0}));

    const double half[] = {0.5, 0.5};
    CHECK(fuzzy_entropy(half) == doctest::Approx(1.0));
    const double crisp[] = {0.0, 1.0};
    CHECK(fuzzy_entropy(crisp) == 0.0);
}

TEST_CASE("answers take max or min over contexts") {
    auto st = manual_state({"k"}, {{0.7}, {0.0}});
    auto relevant = st;
    apply_answer(relevant, {"k", true});
    CHECK(B(relevant, "k") == 0.7);
    CHECK(relevant.questions_asked == 1);
    apply_answer(st, {"k", false});
    CHECK(B(st, "k") == 0.0);
    CHECK_THROWS_AS(apply_answer(st, {"k", true}), StateError);
    CHECK_THROWS_AS(apply_answer(st, {"zz", true}), NotFound);
}

TEST_CASE("history answers automatically when confident") {
    auto st = manual_state({"k", "m", "w"}, {{0.7, 0.1, 0.9}, {0.6, 0.05, 0.55}});
    st.history[1] = 1;
    TalkMineConfig cfg;
    auto a = try_auto_answer(st, "k", 1.0, cfg);
    REQUIRE(a);
    CHECK(a->relevant);
    CHECK(a->answered_by == AnsweredBy::history);
    CHECK_FALSE(try_auto_answer(st, "m", 1.0, cfg)->relevant);
    CHECK_FALSE(try_auto_answer(st, "k", 0.0, cfg));
    // confidence |2F - 1|: 0.9 for m, 0.1 for w
    CHECK(try_auto_answer(st, "m", 0.5, cfg));
    CHECK_FALSE(try_auto_answer(st, "w", 0.5, cfg));

    auto no_history = manual_state({"k"}, {{0.7}});
    CHECK_FALSE(try_auto_answer(no_history, "k", 1.0, cfg));
}

TEST_CASE("finalize rescales and floors") {
    TalkMineConfig cfg;
    auto one = manual_state({"k"}, {{0.5}});
    auto cat = finalize(one, cfg);
    REQUIRE(cat.entries.size() == 1);
    CHECK(cat.entries[0].membership == 1.0);
    CHECK(cat.entries[0].contexts == std::vector<std::string>{"c1"});

    auto st = manual_state({"a", "b", "c", "d"}, {{0.5, 0.002, 0.25, 0.4}, {0.5, 0.002, 0.0, 0.4}});
    st.resolved.assign(4, 1);
    cat = finalize(st, cfg);
    std::vector<std::string> kept;
    for (const auto& e : cat.entries) {
        kept.push_back(e.keyword);
        CHECK(e.membership == doctest::Approx(B(st, e.keyword) / 0.5));
    }
    CHECK(kept == std::vector<std::string>{"a", "c", "d"});
    CHECK(cat.membership("a") == 1.0);
    CHECK(cat.entries[1].contexts == std::vector<std::string>{"c1"});

    auto pending = manual_state({"k", "x"}, {{1, 0.5}, {1, 0.0}});
    CHECK_THROWS_AS(finalize(pending, cfg), StateError);
}

TEST_CASE("category file round trip") {
    FuzzyCategory cat;
    cat.entries.push_back({"GENETICS", 1.0, {"philbio", "sfi"}});
    cat.entries.push_back({"NOISE", 0.1 + 0.2, {}});
    std::ostringstream out;
    write_category(out, cat);
    CHECK(out.str() == "#cat 1\nGENETICS\t1\tphilbio,sfi\nNOISE\t0.30000000000000004\t\n");
    std::istringstream in(out.str());
    CHECK(parse_category(in) == cat);

    std::istringstream bad("#cat 1\nk\t1.5\tc\n");
    CHECK_THROWS_AS(parse_category(bad), ParseError);
    std::istringstream unsorted("#cat 1\nz\t1\t\na\t1\t\n");
    CHECK_THROWS_AS(parse_category(unsorted), ParseError);
}

TEST_CASE("record scoring") {
    std::vector<Record> recs{{"r1", {"k1", "k2"}, {}}, {"r2", {"k2"}, {}}, {"r3", {"k3"}, {}}, {"r4", {"k1"}, {}}};
    auto ctx = KnowledgeContext::build(recs, {.min_keyword_frequency = 1});

    auto only_k = recommend_records(category({{"k1", 1.0}}), ctx, 10);
    CHECK(only_k == std::vector<RecordScore>{{"r1", 1.0}, {"r4", 1.0}});

    auto two = recommend_records(category({{"k1", 1.0}, {"k2", 0.5}}), ctx, 10);
    REQUIRE(two.size() == 3);
    CHECK(two[0] == RecordScore{"r1", 1.0});
    CHECK(two[1].record == "r4");
    CHECK(two[1].score == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(two[2].record == "r2");
    CHECK(two[2].score == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(recommend_records(category({{"k1", 1.0}, {"k2", 0.5}}), ctx, 1).size() == 1);
    CHECK_THROWS_AS(recommend_records(FuzzyCategory{}, ctx, 5), std::invalid_argument);
}

TEST_CASE("record scoring matches brute force") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto records = oracle::random_corpus(rng, {.records = 30, .keywords = 12, .keyword_density = 0.25});
        auto ctx = KnowledgeContext::build(records, {.min_keyword_frequency = 1});
        std::vector<std::pair<std::string, double>> entries{{"k000", 1.0}, {"outside", 0.3}};
        for (std::size_t k = 1; k < 12; ++k)
            if (u(rng) < 0.4) entries.emplace_back(oracle::name("k", k), u(rng));
        const auto cat = category(entries);
        double total = 0.0;
        for (const auto& e : cat.entries) total += e.membership;

        std::vector<RecordScore> expected;
        for (const auto& r : records) {
            double s = 0.0;
            for (const auto& k : r.keywords) s += cat.membership(k);
            if (s > 0.0) expected.push_back({r.id, s / total});
        }
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            return a.score != b.score ? a.score > b.score : a.record < b.record;
        });
        auto got = recommend_records(cat, ctx, 1000);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].score == doctest::Approx(expected[i].score).epsilon(1e-12));
            CHECK(got[i].record == expected[i].record);
        }
    }
}

TEST_CASE("hebbian reinforcement") {
    auto ctx = keyword_context({"a", "b", "c", "x"});
    set_ksp(ctx, "a", "b", 0.5);
    set_ksp(ctx, "a", "c", 1.0);
    set_ksp(ctx, "a", "x", 0.1);
    const auto cat = category({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}});
    adapt(ctx, cat, 0.1, 0.02);
    CHECK(ksp(ctx, "a", "b") == doctest::Approx(0.55).epsilon(1e-15));
    CHECK(ksp(ctx, "b", "a") == ksp(ctx, "a", "b"));
    CHECK(ksp(ctx, "a", "c") == 1.0);
    CHECK(ksp(ctx, "b", "c") == doctest::Approx(0.1));  // created from nothing
    CHECK(ksp(ctx, "a", "x") == doctest::Approx(0.098));
    CHECK(ksp(ctx, "a", "a") == 1.0);

    double prev = ksp(ctx, "a", "b");
    for (int n = 0; n < 100; ++n) {
        adapt(ctx, cat, 0.1, 0.02);
        const double now = ksp(ctx, "a", "b");
        if (now < 1.0) CHECK(now > prev);
        CHECK(now <= 1.0);
        prev = now;
    }
    CHECK(prev > 0.9999);
    CHECK(ksp(ctx, "a", "x") == doctest::Approx(0.1 * std::pow(0.98, 101)).epsilon(1e-12));
    // x never co-occurs with b, so that pair is not touched
    CHECK(ksp(ctx, "b", "x") == 0.0);

    CHECK_THROWS_AS(adapt(ctx, cat, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(adapt(ctx, cat, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("adaptation keeps symmetry, range and the raw matrix") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto records = oracle::random_corpus(rng, {.records = 60, .keywords = 20, .keyword_density = 0.15});
    auto ctx = KnowledgeContext::build(records, {.min_keyword_frequency = 1});
    const auto raw = keyword_semantic_proximity(ctx);
    const auto& names = ctx.keywords().names();
    for (int cycle = 0; cycle < 30; ++cycle) {
        std::vector<std::pair<std::string, double>> entries;
        for (const auto& k : names)
            if (u(rng) < 0.3) entries.emplace_back(k, u(rng));
        entries.emplace_back("fresh" + std::to_string(cycle % 3), 1.0);
        const auto cat = category(entries);
        adapt(ctx, cat, 0.1, 0.02);
        propagate_keywords(ctx, cat, 0.1);
    }
    const auto& w = ctx.working_keyword_proximity();
    for (Index i = 0; i < w.dimension(); ++i)
        for (const auto& e : w.row(i)) {
            CHECK(e.value > 0.0);
            CHECK(e.value <= 1.0);
            CHECK(w.get(e.col, i) == e.value);
        }
    auto rederived = keyword_semantic_proximity(ctx);
    auto padded = raw;
    padded.resize(ctx.keyword_count());
    CHECK(rederived == padded);
    CHECK(ctx.keyword_frequency("fresh0") == 0);
}

TEST_CASE("keyword propagation") {
    auto ctx = keyword_context({"GENETICS", "NATURAL_SELECTION", "OTHER"});
    const auto cat = category({{"GENETICS", 1.0}, {"NATURAL_SELECTION", 0.5}, {"GENETIC_ALGORITHMS", 1.0}});
    auto added = propagate_keywords(ctx, cat, 0.1);
    CHECK(added == std::vector<std::string>{"GENETIC_ALGORITHMS"});
    const Index ga = ctx.keywords().at("GENETIC_ALGORITHMS");
    CHECK(ctx.is_propagated(ga));
    CHECK(ctx.incidence().row_size(ga) == 0);
    CHECK(ksp(ctx, "GENETIC_ALGORITHMS", "GENETICS") == doctest::Approx(0.1));
    CHECK(ksp(ctx, "NATURAL_SELECTION", "GENETIC_ALGORITHMS") == doctest::Approx(0.05));
    CHECK(ksp(ctx, "GENETIC_ALGORITHMS", "OTHER") == 0.0);

    const auto before = ctx;
    CHECK(propagate_keywords(ctx, cat, 0.1).empty());
    CHECK(ctx == before);

    // later categories strengthen the new keyword
    adapt(ctx, cat, 0.1, 0.02);
    CHECK(ksp(ctx, "GENETIC_ALGORITHMS", "GENETICS") == doctest::Approx(0.1 + 0.1 * 0.9));

    // a propagated keyword is self-member when used as a profile
    const ContextRef refs[] = {{"c", &ctx}};
    const std::vector<std::string> profile{"GENETIC_ALGORITHMS"};
    auto st = init_category(profile, refs);
    CHECK(F(st, 0, "GENETIC_ALGORITHMS") == 1.0);
    CHECK(F(st, 0, "GENETICS") == doctest::Approx(0.19));
}

TEST_CASE("every conversation terminates within the budget") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<std::string> kws;
        for (std::size_t i = 0; i < n; ++i) kws.push_back(oracle::name("k", i));
        std::vector<std::vector<double>> f(3, std::vector<double>(n));
        for (auto& row : f)
            for (auto& v : row) v = u(rng) < 0.5 ? 0.0 : u(rng);
        auto st = manual_state(kws, f);
        TalkMineConfig cfg;
        std::size_t asked = 0;
        while (auto q = next_question(st, cfg)) {
            apply_answer(st, {q->keyword, u(rng) < 0.5});
            ++asked;
            REQUIRE(asked <= cfg.question_budget);
        }
        auto cat = finalize(st, cfg);
        if (!cat.empty()) {
            double peak = 0.0;
            for (const auto& e : cat.entries) peak = std::max(peak, e.membership);
            CHECK(peak == 1.0);
        }
    }
}

}  // TEST_SUITE
