#include "arec/corpus.hpp"
#include "arec/errors.hpp"
#include "arec/stemmer.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <sstream>

using namespace arec;

namespace {

KnowledgeContext from_text(const std::string& text, IngestOptions opts = {}) {
    std::istringstream in(text);
    return ingest(in, opts);
}

const char* kThreeRecords =
    "#krc 1\n"
    "r1\tk1,k2\ts1\n"
    "r2\tk2\tr1\n"
    "r3\tk3\t\n";

std::vector<std::string> names_of(const Interner& in, std::span<const Index> idx) {
    std::vector<std::string> out;
    for (Index i : idx) out.push_back(in.name(i));
    return out;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("set construction on the three-record example") {
    auto ctx = from_text(kThreeRecords, {.min_keyword_frequency = 1});
    CHECK(ctx.record_count() == 3);
    CHECK(ctx.keyword_count() == 3);
    CHECK(names_of(ctx.records(), ctx.citing_records()) == std::vector<std::string>{"r1", "r2"});
    CHECK(names_of(ctx.documents(), ctx.cited()) == std::vector<std::string>{"r1", "s1"});
    CHECK(ctx.documents().names() == std::vector<std::string>{"r1", "r2", "s1"});
    CHECK(ctx.document_count() == 3);
    CHECK(ctx.universe().names() == std::vector<std::string>{"r1", "r2", "r3", "s1"});

    const auto r1 = ctx.documents().at("r1"), r2 = ctx.documents().at("r2"), s1 = ctx.documents().at("s1");
    CHECK(ctx.citation().contains(r1, s1));
    CHECK(ctx.citation().contains(r2, r1));
    CHECK_FALSE(ctx.citation().contains(r1, r2));
    CHECK(ctx.citation().nonzeros() == 2);
    CHECK(ctx.record_document(ctx.records().at("r3")) == KnowledgeContext::npos);
}

TEST_CASE("frequency floor drops rare keywords") {
    auto ctx = from_text(kThreeRecords);
    CHECK(ctx.keywords().names() == std::vector<std::string>{"k2"});
    CHECK(ctx.keyword_frequency("k2") == 2);
    CHECK_THROWS_AS(ctx.keyword_frequency("k1"), NotFound);
}

TEST_CASE("keyword qualifying every record has frequency m") {
    auto ctx = from_text("#krc 1\na\tall\t\nb\tall,x\t\nc\tall\t\n");
    CHECK(ctx.keyword_frequency("all") == 3);
}

TEST_CASE("keyword frequency matches a rescan of the file") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const auto records = oracle::random_corpus(rng, {.records = 50, .keywords = 30});
        const auto text = oracle::to_record_text(records);
        auto ctx = from_text(text, {.min_keyword_frequency = 1});
        const auto scan = oracle::rescan_keyword_records(text);
        CHECK(scan.size() == ctx.keyword_count());
        for (const auto& [k, recs] : scan) CHECK(ctx.keyword_frequency(k) == recs.size());
        // column sums are per-record keyword counts
        for (const auto& r : records)
            CHECK(ctx.keywords_by_record().row_size(ctx.records().at(r.id)) == r.keywords.size());
        CHECK(ctx.document_count() <= ctx.citing_records().size() + ctx.cited_count());
    }
}

TEST_CASE("malformed input is rejected with a line number") {
    auto line_of = [](const std::string& text) -> std::size_t {
        try {
            from_text(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 999;
    };
    CHECK(line_of("") == 0);
    CHECK(line_of("#krc 1\n") == 0);
    CHECK(line_of("#krc 2\nr\t\t\n") == 1);
    CHECK(line_of("#krc 1\nr1\tk\t\nr2\tk\n") == 3);
    CHECK(line_of("#krc 1\nr1\tk\t\nr1\tk\t\n") == 3);
    CHECK(line_of("#krc 1\nr1\tk k\t\n") == 2);
    CHECK(line_of("#krc 1\nr1\tk,,j\t\n") == 2);
    CHECK(line_of("#krc 1\nr/1\tk\t\n") == 2);
}

TEST_CASE("empty keyword and citation fields are allowed; CRLF tolerated") {
    auto ctx = from_text("#krc 1\r\nlonely\t\t\r\nother\ta\tlonely\r\n", {.min_keyword_frequency = 1});
    CHECK(ctx.record_count() == 2);
    CHECK(ctx.document_count() == 2);
}

TEST_CASE("ingestion is deterministic and round-trips through the record writer") {
    std::mt19937_64 rng(3);
    const auto records = oracle::random_corpus(rng, {.records = 40});
    auto a = from_text(oracle::to_record_text(records));
    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto b = from_text(oracle::to_record_text(shuffled));
    CHECK(a == b);

    auto c = KnowledgeContext::build(a.to_records(), {.min_keyword_frequency = 1});
    CHECK(c == a);
}

TEST_CASE("propagated keywords get an empty incidence row") {
    auto ctx = from_text(kThreeRecords, {.min_keyword_frequency = 1});
    const Index k = ctx.add_keyword("novel");
    CHECK(k == 3);
    CHECK(ctx.is_propagated(k));
    CHECK(ctx.keyword_frequency("novel") == 0);
    CHECK(ctx.working_keyword_proximity().dimension() == 4);
    CHECK(ctx.add_keyword("novel") == k);
    CHECK(ctx.add_keyword("k1") == 0);
}

TEST_CASE("Porter stemming") {
    CHECK(porter_stem("studies") == "studi");
    CHECK(porter_stem("activation") == "activ");
    CHECK(porter_stem("expression") == "express");
    CHECK(porter_stem("proteins") == "protein");
    CHECK(porter_stem("cells") == "cell");
    CHECK(porter_stem("models") == "model");
    CHECK(porter_stem("patients") == "patient");
    CHECK(porter_stem("caresses") == "caress");
    CHECK(porter_stem("hopping") == "hop");
    CHECK(porter_stem("relational") == "relat");
    CHECK(porter_stem("generalization") == "gener");
    CHECK(porter_stem("is") == "is");
    CHECK(stem_keyword("Genetic_Algorithms") == "genet_algorithm");
}

TEST_CASE("stemming merges keyword variants before the frequency floor") {
    auto ctx = from_text("#krc 1\na\tcells\t\nb\tcell\t\n", {.min_keyword_frequency = 2, .stem = true});
    CHECK(ctx.keywords().names() == std::vector<std::string>{"cell"});
}

}  // TEST_SUITE
