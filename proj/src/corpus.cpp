#include "arec/corpus.hpp"

#include "arec/errors.hpp"
#include "arec/proximity.hpp"
#include "arec/stemmer.hpp"
#include "arec/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

namespace arec {

bool is_valid_identifier(std::string_view id) {
    if (id.empty()) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
               c == '.' || c == ':' || c == '-';
    });
}

namespace {

std::vector<std::string> parse_id_list(std::string_view field, std::size_t line, const char* what) {
    std::vector<std::string> out;
    if (field.empty()) return out;
    for (auto item : text::split(field, ',')) {
        if (!is_valid_identifier(item))
            throw ParseError(line, std::string("invalid ") + what + " identifier '" + std::string(item) + "'");
        out.emplace_back(item);
    }
    return out;
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<Record> parse_record_file(std::istream& in) {
    std::vector<Record> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        text::strip_cr(line);
        if (!header_seen) {
            if (line != kRecordFileHeader)
                throw ParseError(line_no, "expected header '" + std::string(kRecordFileHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = text::split(line, '\t');
        if (fields.size() != 3)
            throw ParseError(line_no, "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
        if (!is_valid_identifier(fields[0]))
            throw ParseError(line_no, "invalid record identifier '" + std::string(fields[0]) + "'");
        Record r;
        r.id = std::string(fields[0]);
        if (!seen.insert(r.id).second) throw ParseError(line_no, "duplicate record id '" + r.id + "'");
        r.keywords = parse_id_list(fields[1], line_no, "keyword");
        r.citations = parse_id_list(fields[2], line_no, "citation");
        records.push_back(std::move(r));
    }
    if (!header_seen) throw ParseError(0, "empty record file");
    if (records.empty()) throw ParseError(0, "record file contains no records");
    return records;
}

void write_record_file(std::ostream& out, std::span<const Record> records) {
    out << kRecordFileHeader << '\n';
    for (const auto& r : records) {
        out << r.id << '\t';
        for (std::size_t i = 0; i < r.keywords.size(); ++i) out << (i ? "," : "") << r.keywords[i];
        out << '\t';
        for (std::size_t i = 0; i < r.citations.size(); ++i) out << (i ? "," : "") << r.citations[i];
        out << '\n';
    }
}

KnowledgeContext KnowledgeContext::build(std::vector<Record> records, const IngestOptions& options) {
    if (records.empty()) throw std::invalid_argument("a knowledge context needs at least one record");
    if (options.min_keyword_frequency < 1) throw std::invalid_argument("min_keyword_frequency must be >= 1");

    std::set<std::string_view> ids;
    for (auto& r : records) {
        if (!ids.insert(r.id).second) throw std::invalid_argument("duplicate record id '" + r.id + "'");
        if (options.stem)
            for (auto& k : r.keywords) k = stem_keyword(k);
        sort_unique(r.keywords);
        sort_unique(r.citations);
    }

    std::map<std::string, std::size_t> frequency;
    for (const auto& r : records)
        for (const auto& k : r.keywords) ++frequency[k];

    KnowledgeContext ctx;
    std::vector<std::string> kept;
    for (const auto& [k, f] : frequency)
        if (f >= options.min_keyword_frequency) kept.push_back(k);
    ctx.keywords_ = Interner::sorted(std::move(kept));

    std::vector<std::string> record_ids;
    record_ids.reserve(records.size());
    for (const auto& r : records) record_ids.push_back(r.id);
    ctx.records_ = Interner::sorted(record_ids);

    std::vector<std::string> cited_ids;
    for (const auto& r : records) cited_ids.insert(cited_ids.end(), r.citations.begin(), r.citations.end());
    sort_unique(cited_ids);
    const std::unordered_set<std::string_view> cited_set(cited_ids.begin(), cited_ids.end());

    std::vector<std::string> document_ids = cited_ids;
    for (const auto& r : records)
        if (!r.citations.empty() || cited_set.count(r.id)) document_ids.push_back(r.id);
    ctx.documents_ = Interner::sorted(std::move(document_ids));

    std::vector<std::string> universe_ids = cited_ids;
    universe_ids.insert(universe_ids.end(), record_ids.begin(), record_ids.end());
    ctx.universe_ = Interner::sorted(std::move(universe_ids));

    const std::size_t m = ctx.records_.size();
    const std::size_t p = ctx.documents_.size();

    ctx.record_to_document_.assign(m, npos);
    ctx.record_to_universe_.assign(m, npos);
    ctx.document_to_record_.assign(p, npos);
    ctx.document_to_universe_.assign(p, npos);
    ctx.universe_to_record_.assign(ctx.universe_.size(), npos);
    for (Index r = 0; r < m; ++r) {
        const auto& name = ctx.records_.name(r);
        if (auto d = ctx.documents_.find(name)) {
            ctx.record_to_document_[r] = *d;
            ctx.document_to_record_[*d] = r;
            ctx.citing_records_.push_back(r);
        }
        const Index u = ctx.universe_.at(name);
        ctx.record_to_universe_[r] = u;
        ctx.universe_to_record_[u] = r;
    }
    for (Index d = 0; d < p; ++d) ctx.document_to_universe_[d] = ctx.universe_.at(ctx.documents_.name(d));
    for (const auto& s : cited_ids) ctx.cited_.push_back(ctx.documents_.at(s));

    std::vector<std::vector<Index>> kw_rows(m);
    std::vector<std::vector<Index>> cite_rows(p);
    for (const auto& r : records) {
        const Index ri = ctx.records_.at(r.id);
        for (const auto& k : r.keywords)
            if (auto ki = ctx.keywords_.find(k)) kw_rows[ri].push_back(*ki);
        if (!r.citations.empty()) {
            auto& row = cite_rows[ctx.record_to_document_[ri]];
            for (const auto& c : r.citations) row.push_back(ctx.documents_.at(c));
        }
    }
    ctx.keywords_by_record_ = CsrMatrix::from_rows(ctx.keywords_.size(), kw_rows);
    ctx.incidence_ = ctx.keywords_by_record_.transposed();
    ctx.citation_ = CsrMatrix::from_rows(p, cite_rows);
    ctx.cited_by_ = ctx.citation_.transposed();

    ctx.working_ksp_ = keyword_semantic_proximity(ctx);
    ctx.traversal_ = SparseProximity(p, ProximityKind::traversal);
    return ctx;
}

std::size_t KnowledgeContext::keyword_frequency(std::string_view keyword) const {
    const auto k = keywords_.find(keyword);
    if (!k) throw NotFound("unknown keyword '" + std::string(keyword) + "'");
    return incidence_.row_size(*k);
}

Index KnowledgeContext::add_keyword(std::string_view keyword) {
    if (auto k = keywords_.find(keyword)) return *k;
    if (!is_valid_identifier(keyword)) throw std::invalid_argument("invalid keyword identifier '" + std::string(keyword) + "'");
    const Index k = keywords_.intern(keyword);
    incidence_.append_empty_row();
    keywords_by_record_.cols = keywords_.size();
    working_ksp_.resize(keywords_.size());
    return k;
}

void KnowledgeContext::set_traversal(SparseProximity t) {
    if (t.dimension() != documents_.size() || t.kind() != ProximityKind::traversal)
        throw std::invalid_argument("traversal proximity must be a p x p traversal matrix");
    traversal_ = std::move(t);
}

std::vector<Record> KnowledgeContext::to_records() const {
    std::vector<Record> out;
    out.reserve(records_.size());
    for (Index r = 0; r < records_.size(); ++r) {
        Record rec;
        rec.id = records_.name(r);
        for (Index k : keywords_by_record_.row(r)) rec.keywords.push_back(keywords_.name(k));
        if (const Index d = record_to_document_[r]; d != npos)
            for (Index c : citation_.row(d)) rec.citations.push_back(documents_.name(c));
        out.push_back(std::move(rec));
    }
    return out;
}

KnowledgeContext ingest(std::istream& in, const IngestOptions& options) {
    return KnowledgeContext::build(parse_record_file(in), options);
}

KnowledgeContext ingest(const std::filesystem::path& record_file, const IngestOptions& options) {
    std::ifstream in(record_file);
    if (!in) throw NotFound("cannot open record file " + record_file.string());
    return ingest(in, options);
}

}  // namespace arec
