#pragma once

#include "arec/interner.hpp"
#include "arec/sparse.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace arec {

// One line of a record file: a record, the keywords qualifying it and the
// documents it cites (which need not be records themselves).
struct Record {
    std::string id;
    std::vector<std::string> keywords;
    std::vector<std::string> citations;

    friend bool operator==(const Record&, const Record&) = default;
};

struct IngestOptions {
    std::size_t min_keyword_frequency = 2;
    bool stem = false;
};

inline constexpr std::string_view kRecordFileHeader = "#krc 1";

bool is_valid_identifier(std::string_view id);

// Parses Record File Format v1. Throws ParseError (with line number) on a bad
// header, a malformed line, an invalid identifier, a duplicate record id, or a
// file without records. Blank lines are skipped and a trailing '\r' is ignored.
std::vector<Record> parse_record_file(std::istream& in);
void write_record_file(std::ostream& out, std::span<const Record> records);

// The relational substrate of one information resource.
//
//   R  records (m)            K  keywords (n)
//   S  cited documents (o)    R' records taking part in a citation, either direction
//   D  = R' u S (p)           U  = R u S, the index space of composite networks
//
// A is n x m (keyword -> records); C is p x p (citing -> cited). Indices of R, K,
// S, D and U are assigned in lexicographic order of the identifiers; keywords
// added later by propagation are appended after the ingested ones.
class KnowledgeContext {
public:
    static constexpr Index npos = static_cast<Index>(-1);

    KnowledgeContext() = default;

    // Builds the context from parsed records. Keywords are stemmed first when
    // requested, then those qualifying fewer than min_keyword_frequency records
    // are dropped.
    static KnowledgeContext build(std::vector<Record> records, const IngestOptions& options = {});

    const Interner& records() const { return records_; }
    const Interner& keywords() const { return keywords_; }
    const Interner& documents() const { return documents_; }
    const Interner& universe() const { return universe_; }

    std::size_t record_count() const { return records_.size(); }
    std::size_t keyword_count() const { return keywords_.size(); }
    std::size_t document_count() const { return documents_.size(); }
    std::size_t cited_count() const { return cited_.size(); }

    const CsrMatrix& incidence() const { return incidence_; }
    const CsrMatrix& keywords_by_record() const { return keywords_by_record_; }
    const CsrMatrix& citation() const { return citation_; }
    const CsrMatrix& cited_by() const { return cited_by_; }

    // S and R' as sorted index lists (into D and R respectively).
    std::span<const Index> cited() const { return cited_; }
    std::span<const Index> citing_records() const { return citing_records_; }

    Index record_document(Index r) const { return record_to_document_.at(r); }
    Index document_record(Index d) const { return document_to_record_.at(d); }
    Index record_universe(Index r) const { return record_to_universe_.at(r); }
    Index document_universe(Index d) const { return document_to_universe_.at(d); }
    std::span<const Index> record_to_universe() const { return record_to_universe_; }
    std::span<const Index> document_to_universe() const { return document_to_universe_; }
    Index universe_record(Index u) const { return universe_to_record_.at(u); }

    // N(k): number of records keyword k qualifies. Throws NotFound for unknown keywords.
    std::size_t keyword_frequency(std::string_view keyword) const;

    // Adds a keyword that qualifies no records (knowledge propagation). Returns
    // its index; a no-op returning the existing index when already present.
    Index add_keyword(std::string_view keyword);
    bool is_propagated(Index k) const { return incidence_.row_size(k) == 0; }

    // Learned state layered over the raw relations. The working keyword
    // proximity starts equal to the keyword semantic proximity and is changed
    // only by adaptation; traversal proximity is p x p and starts empty.
    const SparseProximity& working_keyword_proximity() const { return working_ksp_; }
    SparseProximity& working_keyword_proximity() { return working_ksp_; }
    const SparseProximity& traversal() const { return traversal_; }
    void set_traversal(SparseProximity t);

    // Records as they exist in the context after stemming and frequency filtering.
    std::vector<Record> to_records() const;

    friend bool operator==(const KnowledgeContext&, const KnowledgeContext&) = default;

private:
    Interner records_;
    Interner keywords_;
    Interner documents_;
    Interner universe_;
    CsrMatrix incidence_;
    CsrMatrix keywords_by_record_;
    CsrMatrix citation_;
    CsrMatrix cited_by_;
    std::vector<Index> cited_;
    std::vector<Index> citing_records_;
    std::vector<Index> record_to_document_;
    std::vector<Index> document_to_record_;
    std::vector<Index> record_to_universe_;
    std::vector<Index> document_to_universe_;
    std::vector<Index> universe_to_record_;
    SparseProximity working_ksp_;
    SparseProximity traversal_;
};

KnowledgeContext ingest(std::istream& in, const IngestOptions& options = {});
KnowledgeContext ingest(const std::filesystem::path& record_file, const IngestOptions& options = {});

}  // namespace arec
