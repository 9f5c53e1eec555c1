#pragma once

#include "arec/corpus.hpp"
#include "arec/sparse.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace arec {

// Jaccard proximity between the rows of `sets` (item -> members), computed by
// walking the inverted lists in `members` (= sets transposed) so that cost is
// proportional to the number of co-occurrences rather than items^2.
// Pairs with an empty union are left absent (proximity 0), including the
// diagonal of items with empty sets.
SparseProximity jaccard_proximity(const CsrMatrix& sets, const CsrMatrix& members, ProximityKind kind);

// Co-citation: overlap of the ancestor (citing document) sets.
SparseProximity inwards_proximity(const KnowledgeContext& ctx);
// Bibliographic coupling: overlap of the descendant (cited document) sets.
SparseProximity outwards_proximity(const KnowledgeContext& ctx);
// Overlap of the record sets two keywords qualify.
SparseProximity keyword_semantic_proximity(const KnowledgeContext& ctx);
// Overlap of the keyword sets qualifying two records.
SparseProximity record_semantic_proximity(const KnowledgeContext& ctx);

// lambda * inwards + (1 - lambda) * outwards, entrywise.
SparseProximity combine_structural(const SparseProximity& inwards, const SparseProximity& outwards,
                                   double lambda = 0.5);

struct Neighbor {
    Index node;
    double proximity;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Neighborhood {
    Index center;
    double threshold;
    std::vector<Neighbor> members;  // proximity > threshold, descending, ties by index
};

Neighborhood neighborhood(const SparseProximity& p, Index node, double alpha);

struct HitsOptions {
    std::size_t max_iterations = 200;
    double tolerance = 1e-8;
};

struct HitsResult {
    std::vector<double> authority;
    std::vector<double> hub;
    std::size_t iterations = 0;
    bool converged = false;
};

// Hubs and authorities by power iteration: authority <- L^T hub, hub <- L authority,
// each L2-normalized per step. `links` may be weighted; throws std::invalid_argument
// when it has no nonzero entry.
HitsResult hits_rank(const CsrMatrix& links, const HitsOptions& options = {});
HitsResult hits_rank(const KnowledgeContext& ctx, const HitsOptions& options = {});

// Distance used for metric diagnostics: 1/p - 1, so p = 1 maps to 0 and p -> 0 to infinity.
double proximity_to_distance(double p);

// direct distance / shortest-path distance between i and j over the network
// (values > 1 flag a pair violating the triangle inequality). Infinity when
// there is no direct link but a path exists; nullopt when neither exists.
std::optional<double> semi_metric_ratio(const SparseProximity& p, Index i, Index j);

// Re-indexes a proximity into a larger index space through a monotone map
// (e.g. documents or records into the context universe).
SparseProximity lift(const SparseProximity& p, std::span<const Index> index_map, std::size_t dimension);

inline constexpr std::string_view kProximityFileHeader = "#prox 1";

// `#prox 1` then `i<TAB>j<TAB>value`. Symmetric kinds write i<j only unless
// include_diagonal, in which case i<=j; directed kinds write every entry.
void write_proximity(std::ostream& out, const SparseProximity& p, bool include_diagonal = false);
// Dimension is max index + 1 unless `dimension` is larger. Throws ParseError.
SparseProximity read_proximity(std::istream& in, ProximityKind kind, std::size_t dimension = 0);

}  // namespace arec
