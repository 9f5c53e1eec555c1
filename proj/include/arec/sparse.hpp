#pragma once

#include "arec/interner.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace arec {

// Compressed sparse rows. An empty `values` array means every stored entry is 1
// (boolean relation).
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets{0};
    std::vector<Index> indices;
    std::vector<double> values;

    static CsrMatrix from_rows(std::size_t cols, const std::vector<std::vector<Index>>& rows);

    std::span<const Index> row(std::size_t r) const {
        return {indices.data() + offsets[r], offsets[r + 1] - offsets[r]};
    }
    std::size_t row_size(std::size_t r) const { return offsets[r + 1] - offsets[r]; }
    double value_at(std::size_t k) const { return values.empty() ? 1.0 : values[k]; }
    std::size_t nonzeros() const { return indices.size(); }
    bool is_boolean() const { return values.empty(); }

    bool contains(std::size_t r, Index c) const;
    CsrMatrix transposed() const;
    void append_empty_row();

    friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

enum class ProximityKind { inwards, outwards, keyword_semantic, record_semantic, structural, traversal, composite };

std::string_view to_string(ProximityKind kind);
ProximityKind proximity_kind_from_string(std::string_view s);

struct ProximityEntry {
    Index col;
    double value;
    friend bool operator==(const ProximityEntry&, const ProximityEntry&) = default;
};

// Sparse square matrix of pairwise strengths. Symmetric kinds store both (i,j)
// and (j,i) so rows can be scanned directly; set() keeps the mirror in sync.
// Traversal proximity is the only directed kind. Absent entries read as 0.
class SparseProximity {
public:
    SparseProximity() = default;
    SparseProximity(std::size_t dimension, ProximityKind kind);

    std::size_t dimension() const { return rows_.size(); }
    ProximityKind kind() const { return kind_; }
    bool symmetric() const { return kind_ != ProximityKind::traversal; }

    double get(Index i, Index j) const;
    // Writes (i,j), and (j,i) for symmetric kinds. A value of 0 erases.
    void set(Index i, Index j, double value);
    // Writes only (i,j) regardless of kind; for bulk builders that emit both halves.
    void set_directed(Index i, Index j, double value);

    std::span<const ProximityEntry> row(Index i) const { return rows_.at(i); }
    std::size_t nonzeros() const;
    void resize(std::size_t dimension);

    // Replaces row i wholesale; entries must be sorted by column and nonzero.
    void assign_row(Index i, std::vector<ProximityEntry> entries);

    friend bool operator==(const SparseProximity&, const SparseProximity&) = default;

private:
    std::vector<std::vector<ProximityEntry>> rows_;
    ProximityKind kind_ = ProximityKind::composite;
};

}  // namespace arec
