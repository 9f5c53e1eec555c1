#include "arec/sparse.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace arec {

CsrMatrix CsrMatrix::from_rows(std::size_t cols, const std::vector<std::vector<Index>>& rows) {
    CsrMatrix m;
    m.rows = rows.size();
    m.cols = cols;
    m.offsets.reserve(rows.size() + 1);
    for (const auto& r : rows) {
        std::vector<Index> sorted = r;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (Index c : sorted) {
            if (c >= cols) throw std::out_of_range("column index out of range");
            m.indices.push_back(c);
        }
        m.offsets.push_back(m.indices.size());
    }
    return m;
}

bool CsrMatrix::contains(std::size_t r, Index c) const {
    auto rr = row(r);
    return std::binary_search(rr.begin(), rr.end(), c);
}

CsrMatrix CsrMatrix::transposed() const {
    CsrMatrix t;
    t.rows = cols;
    t.cols = rows;
    std::vector<std::size_t> counts(cols + 1, 0);
    for (Index c : indices) ++counts[c + 1];
    for (std::size_t i = 1; i <= cols; ++i) counts[i] += counts[i - 1];
    t.offsets = counts;
    t.indices.resize(indices.size());
    if (!values.empty()) t.values.resize(values.size());
    std::vector<std::size_t> cursor(counts.begin(), counts.end() - 1);
    // Rows are visited in ascending order, so each transposed row comes out sorted.
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
            const std::size_t dst = cursor[indices[k]]++;
            t.indices[dst] = static_cast<Index>(r);
            if (!values.empty()) t.values[dst] = values[k];
        }
    }
    return t;
}

void CsrMatrix::append_empty_row() {
    ++rows;
    offsets.push_back(indices.size());
}

std::string_view to_string(ProximityKind kind) {
    switch (kind) {
        case ProximityKind::inwards: return "inwards";
        case ProximityKind::outwards: return "outwards";
        case ProximityKind::keyword_semantic: return "keyword_semantic";
        case ProximityKind::record_semantic: return "record_semantic";
        case ProximityKind::structural: return "structural";
        case ProximityKind::traversal: return "traversal";
        case ProximityKind::composite: return "composite";
    }
    return "composite";
}

ProximityKind proximity_kind_from_string(std::string_view s) {
    for (auto k : {ProximityKind::inwards, ProximityKind::outwards, ProximityKind::keyword_semantic,
                   ProximityKind::record_semantic, ProximityKind::structural, ProximityKind::traversal,
                   ProximityKind::composite}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown proximity kind '" + std::string(s) + "'");
}

SparseProximity::SparseProximity(std::size_t dimension, ProximityKind kind) : rows_(dimension), kind_(kind) {}

namespace {

template <typename Row>
auto find_col(Row& row, Index j) {
    return std::lower_bound(row.begin(), row.end(), j,
                            [](const ProximityEntry& e, Index c) { return e.col < c; });
}

}  // namespace

double SparseProximity::get(Index i, Index j) const {
    const auto& r = rows_.at(i);
    auto it = find_col(r, j);
    return (it != r.end() && it->col == j) ? it->value : 0.0;
}

void SparseProximity::set_directed(Index i, Index j, double value) {
    if (j >= rows_.size()) throw std::out_of_range("proximity column out of range");
    auto& r = rows_.at(i);
    auto it = find_col(r, j);
    const bool present = it != r.end() && it->col == j;
    if (value == 0.0) {
        if (present) r.erase(it);
    } else if (present) {
        it->value = value;
    } else {
        r.insert(it, ProximityEntry{j, value});
    }
}

void SparseProximity::set(Index i, Index j, double value) {
    set_directed(i, j, value);
    if (symmetric() && i != j) set_directed(j, i, value);
}

std::size_t SparseProximity::nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
}

void SparseProximity::resize(std::size_t dimension) {
    if (dimension < rows_.size()) {
        for (auto& r : rows_) {
            auto it = find_col(r, static_cast<Index>(dimension));
            r.erase(it, r.end());
        }
    }
    rows_.resize(dimension);
}

void SparseProximity::assign_row(Index i, std::vector<ProximityEntry> entries) {
    rows_.at(i) = std::move(entries);
}

}  // namespace arec
