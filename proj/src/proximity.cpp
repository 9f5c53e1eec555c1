#include "arec/proximity.hpp"

#include "arec/errors.hpp"
#include "arec/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace arec {

SparseProximity jaccard_proximity(const CsrMatrix& sets, const CsrMatrix& members, ProximityKind kind) {
    if (members.rows != sets.cols || members.cols != sets.rows)
        throw std::invalid_argument("jaccard_proximity: members must be the transpose of sets");
    const std::size_t n = sets.rows;
    std::vector<std::vector<ProximityEntry>> rows(n);
    std::vector<std::size_t> shared(n, 0);
    std::vector<Index> touched;

    for (Index i = 0; i < n; ++i) {
        touched.clear();
        for (Index x : sets.row(i)) {
            for (Index j : members.row(x)) {
                if (j < i) continue;
                if (shared[j]++ == 0) touched.push_back(j);
            }
        }
        std::sort(touched.begin(), touched.end());
        const auto size_i = static_cast<double>(sets.row_size(i));
        for (Index j : touched) {
            const auto both = static_cast<double>(shared[j]);
            const double value = both / (size_i + static_cast<double>(sets.row_size(j)) - both);
            shared[j] = 0;
            rows[i].push_back({j, value});
            if (j != i) rows[j].push_back({i, value});
        }
    }

    SparseProximity out(n, kind);
    for (Index i = 0; i < n; ++i) out.assign_row(i, std::move(rows[i]));
    return out;
}

SparseProximity inwards_proximity(const KnowledgeContext& ctx) {
    // ancestors of d = column d of C = row d of C^T
    return jaccard_proximity(ctx.cited_by(), ctx.citation(), ProximityKind::inwards);
}

SparseProximity outwards_proximity(const KnowledgeContext& ctx) {
    return jaccard_proximity(ctx.citation(), ctx.cited_by(), ProximityKind::outwards);
}

SparseProximity keyword_semantic_proximity(const KnowledgeContext& ctx) {
    return jaccard_proximity(ctx.incidence(), ctx.keywords_by_record(), ProximityKind::keyword_semantic);
}

SparseProximity record_semantic_proximity(const KnowledgeContext& ctx) {
    return jaccard_proximity(ctx.keywords_by_record(), ctx.incidence(), ProximityKind::record_semantic);
}

SparseProximity combine_structural(const SparseProximity& inwards, const SparseProximity& outwards, double lambda) {
    if (inwards.dimension() != outwards.dimension())
        throw std::invalid_argument("combine_structural: dimension mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("combine_structural: lambda must be in [0,1]");
    SparseProximity out(inwards.dimension(), ProximityKind::structural);
    for (Index i = 0; i < inwards.dimension(); ++i) {
        auto a = inwards.row(i);
        auto b = outwards.row(i);
        std::vector<ProximityEntry> merged;
        merged.reserve(a.size() + b.size());
        std::size_t ia = 0, ib = 0;
        while (ia < a.size() || ib < b.size()) {
            Index col;
            double va = 0.0, vb = 0.0;
            if (ib == b.size() || (ia < a.size() && a[ia].col < b[ib].col)) {
                col = a[ia].col;
                va = a[ia++].value;
            } else if (ia == a.size() || b[ib].col < a[ia].col) {
                col = b[ib].col;
                vb = b[ib++].value;
            } else {
                col = a[ia].col;
                va = a[ia++].value;
                vb = b[ib++].value;
            }
            const double v = std::clamp(lambda * va + (1.0 - lambda) * vb, 0.0, 1.0);
            if (v > 0.0) merged.push_back({col, v});
        }
        out.assign_row(i, std::move(merged));
    }
    return out;
}

Neighborhood neighborhood(const SparseProximity& p, Index node, double alpha) {
    if (node >= p.dimension()) throw NotFound("neighborhood: node " + std::to_string(node) + " out of range");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("neighborhood: alpha must be in [0,1]");
    Neighborhood nb{node, alpha, {}};
    for (const auto& e : p.row(node))
        if (e.col != node && e.value > alpha) nb.members.push_back({e.col, e.value});
    std::sort(nb.members.begin(), nb.members.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.proximity != b.proximity ? a.proximity > b.proximity : a.node < b.node;
    });
    return nb;
}

namespace {

double normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return norm;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

HitsResult hits_rank(const CsrMatrix& links, const HitsOptions& options) {
    if (links.rows != links.cols) throw std::invalid_argument("hits_rank: link matrix must be square");
    bool any = false;
    for (std::size_t k = 0; k < links.nonzeros() && !any; ++k) any = links.value_at(k) != 0.0;
    if (!any) throw std::invalid_argument("hits_rank: link matrix has no nonzero entry");

    const std::size_t n = links.rows;
    HitsResult res;
    res.hub.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
    res.authority.assign(n, 0.0);
    std::vector<double> next_auth(n), next_hub(n);

    for (res.iterations = 1; res.iterations <= options.max_iterations; ++res.iterations) {
        std::fill(next_auth.begin(), next_auth.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = links.offsets[i]; k < links.offsets[i + 1]; ++k)
                next_auth[links.indices[k]] += links.value_at(k) * res.hub[i];
        normalize(next_auth);

        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = links.offsets[i]; k < links.offsets[i + 1]; ++k)
                s += links.value_at(k) * next_auth[links.indices[k]];
            next_hub[i] = s;
        }
        normalize(next_hub);

        const double change = std::max(max_abs_diff(next_auth, res.authority), max_abs_diff(next_hub, res.hub));
        res.authority.swap(next_auth);
        res.hub.swap(next_hub);
        if (change < options.tolerance) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) res.iterations = options.max_iterations;
    return res;
}

HitsResult hits_rank(const KnowledgeContext& ctx, const HitsOptions& options) {
    return hits_rank(ctx.citation(), options);
}

double proximity_to_distance(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("proximity_to_distance: p must be in (0,1]");
    return 1.0 / p - 1.0;
}

std::optional<double> semi_metric_ratio(const SparseProximity& p, Index i, Index j) {
    const std::size_t n = p.dimension();
    if (i >= n || j >= n) throw NotFound("semi_metric_ratio: node out of range");
    if (i == j) return 1.0;

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[i] = 0.0;
    queue.push({0.0, i});
    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u == j) break;
        for (const auto& e : p.row(u)) {
            if (e.col == u || e.value <= 0.0) continue;
            const double nd = d + proximity_to_distance(std::min(e.value, 1.0));
            if (nd < dist[e.col]) {
                dist[e.col] = nd;
                queue.push({nd, e.col});
            }
        }
    }

    const double direct_p = p.get(i, j);
    const double shortest = dist[j];
    if (direct_p <= 0.0) {
        if (shortest == inf) return std::nullopt;
        return inf;
    }
    const double direct = proximity_to_distance(std::min(direct_p, 1.0));
    if (direct == 0.0) return 1.0;
    if (shortest == 0.0) return inf;
    return direct / shortest;
}

SparseProximity lift(const SparseProximity& p, std::span<const Index> index_map, std::size_t dimension) {
    if (index_map.size() != p.dimension()) throw std::invalid_argument("lift: index map size mismatch");
    SparseProximity out(dimension, p.kind());
    for (Index i = 0; i < p.dimension(); ++i) {
        std::vector<ProximityEntry> row;
        row.reserve(p.row(i).size());
        for (const auto& e : p.row(i)) row.push_back({index_map[e.col], e.value});
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.col < b.col; });
        out.assign_row(index_map[i], std::move(row));
    }
    return out;
}

void write_proximity(std::ostream& out, const SparseProximity& p, bool include_diagonal) {
    out << kProximityFileHeader << '\n';
    for (Index i = 0; i < p.dimension(); ++i) {
        for (const auto& e : p.row(i)) {
            if (p.symmetric() && (e.col < i || (e.col == i && !include_diagonal))) continue;
            out << i << '\t' << e.col << '\t' << text::format_double(e.value) << '\n';
        }
    }
}

SparseProximity read_proximity(std::istream& in, ProximityKind kind, std::size_t dimension) {
    struct Line {
        Index i, j;
        double v;
    };
    std::vector<Line> lines;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        text::strip_cr(line);
        if (!header_seen) {
            if (line != kProximityFileHeader)
                throw ParseError(line_no, "expected header '" + std::string(kProximityFileHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto f = text::split(line, '\t');
        Line l{};
        if (f.size() != 3 || !text::parse_int(f[0], l.i) || !text::parse_int(f[1], l.j) || !text::parse_double(f[2], l.v))
            throw ParseError(line_no, "expected 'i<TAB>j<TAB>value'");
        if (!std::isfinite(l.v) || l.v < 0.0) throw ParseError(line_no, "proximity must be finite and nonnegative");
        dimension = std::max<std::size_t>(dimension, std::max(l.i, l.j) + std::size_t{1});
        lines.push_back(l);
    }
    if (!header_seen) throw ParseError(0, "empty proximity file");
    SparseProximity p(dimension, kind);
    for (const auto& l : lines) p.set(l.i, l.j, l.v);
    return p;
}

}  // namespace arec
