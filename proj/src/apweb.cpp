#include "arec/apweb.hpp"

#include "arec/corpus.hpp"
#include "arec/errors.hpp"
#include "arec/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace arec {

std::vector<ClickEvent> parse_path_log(std::istream& in) {
    std::vector<ClickEvent> log;
    std::unordered_map<std::string, std::int64_t> last_time;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        text::strip_cr(line);
        if (!header_seen) {
            if (line != kPathLogHeader) throw ParseError(line_no, "expected header '" + std::string(kPathLogHeader) + "'");
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto f = text::split(line, '\t');
        ClickEvent e;
        if (f.size() != 3 || !is_valid_identifier(f[0]) || !text::parse_int(f[1], e.epoch_seconds) ||
            !is_valid_identifier(f[2]))
            throw ParseError(line_no, "expected 'session_id<TAB>epoch_seconds<TAB>document_id'");
        e.session = std::string(f[0]);
        e.document = std::string(f[2]);
        auto [it, fresh] = last_time.try_emplace(e.session, e.epoch_seconds);
        if (!fresh) {
            if (e.epoch_seconds < it->second) throw ParseError(line_no, "timestamps decrease within session " + e.session);
            it->second = e.epoch_seconds;
        }
        log.push_back(std::move(e));
    }
    if (!header_seen) throw ParseError(0, "empty path log");
    return log;
}

void write_path_log(std::ostream& out, std::span<const ClickEvent> log) {
    out << kPathLogHeader << '\n';
    for (const auto& e : log) out << e.session << '\t' << e.epoch_seconds << '\t' << e.document << '\n';
}

std::vector<UserPath> extract_paths(std::span<const ClickEvent> log, std::int64_t session_gap) {
    if (session_gap < 0) throw std::invalid_argument("session gap must be nonnegative");
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const ClickEvent*>> by_session;
    for (const auto& e : log) {
        auto [it, fresh] = by_session.try_emplace(e.session);
        if (fresh) order.push_back(e.session);
        it->second.push_back(&e);
    }

    std::vector<UserPath> paths;
    std::vector<const std::string*> run;
    auto flush = [&] {
        for (std::size_t i = 0; i + 2 < run.size(); ++i) paths.push_back({*run[i], *run[i + 1], *run[i + 2]});
        run.clear();
    };
    for (const auto& s : order) {
        const auto& clicks = by_session[s];
        for (std::size_t i = 0; i < clicks.size(); ++i) {
            if (i > 0) {
                const auto gap = clicks[i]->epoch_seconds - clicks[i - 1]->epoch_seconds;
                if (gap < 0) throw std::invalid_argument("timestamps decrease within session " + s);
                if (gap > session_gap) flush();
            }
            if (run.empty() || *run.back() != clicks[i]->document) run.push_back(&clicks[i]->document);
        }
        flush();
    }
    return paths;
}

void RewardConfig::validate() const {
    if (!(symm_factor > 0.0 && symm_factor < 1.0)) throw std::invalid_argument("symm_factor must be in (0,1)");
    if (!(trans_factor > 0.0 && trans_factor < 1.0)) throw std::invalid_argument("trans_factor must be in (0,1)");
}

SparseProximity learn(std::span<const std::array<Index, 3>> paths, std::size_t dimension, const RewardConfig& config) {
    config.validate();
    if (paths.empty()) throw std::invalid_argument("learn: no paths");

    struct Counts {
        std::uint64_t freq = 0, symm = 0, trans = 0;
    };
    std::map<std::pair<Index, Index>, Counts> counts;
    for (const auto& [i, j, k] : paths) {
        if (i >= dimension || j >= dimension || k >= dimension) throw NotFound("learn: document index out of range");
        ++counts[{i, j}].freq;
        ++counts[{j, k}].freq;
        ++counts[{j, i}].symm;
        ++counts[{k, j}].symm;
        ++counts[{i, k}].trans;
    }

    const double r_freq = 1.0 / static_cast<double>(paths.size());
    const double r_symm = config.symm_factor * r_freq;
    const double r_trans = config.trans_factor * r_freq;
    std::vector<std::vector<ProximityEntry>> rows(dimension);
    for (const auto& [pair, c] : counts) {
        const double v = static_cast<double>(c.freq) * r_freq + static_cast<double>(c.symm) * r_symm +
                         static_cast<double>(c.trans) * r_trans;
        rows[pair.first].push_back({pair.second, std::clamp(v, 0.0, 1.0)});
    }
    SparseProximity t(dimension, ProximityKind::traversal);
    for (Index r = 0; r < dimension; ++r) t.assign_row(r, std::move(rows[r]));
    return t;
}

SparseProximity learn(std::span<const UserPath> paths, const Interner& documents, const RewardConfig& config) {
    std::vector<std::array<Index, 3>> indexed;
    indexed.reserve(paths.size());
    for (const auto& p : paths) indexed.push_back({documents.at(p.first), documents.at(p.second), documents.at(p.third)});
    return learn(indexed, documents.size(), config);
}

SparseProximity symmetrize_max(const SparseProximity& traversal) {
    const std::size_t n = traversal.dimension();
    std::vector<std::map<Index, double>> acc(n);
    for (Index i = 0; i < n; ++i) {
        for (const auto& e : traversal.row(i)) {
            auto& a = acc[i][e.col];
            a = std::max(a, e.value);
            auto& b = acc[e.col][i];
            b = std::max(b, e.value);
        }
    }
    SparseProximity out(n, ProximityKind::composite);
    for (Index i = 0; i < n; ++i) {
        std::vector<ProximityEntry> row;
        row.reserve(acc[i].size());
        for (const auto& [c, v] : acc[i]) row.push_back({c, v});
        out.assign_row(i, std::move(row));
    }
    return out;
}

void CompositeWeights::validate() const {
    if (traversal < 0.0 || structural < 0.0 || record_semantic < 0.0)
        throw std::invalid_argument("composite weights must be nonnegative");
    if (std::abs(traversal + structural + record_semantic - 1.0) > 1e-9)
        throw std::invalid_argument("composite weights must sum to 1");
}

SparseProximity composite_proximity(const SparseProximity& traversal, const SparseProximity& structural,
                                    const SparseProximity& record_semantic, const CompositeWeights& weights) {
    weights.validate();
    const std::size_t n = traversal.dimension();
    if (structural.dimension() != n || record_semantic.dimension() != n)
        throw std::invalid_argument("composite_proximity: dimension mismatch");
    const auto sym = symmetrize_max(traversal);

    SparseProximity out(n, ProximityKind::composite);
    std::map<Index, double> acc;
    for (Index i = 0; i < n; ++i) {
        acc.clear();
        for (const auto& e : sym.row(i)) acc[e.col] += weights.traversal * e.value;
        for (const auto& e : structural.row(i)) acc[e.col] += weights.structural * e.value;
        for (const auto& e : record_semantic.row(i)) acc[e.col] += weights.record_semantic * e.value;
        std::vector<ProximityEntry> row;
        for (const auto& [c, v] : acc)
            if (v > 0.0) row.push_back({c, std::clamp(v, 0.0, 1.0)});
        out.assign_row(i, std::move(row));
    }
    return out;
}

}  // namespace arec
