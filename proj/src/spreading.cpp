#include "arec/spreading.hpp"

#include "arec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace arec {

void SAConfig::validate() const {
    if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("decay must be in (0,1)");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be nonnegative");
}

SpreadResult spread(const SparseProximity& weights, std::span<const Index> cues, const SAConfig& config) {
    config.validate();
    if (cues.empty()) throw std::invalid_argument("spread: empty cue set");
    const std::size_t n = weights.dimension();
    for (Index c : cues)
        if (c >= n) throw NotFound("spread: cue " + std::to_string(c) + " is not a network node");

    // Outgoing weight scale per row, self-loops excluded.
    std::vector<double> scale(n, 0.0);
    for (Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& e : weights.row(i))
            if (e.col != i) sum += e.value;
        scale[i] = !config.normalize_rows ? 1.0 : (sum > 0.0 ? 1.0 / sum : 0.0);
    }

    std::vector<char> is_cue(n, 0);
    for (Index c : cues) is_cue[c] = 1;

    SpreadResult res;
    res.activation.assign(n, 0.0);
    for (Index c : cues) res.activation[c] = 1.0;
    std::vector<double> next(n);

    for (res.iterations = 1; res.iterations <= config.max_iterations; ++res.iterations) {
        std::fill(next.begin(), next.end(), 0.0);
        for (Index i = 0; i < n; ++i) {
            const double a = res.activation[i];
            if (a == 0.0 || scale[i] == 0.0) continue;
            const double out = config.decay * a * scale[i];
            for (const auto& e : weights.row(i))
                if (e.col != i) next[e.col] += out * e.value;
        }
        if (config.clamp_cues)
            for (Index c : cues) next[c] = 1.0;

        double change = 0.0;
        for (Index i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - res.activation[i]));
        res.activation.swap(next);
        if (change < config.tolerance) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged) res.iterations = config.max_iterations;

    for (Index i = 0; i < n; ++i) {
        if (config.exclude_cues && is_cue[i]) continue;
        if (res.activation[i] > config.threshold) res.ranking.push_back({i, res.activation[i]});
    }
    std::sort(res.ranking.begin(), res.ranking.end(), [](const RankedNode& a, const RankedNode& b) {
        return a.activation != b.activation ? a.activation > b.activation : a.node < b.node;
    });
    if (config.top_k && res.ranking.size() > *config.top_k) res.ranking.resize(*config.top_k);
    return res;
}

}  // namespace arec
