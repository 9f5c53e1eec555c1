#pragma once

#include "arec/sparse.hpp"

#include <optional>
#include <span>
#include <vector>

namespace arec {

struct SAConfig {
    double decay = 0.8;
    std::size_t max_iterations = 500;
    double tolerance = 1e-8;
    bool clamp_cues = true;
    bool exclude_cues = true;
    // Keep at most top_k nodes; nullopt keeps all.
    std::optional<std::size_t> top_k;
    // Keep only nodes with activation strictly above this value (0 keeps every active node).
    double threshold = 0.0;
    // Row-normalize the weights before propagating. Turning this off expects
    // rows that already sum to at most 1.
    bool normalize_rows = true;

    void validate() const;
};

struct RankedNode {
    Index node;
    double activation;
    friend bool operator==(const RankedNode&, const RankedNode&) = default;
};

struct SpreadResult {
    std::vector<double> activation;
    std::vector<RankedNode> ranking;
    std::size_t iterations = 0;
    bool converged = false;
};

// Spreading activation. Starting from the indicator vector of the cues,
// iterates a <- decay * W^T a (W row-normalized, self-loops ignored),
// resetting cues to 1 after each step when clamp_cues is set, until the
// largest change falls below tolerance. The ranking lists nodes with positive
// activation in descending order (ties by index). Throws std::invalid_argument
// for an empty cue set and NotFound for cues outside the network.
SpreadResult spread(const SparseProximity& weights, std::span<const Index> cues, const SAConfig& config = {});

}  // namespace arec
