#pragma once

#include "arec/interner.hpp"
#include "arec/sparse.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace arec {

// One retrieval in the path log.
struct ClickEvent {
    std::string session;
    std::int64_t epoch_seconds = 0;
    std::string document;
    friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
};

inline constexpr std::string_view kPathLogHeader = "#plog 1";

// Path Log Format v1. Throws ParseError on malformed lines and on timestamps
// that go backwards within a session.
std::vector<ClickEvent> parse_path_log(std::istream& in);
void write_path_log(std::ostream& out, std::span<const ClickEvent> log);

// Three documents retrieved in sequence by the same user: first -> second -> third.
struct UserPath {
    std::string first;
    std::string second;
    std::string third;
    friend bool operator==(const UserPath&, const UserPath&) = default;
};

inline constexpr std::int64_t kDefaultSessionGap = 1800;

// Splits each session wherever two consecutive clicks are more than
// `session_gap` seconds apart, collapses consecutive repeats of a document, and
// emits every sliding window of three clicks. Sessions are visited in order of
// first appearance. Throws std::invalid_argument if a session's timestamps
// decrease.
std::vector<UserPath> extract_paths(std::span<const ClickEvent> log, std::int64_t session_gap = kDefaultSessionGap);

// Rewards relative to r_freq = 1/n, n being the number of paths in the batch.
struct RewardConfig {
    double symm_factor = 0.3;
    double trans_factor = 0.5;

    void validate() const;
};

// Traversal proximity from a batch of paths. For each path (i, j, k):
//   frequency     t[i][j] += r_freq,         t[j][k] += r_freq
//   symmetry      t[j][i] += symm * r_freq,  t[k][j] += symm * r_freq
//   transitivity  t[i][k] += trans * r_freq
// starting from an all-zero matrix, then clamped to [0,1]. Rule applications
// are counted per entry and scaled once, so the result does not depend on the
// order of the paths. Throws NotFound for documents outside `documents` and
// std::invalid_argument for an empty batch.
SparseProximity learn(std::span<const UserPath> paths, const Interner& documents, const RewardConfig& config = {});
SparseProximity learn(std::span<const std::array<Index, 3>> paths, std::size_t dimension,
                      const RewardConfig& config = {});

// t^(i,j) = max(t(i,j), t(j,i)).
SparseProximity symmetrize_max(const SparseProximity& traversal);

struct CompositeWeights {
    double traversal = 0.5;
    double structural = 0.25;
    double record_semantic = 0.25;

    void validate() const;
};

// w_t * symmetrized traversal + w_s * structural + w_r * record semantic, over
// a shared index space (see lift()). Throws std::invalid_argument unless the
// weights are nonnegative and sum to 1, or if dimensions differ.
SparseProximity composite_proximity(const SparseProximity& traversal, const SparseProximity& structural,
                                    const SparseProximity& record_semantic, const CompositeWeights& weights = {});

}  // namespace arec
