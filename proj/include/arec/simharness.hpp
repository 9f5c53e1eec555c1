#pragma once

#include "arec/api.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace arec {

// A group of users sharing an interest in a set of keywords.
struct PlantedCluster {
    std::string name;
    std::vector<std::string> keywords;
    double weight = 1.0;  // share of users drawn to this cluster
    // Fixed query profile; when empty each user samples profile_size keywords.
    std::vector<std::string> profile;
};

struct CommunitySpec {
    std::size_t users = 5;
    std::size_t sessions_per_user = 10;
    std::size_t clicks_per_session = 3;
    std::size_t profile_size = 2;
    std::vector<PlantedCluster> clusters;
    double p_relevant_in_cluster = 0.9;
    double p_relevant_out_cluster = 0.0;
    double auto_answer_level = 0.0;
    std::size_t recommendations = 10;
    std::int64_t start_time = 1'000'000'000;
    std::int64_t session_spacing = 7200;  // seconds between session starts
    std::int64_t click_spacing = 30;
    std::uint64_t seed = 1;

    void validate() const;
};

nlohmann::json to_json(const CommunitySpec& spec);
// Missing fields keep their defaults; unknown fields are rejected.
CommunitySpec community_spec_from_json(const nlohmann::json& j);
CommunitySpec read_community_spec(const std::filesystem::path& file);

struct SimRow {
    std::size_t step = 0;
    std::string metric;
    std::string context;
    std::string subject;
    double value = 0.0;

    friend bool operator==(const SimRow&, const SimRow&) = default;
};

// Metrics, per step (0 is the state before any session):
//   ksp_in / ksp_out        mean working ksp among a cluster's keywords, and
//                           between them and the rest of the context
//   propagated_ksp          working ksp of a propagated keyword to each other
//                           cluster keyword, subject "propagated~other"
//   traversal_intra / _inter mean symmetrized traversal proximity among records
//                           carrying a cluster keyword, and to the others
//   precision               share of a session's recommendations carrying a
//                           keyword of the user's cluster (context "all")
//   questions               questions the user answered in the session
struct SimReport {
    std::vector<SimRow> rows;

    std::vector<double> series(const std::string& metric, const std::string& context,
                               const std::string& subject) const;
    std::vector<std::size_t> steps(const std::string& metric, const std::string& context,
                                   const std::string& subject) const;
    friend bool operator==(const SimReport&, const SimReport&) = default;
};

inline constexpr std::string_view kSimReportHeader = "#simreport 1";

void write_report(std::ostream& out, const SimReport& report);

// Drives the community through the API only. Sessions run in round-robin
// order over users; each ends with an adaptation cycle. Throws TransportError
// if the engine is unreachable and std::runtime_error on unexpected replies.
SimReport run_community_sim(const CommunitySpec& spec, ApiTransport& api);

}  // namespace arec
