#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coverd/coverdb.hpp"
#include "coverd/planner.hpp"

namespace coverd {

struct RunConfig {
    unsigned t = 2;
    unsigned workers = 8;
    double timeout_seconds = 0.0;  // 0 disables the timeout
    std::uint64_t seed = 0;
    unsigned max_k = 200;
    double min_k = 0.0;  // 0 means the default (min_k = t)
    double eps = 0.01;
    unsigned n_samples = 400;
    unsigned n_fail = 10;
    unsigned reduced_samples = 24;
    unsigned complete_probe = 20;  // t-subsets used to estimate T_complete
    bool deterministic_rounding = false;
    bool serial = false;  // single-threaded round-robin scheduler
};

struct RunStats {
    std::uint64_t incomplete_calls = 0;
    std::map<std::uint32_t, std::uint64_t> incomplete_by_size;
    std::uint64_t complete_calls = 0;
    std::uint32_t max_size = 0;
    std::uint32_t min_size = 0;
    std::uint64_t refinements = 0;
    std::uint64_t cvd_blocks = 0;     // stream blocks of size >= t
    std::uint64_t skipped_small = 0;  // stream blocks below size t
    double wall_seconds = 0.0;
    double backend_seconds = 0.0;  // summed backend-reported time (virtual for scripted)
    std::string verdict;
};

enum class BallStatus { Robust, NonRobust, Unknown };

struct BallVerdict {
    BallStatus status = BallStatus::Unknown;
    std::vector<double> witness;     // NonRobust only
    std::uint64_t unresolved = 0;    // distinct failed t-blocks, Unknown only
    bool timed_out = false;
};

const char* to_string(BallStatus s);

/// Everything the analysis needs from planning: the chosen design, the
/// selection L, the sampled backend statistics and the refinement table.
struct PlanArtifacts {
    CvdCandidate chosen;
    InducedSelection selection;
    KStats stats;
    RefinementPlan plan;
    std::vector<CandidateScore> scores;
    double t_complete = 0.0;
    double plan_seconds = 0.0;
};

/// Sampling, DP and candidate choice for one ball. The covering db must hold
/// C(k, k'', t) for all t <= k'' < k <= min(max_k, v).
PlanArtifacts plan_ball(const Network& net, std::span<const double> image,
                        const RunConfig& cfg, const Backend& incomplete,
                        const Backend* complete, const CoverDb& db);

/// One refinement step: the covering C(|S|, f_R(|S|), t) renamed into S.
std::vector<Block> refine(const Block& S, const RefinementPlan& plan,
                          const CoverDb& db, unsigned t);

/// Run the analysis for a prepared plan. Workers stream disjoint parts of
/// the CVD, verify each block with the incomplete backend, refine failures
/// through the db, and hand failed t-blocks (deduplicated globally) to the
/// complete backend. A Falsified answer stops all workers.
std::pair<BallVerdict, RunStats> run_analysis(const Network& net,
                                              std::span<const double> image,
                                              const PlanArtifacts& artifacts,
                                              const RunConfig& cfg,
                                              const Backend& incomplete,
                                              const Backend* complete,
                                              const CoverDb& db);

/// plan_ball + run_analysis.
std::pair<BallVerdict, RunStats> verify_ball(const Network& net,
                                             std::span<const double> image,
                                             const RunConfig& cfg,
                                             const Backend& incomplete,
                                             const Backend* complete,
                                             const CoverDb& db);

}  // namespace coverd
