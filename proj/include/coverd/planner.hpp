#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "coverd/design.hpp"
#include "coverd/nnverify.hpp"

namespace coverd {

/// Estimated success rate and mean analysis time of the incomplete backend
/// per neighborhood size k in [t, max_k].
struct KStats {
    unsigned t = 0;
    unsigned max_k = 0;
    std::vector<std::uint64_t> samples;    // index k - t
    std::vector<std::uint64_t> successes;
    std::vector<double> seconds;           // summed per k

    std::uint64_t sample_count(unsigned k) const { return samples[k - t]; }
    double success_rate(unsigned k) const {
        return samples[k - t] == 0 ? 0.0 : double(successes[k - t]) / double(samples[k - t]);
    }
    double mean_time(unsigned k) const {
        return samples[k - t] == 0 ? 0.0 : seconds[k - t] / double(samples[k - t]);
    }
};

/// Sampling parameters; defaults follow the tool's standard configuration
/// (400 samples dropping to 24 after ten all-fail sizes, eight workers).
struct SampleOptions {
    unsigned n_samples = 400;
    unsigned n_fail = 10;
    unsigned reduced_samples = 24;
    unsigned workers = 8;
    std::uint64_t seed = 0;
    bool parallel = true;
};

/// For k = t..max_k ascending, every worker draws its quota of uniform
/// k-subsets of [1, v] and runs the backend on I_S(x). A worker drops to the
/// reduced quota for all later k once it has seen n_fail sizes with zero
/// successes of its own. Aggregation is in worker order, so results do not
/// depend on scheduling.
KStats sample_kstats(const Backend& backend, std::span<const double> image,
                     std::uint32_t label, unsigned t, unsigned max_k,
                     const SampleOptions& opts);

/// Mean seconds of the complete backend over n random t-subsets.
double estimate_complete_time(const Backend& complete, std::span<const double> image,
                              std::uint32_t label, unsigned t, unsigned n,
                              std::uint64_t seed);

/// Refinement cost table: T(k) is the expected cost of refining a failed
/// size-k block all the way down, f_R(k) the block size to refine into.
struct RefinementPlan {
    unsigned t = 0;
    unsigned max_k = 0;
    double t_complete = 0.0;
    std::vector<double> cost;            // T(k), index k - t
    std::vector<std::uint32_t> next_size;  // f_R(k), index k - t; next_size[0] == t

    double T(unsigned k) const { return cost[k - t]; }
    std::uint32_t f_R(unsigned k) const { return next_size[k - t]; }
};

/// Block count |C(v, k, t)|, usually backed by the covering db headers.
using CoverSizeFn =
    std::function<std::uint64_t(std::uint32_t v, std::uint32_t k, unsigned t)>;

/// Dynamic program over refinement chains:
///   R(k)  = time(k) + (1 - success(k)) * T(k)
///   T(t)  = t_complete
///   T(k)  = min over t <= k'' < k of |C(k, k'', t)| * R(k''),   k > t
/// f_R(k) is the argmin, ties toward the larger k''.
RefinementPlan refine_plan(const KStats& stats, const CoverSizeFn& sizes,
                           double t_complete);

/// Predicted analysis seconds of a candidate's estimated distribution:
/// sum over k of N_k * (time(k) + (1 - success(k)) * T(k)).
double score_candidate(const SizeDistribution& dist, const KStats& stats,
                       const RefinementPlan& plan);

struct CandidateScore {
    CvdCandidate candidate;
    double score = 0.0;
};

struct DesignChoice {
    CvdCandidate chosen;
    InducedSelection selection;
    std::vector<CandidateScore> scores;  // every candidate, (q, m) order
};

/// Score every candidate for (v, t) and pick the cheapest (ties toward the
/// smaller block count, then smaller (q, m)); draw the ordered selection L
/// with the given seed. Throws std::runtime_error when no candidate exists.
DesignChoice choose_design(std::uint64_t v, unsigned t, const KStats& stats,
                           const RefinementPlan& plan, double min_k, unsigned max_k,
                           double eps, std::uint64_t seed,
                           bool deterministic_rounding = false);

}  // namespace coverd
