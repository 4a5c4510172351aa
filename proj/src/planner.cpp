#include "coverd/planner.hpp"

#include <algorithm>
#include <stdexcept>

#include "coverd/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coverd {

namespace {

struct WorkerTally {
    std::vector<std::uint64_t> samples, successes;
    std::vector<double> seconds;
};

Block draw_subset(Rng& rng, std::uint32_t v, unsigned k) {
    auto drawn = sample_distinct(rng, v, k);
    Block S(drawn.begin(), drawn.end());
    std::sort(S.begin(), S.end());
    return S;
}

}  // namespace

KStats sample_kstats(const Backend& backend, std::span<const double> image,
                     std::uint32_t label, unsigned t, unsigned max_k,
                     const SampleOptions& opts) {
    const std::uint32_t v = std::uint32_t(image.size());
    const unsigned hi = std::min<unsigned>(max_k, v);
    if (t < 1 || hi < t) throw std::invalid_argument("sample_kstats: need t <= max_k, t <= v");
    if (opts.workers == 0 || opts.n_samples % opts.workers != 0 ||
        opts.reduced_samples % opts.workers != 0) {
        throw std::invalid_argument(
            "sample_kstats: n_samples and reduced_samples must divide by workers");
    }
    const unsigned quota = opts.n_samples / opts.workers;
    const unsigned reduced = opts.reduced_samples / opts.workers;
    const unsigned n_sizes = hi - t + 1;

    std::vector<WorkerTally> tallies(opts.workers);
    std::exception_ptr failure;

#pragma omp parallel for schedule(static, 1) if (opts.parallel)
    for (int w = 0; w < int(opts.workers); ++w) {
        try {
            WorkerTally tally;
            tally.samples.assign(n_sizes, 0);
            tally.successes.assign(n_sizes, 0);
            tally.seconds.assign(n_sizes, 0.0);
            Rng rng(mix_seed(opts.seed, 0xa3 + std::uint64_t(w)));
            unsigned zero_sizes = 0;
            for (unsigned k = t; k <= hi; ++k) {
                const unsigned want = zero_sizes >= opts.n_fail ? reduced : quota;
                std::uint64_t ok = 0;
                for (unsigned i = 0; i < want; ++i) {
                    Block S = draw_subset(rng, v, k);
                    auto res = backend.verify(make_neighborhood(image, S), label);
                    ++tally.samples[k - t];
                    tally.seconds[k - t] += res.seconds;
                    if (res.status == BackendStatus::Verified) {
                        ++tally.successes[k - t];
                        ++ok;
                    }
                }
                if (ok == 0) ++zero_sizes;
            }
            tallies[w] = std::move(tally);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    KStats stats;
    stats.t = t;
    stats.max_k = hi;
    stats.samples.assign(n_sizes, 0);
    stats.successes.assign(n_sizes, 0);
    stats.seconds.assign(n_sizes, 0.0);
    for (const auto& tally : tallies) {  // fixed order keeps float sums reproducible
        for (unsigned i = 0; i < n_sizes; ++i) {
            stats.samples[i] += tally.samples[i];
            stats.successes[i] += tally.successes[i];
            stats.seconds[i] += tally.seconds[i];
        }
    }
    return stats;
}

double estimate_complete_time(const Backend& complete, std::span<const double> image,
                              std::uint32_t label, unsigned t, unsigned n,
                              std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("estimate_complete_time: n must be positive");
    Rng rng(mix_seed(seed, 0x7c0));
    double total = 0.0;
    for (unsigned i = 0; i < n; ++i) {
        Block S = draw_subset(rng, std::uint32_t(image.size()), t);
        total += complete.verify(make_neighborhood(image, S), label).seconds;
    }
    return total / double(n);
}

RefinementPlan refine_plan(const KStats& stats, const CoverSizeFn& sizes,
                           double t_complete) {
    RefinementPlan plan;
    plan.t = stats.t;
    plan.max_k = stats.max_k;
    plan.t_complete = t_complete;
    const unsigned t = stats.t;
    plan.cost.assign(stats.max_k - t + 1, 0.0);
    plan.next_size.assign(stats.max_k - t + 1, t);

    auto refine_cost = [&](unsigned k) {  // R(k)
        return stats.mean_time(k) + (1.0 - stats.success_rate(k)) * plan.T(k);
    };

    plan.cost[0] = t_complete;
    for (unsigned k = t + 1; k <= stats.max_k; ++k) {
        double best = 0.0;
        std::uint32_t best_k = t;
        bool first = true;
        for (unsigned kk = t; kk < k; ++kk) {
            double total = double(sizes(k, kk, t)) * refine_cost(kk);
            if (first || total <= best) {  // <= : ties go to the larger k''
                best = total;
                best_k = kk;
                first = false;
            }
        }
        plan.cost[k - t] = best;
        plan.next_size[k - t] = best_k;
    }
    return plan;
}

double score_candidate(const SizeDistribution& dist, const KStats& stats,
                       const RefinementPlan& plan) {
    if (dist.t != stats.t || dist.max_k > stats.max_k) {
        throw std::invalid_argument("score_candidate: distribution range mismatch");
    }
    double total = 0.0;
    for (unsigned k = dist.t; k <= dist.max_k; ++k) {
        std::uint64_t n = dist.count(k);
        if (n == 0) continue;
        total += double(n) *
                 (stats.mean_time(k) + (1.0 - stats.success_rate(k)) * plan.T(k));
    }
    return total;
}

DesignChoice choose_design(std::uint64_t v, unsigned t, const KStats& stats,
                           const RefinementPlan& plan, double min_k, unsigned max_k,
                           double eps, std::uint64_t seed,
                           bool deterministic_rounding) {
    auto candidates = enumerate_candidates(v, t, min_k, max_k, eps);
    if (candidates.empty()) {
        throw std::runtime_error(
            "choose_design: no CVD candidate for these parameters; lower --min-k or "
            "raise --eps");
    }
    const unsigned dist_hi = std::min(max_k, stats.max_k);
    DesignChoice choice;
    std::size_t best = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        SizeDistribution dist =
            deterministic_rounding
                ? estimate_distribution_deterministic(c, dist_hi)
                : estimate_distribution(c, dist_hi,
                                        mix_seed(seed, (std::uint64_t(c.params.q) << 20) ^
                                                           c.params.m));
        double score = score_candidate(dist, stats, plan);
        choice.scores.push_back({c, score});
        if (i == 0) continue;
        const auto& incumbent = choice.scores[best];
        if (score < incumbent.score ||
            (score == incumbent.score && c.b < incumbent.candidate.b)) {
            best = i;
        }
    }
    choice.chosen = candidates[best];
    choice.selection = draw_selection(choice.chosen.params, v, seed);
    return choice;
}

}  // namespace coverd
