#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "coverd/pg.hpp"

namespace coverd {

/// Standard normal CDF via erfc; absolute error well below 1e-12.
double normal_cdf(double z);

/// A candidate covering verification design: PG parameters plus the pixel
/// count v it would be induced to, with the closed-form block-size mean,
/// variance and block count.
struct CvdCandidate {
    PgParams params;
    std::uint64_t v = 0;
    Rational mu;      // v * k' / v'
    Rational sigma2;  // mu * (1 + (v-1)(k'-1)/(v'-1) - mu)
    BigInt b;

    double mu_d() const { return mu.convert_to<double>(); }
    double sigma_d() const;
};

/// Exact block-size mean and variance of the CVD induced from the PG
/// covering for `params` by any selection of v points. Requires v' > 1 and
/// 1 <= v <= v'.
CvdCandidate cvd_stats(const PgParams& params, std::uint64_t v);

/// Exact population mean and variance of the block sizes of a concrete
/// covering. Throws on empty input.
std::pair<Rational, Rational> empirical_stats(const std::vector<Block>& blocks);

/// Streaming accumulator for the same statistic, for coverings too large to
/// hold in memory.
struct SizeAccumulator {
    BigInt count = 0, sum = 0, sum_sq = 0;
    void add(std::uint64_t size) {
        ++count;
        sum += size;
        sum_sq += BigInt(size) * size;
    }
    Rational mean() const;
    Rational variance() const;
};

/// All CVD candidates for (v, t): prime q, m >= t, v' >= v, mu >= min_k,
/// and an estimated count of blocks larger than max_k of at most eps.
/// Sorted by (q, m).
std::vector<CvdCandidate> enumerate_candidates(std::uint64_t v, unsigned t,
                                               double min_k, unsigned max_k,
                                               double eps);

/// Estimated block-size histogram of a candidate, sizes t..max_k.
struct SizeDistribution {
    unsigned t = 0;
    unsigned max_k = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> counts;  // counts[k - t] is N_k

    std::uint64_t count(unsigned k) const {
        return (k < t || k > max_k) ? 0 : counts[k - t];
    }
};

/// Gaussian-model estimate of the number of size-k blocks for t <= k <= max_k:
/// N_k = floor(b * P(k-0.5 < Z <= k+0.5)) plus a seeded Bernoulli draw on the
/// remainder. The degenerate v == v' case (sigma = 0) is a point mass at k'.
SizeDistribution estimate_distribution(const CvdCandidate& c, unsigned max_k,
                                       std::uint64_t seed);

/// Same with round-half-even instead of the Bernoulli draw, for seedless
/// reproducible reports.
SizeDistribution estimate_distribution_deterministic(const CvdCandidate& c,
                                                     unsigned max_k);

/// The raw (unrounded) expected counts the two roundings start from.
std::vector<double> expected_distribution(const CvdCandidate& c, unsigned max_k);

/// Recursive covering-design lower bound:
/// L(v,k,1) = ceil(v/k), L(v,k,t) = ceil(v/k * L(v-1,k-1,t-1)). Exact.
BigInt schonheim_bound(std::uint64_t v, std::uint64_t k, unsigned t);

struct RatioRow {
    std::uint32_t q;
    unsigned m;
    double mu;
    BigInt b;
    BigInt bound;
    double ratio;  // b / schonheim_bound(v, ceil(mu), t)
};

struct RatioReport {
    std::vector<RatioRow> rows;
    double average = 0.0;
};

/// CVD size vs. the Schonheim bound of the covering design (v, ceil(mu), t),
/// over every candidate with mean block size at least min_mean.
RatioReport ratio_report(std::uint64_t v, unsigned t, double min_mean,
                         unsigned max_k = 200, double eps = 0.01);

}  // namespace coverd
