#include "coverd/design.hpp"

#include <cmath>

#include "coverd/rng.hpp"

namespace coverd {

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double CvdCandidate::sigma_d() const {
    return std::sqrt(sigma2.convert_to<double>());
}

CvdCandidate cvd_stats(const PgParams& params, std::uint64_t v) {
    BigInt vp = params.v_prime();
    BigInt kp = params.k_prime();
    if (vp <= 1) throw std::invalid_argument("cvd_stats: v' must exceed 1");
    if (v < 1 || vp < v) throw std::invalid_argument("cvd_stats: need 1 <= v <= v'");
    CvdCandidate c{params, v, Rational(), Rational(), BigInt()};
    c.mu = Rational(BigInt(v) * kp, vp);
    c.sigma2 = c.mu * (1 + Rational(BigInt(v - 1) * (kp - 1), vp - 1) - c.mu);
    c.b = gaussian_binomial(params.m + 1, params.t, params.q);
    if (c.sigma2 < 0 || c.sigma2 > c.mu) {
        throw std::logic_error("cvd_stats: variance outside [0, mu]");
    }
    return c;
}

Rational SizeAccumulator::mean() const {
    if (count == 0) throw std::invalid_argument("SizeAccumulator: empty");
    return Rational(sum, count);
}

Rational SizeAccumulator::variance() const {
    if (count == 0) throw std::invalid_argument("SizeAccumulator: empty");
    return Rational(sum_sq * count - sum * sum, count * count);
}

std::pair<Rational, Rational> empirical_stats(const std::vector<Block>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("empirical_stats: empty input");
    SizeAccumulator acc;
    for (const auto& b : blocks) acc.add(b.size());
    return {acc.mean(), acc.variance()};
}

namespace {

// Estimated number of blocks larger than max_k under the Gaussian model.
double overflow_estimate(const CvdCandidate& c, unsigned max_k) {
    double sigma = c.sigma_d();
    double b = c.b.convert_to<double>();
    if (sigma == 0.0) return c.mu_d() <= double(max_k) ? 0.0 : b;
    return b * (1.0 - normal_cdf((double(max_k) - c.mu_d()) / sigma));
}

}  // namespace

std::vector<CvdCandidate> enumerate_candidates(std::uint64_t v, unsigned t,
                                               double min_k, unsigned max_k,
                                               double eps) {
    if (t < 2) throw std::invalid_argument("enumerate_candidates: t must be >= 2");
    if (min_k < double(t)) throw std::invalid_argument("enumerate_candidates: min_k < t");
    std::vector<CvdCandidate> out;
    // mu = v k'/v' < v/q for every m >= t, so primes beyond v/min_k are out.
    for (std::uint64_t q = 2; double(v) > min_k * double(q); ++q) {
        if (!is_prime(q)) continue;
        for (unsigned m = t;; ++m) {
            PgParams params(std::uint32_t(q), m, t);
            if (params.v_prime() < v) continue;
            CvdCandidate c = cvd_stats(params, v);
            if (c.mu < Rational(min_k)) break;  // mu only shrinks with m
            if (overflow_estimate(c, max_k) <= eps) out.push_back(std::move(c));
        }
    }
    return out;  // construction order is already (q, m)-sorted
}

std::vector<double> expected_distribution(const CvdCandidate& c, unsigned max_k) {
    unsigned t = c.params.t;
    if (max_k < t) throw std::invalid_argument("expected_distribution: max_k < t");
    std::vector<double> expect(max_k - t + 1, 0.0);
    double sigma = c.sigma_d();
    if (sigma == 0.0) {
        std::uint64_t kp = c.params.k_prime_u64();
        if (kp >= t && kp <= max_k) expect[std::size_t(kp - t)] = c.b.convert_to<double>();
        return expect;
    }
    double mu = c.mu_d();
    double b = c.b.convert_to<double>();
    double lower = normal_cdf((double(t) - 0.5 - mu) / sigma);
    for (unsigned k = t; k <= max_k; ++k) {
        double upper = normal_cdf((double(k) + 0.5 - mu) / sigma);
        expect[k - t] = b * (upper - lower);
        lower = upper;
    }
    return expect;
}

namespace {

SizeDistribution round_distribution(const CvdCandidate& c, unsigned max_k,
                                    std::uint64_t seed, bool bernoulli) {
    SizeDistribution dist;
    dist.t = c.params.t;
    dist.max_k = max_k;
    dist.seed = seed;
    auto expect = expected_distribution(c, max_k);
    dist.counts.resize(expect.size(), 0);
    Rng rng(mix_seed(seed, 0xd157ull));
    for (std::size_t i = 0; i < expect.size(); ++i) {
        double whole = std::floor(expect[i]);
        double frac = expect[i] - whole;
        std::uint64_t n = std::uint64_t(whole);
        if (bernoulli) {
            n += rng.bernoulli(frac) ? 1 : 0;
        } else {
            // round half to even
            if (frac > 0.5 || (frac == 0.5 && (n % 2) == 1)) ++n;
        }
        dist.counts[i] = n;
    }
    return dist;
}

}  // namespace

SizeDistribution estimate_distribution(const CvdCandidate& c, unsigned max_k,
                                       std::uint64_t seed) {
    return round_distribution(c, max_k, seed, true);
}

SizeDistribution estimate_distribution_deterministic(const CvdCandidate& c,
                                                     unsigned max_k) {
    return round_distribution(c, max_k, 0, false);
}

BigInt schonheim_bound(std::uint64_t v, std::uint64_t k, unsigned t) {
    if (t < 1 || k < t || v < k) {
        throw std::invalid_argument("schonheim_bound: need 1 <= t <= k <= v");
    }
    BigInt bound = 1;
    // Unrolled recursion: L(v,k,t) = ceil(v/k * L(v-1,k-1,t-1)), L(.,.,1) = ceil(v/k).
    for (unsigned level = 0; level < t; ++level) {
        BigInt num = BigInt(v - (t - 1 - level)) * bound;
        BigInt den = k - (t - 1 - level);
        bound = (num + den - 1) / den;
    }
    return bound;
}

RatioReport ratio_report(std::uint64_t v, unsigned t, double min_mean,
                         unsigned max_k, double eps) {
    if (min_mean < double(t)) throw std::invalid_argument("ratio_report: min_mean < t");
    RatioReport report;
    double total = 0.0;
    for (const auto& c : enumerate_candidates(v, t, min_mean, max_k, eps)) {
        RatioRow row;
        row.q = c.params.q;
        row.m = c.params.m;
        row.mu = c.mu_d();
        row.b = c.b;
        auto ceil_mu = (boost::multiprecision::numerator(c.mu) +
                        boost::multiprecision::denominator(c.mu) - 1) /
                       boost::multiprecision::denominator(c.mu);
        row.bound = schonheim_bound(v, ceil_mu.convert_to<std::uint64_t>(), t);
        row.ratio = Rational(row.b, row.bound).convert_to<double>();
        total += row.ratio;
        report.rows.push_back(std::move(row));
    }
    if (!report.rows.empty()) report.average = total / double(report.rows.size());
    return report;
}

}  // namespace coverd
