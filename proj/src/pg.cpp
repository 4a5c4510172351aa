#include "coverd/pg.hpp"

#include <limits>

#include "coverd/rng.hpp"

namespace coverd {

PgParams::PgParams(std::uint32_t q_, unsigned m_, unsigned t_) : q(q_), m(m_), t(t_) {
    PrimeField field(q);  // validates primality and range
    if (t < 2) throw std::invalid_argument("PgParams: t must be >= 2");
    if (m < t) throw std::invalid_argument("PgParams: m must be >= t");
}

BigInt PgParams::v_prime() const {
    return (boost::multiprecision::pow(BigInt(q), m + 1) - 1) / (q - 1);
}

BigInt PgParams::k_prime() const {
    return (boost::multiprecision::pow(BigInt(q), t) - 1) / (q - 1);
}

std::uint64_t PgParams::v_prime_u64() const {
    BigInt vp = v_prime();
    if (vp > std::numeric_limits<std::uint64_t>::max()) {
        throw std::overflow_error("PgParams: v' exceeds 64 bits");
    }
    return vp.convert_to<std::uint64_t>();
}

std::uint64_t PgParams::k_prime_u64() const {
    return k_prime().convert_to<std::uint64_t>();
}

InducedSelection draw_selection(const PgParams& params, std::uint64_t v,
                                std::uint64_t seed) {
    std::uint64_t vp = params.v_prime_u64();
    if (v < 1 || v > vp) throw std::invalid_argument("draw_selection: need 1 <= v <= v'");
    Rng rng(mix_seed(seed, 0x4c53454cull));
    InducedSelection sel;
    sel.seed = seed;
    sel.points = sample_distinct(rng, vp, v);
    return sel;
}

std::vector<std::uint32_t> pg_point(const PgParams& params, std::uint64_t idx) {
    std::uint64_t vp = params.v_prime_u64();
    if (idx < 1 || idx > vp) throw std::out_of_range("pg_point: index out of range");
    const unsigned dims = params.m + 1;
    std::vector<std::uint32_t> vec(dims, 0);
    std::uint64_t rem = idx - 1;
    // group d holds the q^{m-d} points whose first nonzero coordinate is at d
    std::uint64_t group = 1;
    for (unsigned i = 0; i < params.m; ++i) group *= params.q;
    unsigned d = 0;
    while (rem >= group) {
        rem -= group;
        group /= params.q;
        ++d;
    }
    vec[d] = 1;
    for (unsigned pos = params.m; pos > d; --pos) {  // lexicographic, big-endian
        vec[pos] = std::uint32_t(rem % params.q);
        rem /= params.q;
    }
    return vec;
}

FieldMatrix pg_points(const PgParams& params) {
    std::uint64_t vp = params.v_prime_u64();
    const unsigned dims = params.m + 1;
    FieldMatrix P(dims, std::uint32_t(vp), params.q);
    for (std::uint64_t i = 1; i <= vp; ++i) {
        auto col = pg_point(params, i);
        for (unsigned r = 0; r < dims; ++r) P.set(r, std::uint32_t(i - 1), col[r]);
    }
    return P;
}

namespace {

// True when M * p == 0, with early exit on the first nonzero row.
bool in_null_space(const FieldMatrix& M, const std::uint32_t* point, unsigned dims) {
    const std::uint64_t q = M.q;
    for (std::uint32_t r = 0; r < M.rows; ++r) {
        std::uint64_t acc = 0;
        const std::uint32_t* row = &M.entries[std::size_t(r) * M.cols];
        if (q < 65536) {
            for (unsigned c = 0; c < dims; ++c) acc += std::uint64_t(row[c]) * point[c];
            acc %= q;
        } else {
            for (unsigned c = 0; c < dims; ++c) {
                acc = (acc + std::uint64_t(row[c]) * point[c]) % q;
            }
        }
        if (acc != 0) return false;
    }
    return true;
}

}  // namespace

Block pg_block(const PgParams& params, std::uint64_t j) {
    PrimeField field(params.q);
    const unsigned rows = params.m - params.t + 1;
    const unsigned dims = params.m + 1;
    FieldMatrix M = rref_enumerate(rows, dims, field, j);
    std::uint64_t vp = params.v_prime_u64();
    if (vp > std::numeric_limits<std::uint32_t>::max()) {
        throw std::overflow_error("pg_block: v' exceeds 32-bit index range");
    }
    Block block;
    std::vector<std::uint32_t> point;
    for (std::uint64_t i = 1; i <= vp; ++i) {
        point = pg_point(params, i);
        if (in_null_space(M, point.data(), dims)) block.push_back(std::uint32_t(i));
    }
    return block;
}

BibdParams bibd_parameters(const PgParams& params) {
    BibdParams out;
    out.v = params.v_prime();
    out.k = params.k_prime();
    out.b = gaussian_binomial(params.m + 1, params.t, params.q);
    out.r = gaussian_binomial(params.m, params.t - 1, params.q);
    out.lambda = gaussian_binomial(params.m - 1, params.t - 2, params.q);
    return out;
}

CvdGenerator::CvdGenerator(const PgParams& params, const InducedSelection& sel,
                           unsigned worker, unsigned n_workers)
    : params_(params),
      worker_(worker),
      n_workers_(n_workers),
      v_(std::uint32_t(sel.points.size())),
      rows_(params.m - params.t + 1),
      dims_(params.m + 1),
      it_(params.m - params.t + 1, params.m + 1, PrimeField(params.q)),
      total_(rref_count(params.m - params.t + 1, params.m + 1, PrimeField(params.q))) {
    if (n_workers == 0 || worker >= n_workers) {
        throw std::invalid_argument("CvdGenerator: need 0 <= worker < n_workers");
    }
    std::uint64_t vp = params.v_prime_u64();
    points_.resize(std::size_t(v_) * dims_);
    for (std::uint32_t i = 0; i < v_; ++i) {
        std::uint64_t p = sel.points[i];
        if (p < 1 || p > vp) throw std::invalid_argument("CvdGenerator: selection out of range");
        auto col = pg_point(params, p);
        for (unsigned r = 0; r < dims_; ++r) points_[std::size_t(i) * dims_ + r] = col[r];
    }
}

std::optional<Block> CvdGenerator::next() {
    while (!it_.done()) {
        if (it_.index() % n_workers_ != worker_) {
            it_.advance();
            continue;
        }
        const FieldMatrix& M = it_.matrix();
        Block block;
        for (std::uint32_t i = 0; i < v_; ++i) {
            if (in_null_space(M, &points_[std::size_t(i) * dims_], dims_)) {
                block.push_back(i + 1);
            }
        }
        it_.advance();
        return block;
    }
    return std::nullopt;
}

}  // namespace coverd
