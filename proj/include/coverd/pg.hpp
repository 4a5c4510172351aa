#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coverd/gf.hpp"

namespace coverd {

/// A block: strictly increasing 1-based indices. May be empty (partial
/// induction can empty a block).
using Block = std::vector<std::uint32_t>;

/// Projective-geometry covering parameters. Blocks are the (t-1)-flats of
/// PG(m, q); the covering has v' = (q^{m+1}-1)/(q-1) points and every block
/// holds k' = (q^t-1)/(q-1) of them.
struct PgParams {
    std::uint32_t q = 2;
    unsigned m = 2;
    unsigned t = 2;

    PgParams() = default;  // the Fano plane
    PgParams(std::uint32_t q_, unsigned m_, unsigned t_);

    BigInt v_prime() const;
    BigInt k_prime() const;
    /// v' as a machine integer; throws if it does not fit.
    std::uint64_t v_prime_u64() const;
    std::uint64_t k_prime_u64() const;
};

/// Ordered selection of v distinct point indices from [1, v'], plus the seed
/// it was drawn with. Position i (1-based) of the selection becomes index i
/// of the induced covering.
struct InducedSelection {
    std::vector<std::uint64_t> points;
    std::uint64_t seed = 0;
};

InducedSelection draw_selection(const PgParams& params, std::uint64_t v,
                                std::uint64_t seed);

/// Canonical representative of the idx-th projective point (1-based):
/// for d = 0..m in order, the vectors with first nonzero coordinate 1 at
/// position d, trailing coordinates enumerated lexicographically.
std::vector<std::uint32_t> pg_point(const PgParams& params, std::uint64_t idx);

/// The (m+1) x v' matrix whose columns are all canonical points in index
/// order. Only sensible when v' fits in memory.
FieldMatrix pg_points(const PgParams& params);

/// j-th block of the PG covering, as point indices over [1, v']:
/// the null space of rref_enumerate(m-t+1, m+1, q, j) intersected with the
/// canonical points. Always has exactly k' elements.
Block pg_block(const PgParams& params, std::uint64_t j);

/// BIBD parameters (v', b, r, k', lambda) of the PG covering.
struct BibdParams {
    BigInt v, b, r, k, lambda;
};
BibdParams bibd_parameters(const PgParams& params);

/// Streaming generator of the partially-induced covering (the CVD).
/// Emits, for each matrix index j with j % n_workers == worker in increasing
/// j, the induced block {i in [v] : M_j * P_L[:, i] = 0}, where column i of
/// P_L is the canonical point of selection element i. Blocks are emitted
/// without ever materializing the full covering; empty and undersized blocks
/// are emitted too (they belong to the design and are filtered downstream).
class CvdGenerator {
public:
    CvdGenerator(const PgParams& params, const InducedSelection& sel,
                 unsigned worker, unsigned n_workers);

    /// Next owned block, or nullopt when the stream is exhausted.
    std::optional<Block> next();

    BigInt total_blocks() const { return total_; }
    std::uint32_t v() const { return v_; }

private:
    PgParams params_;
    unsigned worker_, n_workers_;
    std::uint32_t v_;
    unsigned rows_;                        // m - t + 1
    unsigned dims_;                        // m + 1
    std::vector<std::uint32_t> points_;    // column-major (m+1) x v
    RrefEnumerator it_;
    BigInt total_;
};

}  // namespace coverd
