#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace coverd {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Deterministic primality test by trial division (n fits in 63 bits).
bool is_prime(std::uint64_t n);

/// Arithmetic in GF(q) for a prime modulus q, 2 <= q <= 2^31-1.
/// Element values are always kept reduced into [0, q).
class PrimeField {
public:
    explicit PrimeField(std::uint32_t q);

    std::uint32_t order() const { return q_; }

    std::uint32_t add(std::uint32_t a, std::uint32_t b) const {
        std::uint64_t s = std::uint64_t(a) + b;
        return std::uint32_t(s >= q_ ? s - q_ : s);
    }
    std::uint32_t sub(std::uint32_t a, std::uint32_t b) const {
        return a >= b ? a - b : std::uint32_t(a + std::uint64_t(q_) - b);
    }
    std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
        return std::uint32_t(std::uint64_t(a) * b % q_);
    }
    /// Multiplicative inverse via the extended Euclidean algorithm.
    /// Throws std::domain_error for a == 0.
    std::uint32_t inv(std::uint32_t a) const;

    bool operator==(const PrimeField& o) const { return q_ == o.q_; }

private:
    std::uint32_t q_;
};

/// Dense row-major matrix over GF(q).
struct FieldMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t q = 0;
    std::vector<std::uint32_t> entries;  // rows*cols values, each < q

    FieldMatrix() = default;
    FieldMatrix(std::uint32_t r, std::uint32_t c, std::uint32_t modulus)
        : rows(r), cols(c), q(modulus), entries(std::size_t(r) * c, 0) {}

    std::uint32_t at(std::uint32_t r, std::uint32_t c) const {
        return entries[std::size_t(r) * cols + c];
    }
    void set(std::uint32_t r, std::uint32_t c, std::uint32_t value) {
        entries[std::size_t(r) * cols + c] = value;
    }
    bool operator==(const FieldMatrix& o) const = default;
};

/// Matrix product over GF(q). Throws std::invalid_argument on shape or
/// field mismatch.
FieldMatrix mat_mul(const FieldMatrix& a, const FieldMatrix& b);

/// Rank of a matrix over GF(q), by Gaussian elimination on a copy.
std::uint32_t rank(const FieldMatrix& m);

/// Returns true when m is in reduced row echelon form with no zero rows.
bool is_full_rank_rref(const FieldMatrix& m);

/// Gaussian binomial coefficient [n choose s]_q, exact.
BigInt gaussian_binomial(unsigned n, unsigned s, std::uint32_t q);

/// Number of full-rank s x n matrices over GF(q) in reduced row echelon
/// form; equals the Gaussian binomial [n choose s]_q. Requires 1 <= s <= n.
BigInt rref_count(unsigned s, unsigned n, const PrimeField& field);

/// j-th full-rank s x n RREF matrix over GF(q) under the fixed order:
/// pivot-column subsets in lexicographic order, then free entries as
/// little-endian base-q digits in row-major position order.
/// Requires 0 <= j < rref_count(s, n, q).
FieldMatrix rref_enumerate(unsigned s, unsigned n, const PrimeField& field,
                           std::uint64_t j);

/// Incremental cursor over the same sequence as rref_enumerate, without
/// re-deriving the pivot decomposition per index. Used by the streaming
/// covering generator, where consecutive indices are visited in order.
class RrefEnumerator {
public:
    RrefEnumerator(unsigned s, unsigned n, const PrimeField& field);

    bool done() const { return done_; }
    std::uint64_t index() const { return index_; }
    /// Matrix for the current index. Valid until the next advance().
    const FieldMatrix& matrix();
    void advance();

private:
    void reset_free_positions();

    unsigned s_, n_;
    PrimeField field_;
    std::vector<std::uint32_t> pivots_;  // increasing column indices
    // Free coordinates in row-major order; digit i is the i-th position and
    // is the least significant when i == 0.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> free_pos_;
    std::vector<std::uint32_t> digits_;
    FieldMatrix mat_;
    bool mat_dirty_ = true;
    std::uint64_t index_ = 0;
    bool done_ = false;
};

}  // namespace coverd
