#include "coverd/gf.hpp"

namespace coverd {

bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    if (n < 4) return true;
    if (n % 2 == 0) return false;
    for (std::uint64_t d = 3; d * d <= n; d += 2) {
        if (n % d == 0) return false;
    }
    return true;
}

PrimeField::PrimeField(std::uint32_t q) : q_(q) {
    if (q < 2 || q > 0x7fffffffu || !is_prime(q)) {
        throw std::invalid_argument("PrimeField: modulus " + std::to_string(q) +
                                    " is not a prime in [2, 2^31-1]");
    }
}

std::uint32_t PrimeField::inv(std::uint32_t a) const {
    if (a == 0) throw std::domain_error("PrimeField: inverse of zero");
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = q_, new_r = a % q_;
    while (new_r != 0) {
        std::int64_t quot = r / new_r;
        std::int64_t tmp = t - quot * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - quot * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (t < 0) t += q_;
    return std::uint32_t(t);
}

FieldMatrix mat_mul(const FieldMatrix& a, const FieldMatrix& b) {
    if (a.q != b.q) throw std::invalid_argument("mat_mul: field mismatch");
    if (a.cols != b.rows) throw std::invalid_argument("mat_mul: shape mismatch");
    FieldMatrix out(a.rows, b.cols, a.q);
    const std::uint64_t q = a.q;
    for (std::uint32_t i = 0; i < a.rows; ++i) {
        for (std::uint32_t j = 0; j < b.cols; ++j) {
            std::uint64_t acc = 0;
            for (std::uint32_t k = 0; k < a.cols; ++k) {
                acc = (acc + std::uint64_t(a.at(i, k)) * b.at(k, j)) % q;
            }
            out.set(i, j, std::uint32_t(acc));
        }
    }
    return out;
}

std::uint32_t rank(const FieldMatrix& m) {
    FieldMatrix a = m;
    PrimeField f(a.q);
    std::uint32_t r = 0;
    for (std::uint32_t col = 0; col < a.cols && r < a.rows; ++col) {
        std::uint32_t pivot = r;
        while (pivot < a.rows && a.at(pivot, col) == 0) ++pivot;
        if (pivot == a.rows) continue;
        for (std::uint32_t c = 0; c < a.cols; ++c) {
            std::uint32_t tmp = a.at(r, c);
            a.set(r, c, a.at(pivot, c));
            a.set(pivot, c, tmp);
        }
        std::uint32_t scale = f.inv(a.at(r, col));
        for (std::uint32_t c = col; c < a.cols; ++c) a.set(r, c, f.mul(a.at(r, c), scale));
        for (std::uint32_t i = 0; i < a.rows; ++i) {
            if (i == r || a.at(i, col) == 0) continue;
            std::uint32_t factor = a.at(i, col);
            for (std::uint32_t c = col; c < a.cols; ++c) {
                a.set(i, c, f.sub(a.at(i, c), f.mul(factor, a.at(r, c))));
            }
        }
        ++r;
    }
    return r;
}

bool is_full_rank_rref(const FieldMatrix& m) {
    std::int64_t prev_pivot = -1;
    for (std::uint32_t i = 0; i < m.rows; ++i) {
        std::uint32_t col = 0;
        while (col < m.cols && m.at(i, col) == 0) ++col;
        if (col == m.cols) return false;  // zero row
        if (std::int64_t(col) <= prev_pivot) return false;
        if (m.at(i, col) != 1) return false;
        for (std::uint32_t r = 0; r < m.rows; ++r) {
            if (r != i && m.at(r, col) != 0) return false;
        }
        prev_pivot = col;
    }
    return true;
}

BigInt gaussian_binomial(unsigned n, unsigned s, std::uint32_t q) {
    if (s > n) return 0;
    BigInt num = 1, den = 1;
    const BigInt bq = q;
    for (unsigned i = 0; i < s; ++i) {
        num *= boost::multiprecision::pow(bq, n - i) - 1;
        den *= boost::multiprecision::pow(bq, i + 1) - 1;
    }
    BigInt quot, rem;
    boost::multiprecision::divide_qr(num, den, quot, rem);
    if (rem != 0) throw std::logic_error("gaussian_binomial: inexact division");
    return quot;
}

BigInt rref_count(unsigned s, unsigned n, const PrimeField& field) {
    if (s < 1 || s > n) throw std::invalid_argument("rref_count: need 1 <= s <= n");
    return gaussian_binomial(n, s, field.order());
}

namespace {

// Free coordinates of an RREF matrix with the given pivot columns: every
// (row, col) with col non-pivot and col right of the row's own pivot.
std::vector<std::pair<std::uint32_t, std::uint32_t>> free_positions(
    const std::vector<std::uint32_t>& pivots, unsigned n) {
    std::vector<bool> is_pivot(n, false);
    for (auto p : pivots) is_pivot[p] = true;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pos;
    for (std::uint32_t i = 0; i < pivots.size(); ++i) {
        for (std::uint32_t c = pivots[i] + 1; c < n; ++c) {
            if (!is_pivot[c]) pos.emplace_back(i, c);
        }
    }
    return pos;
}

bool next_combination(std::vector<std::uint32_t>& comb, unsigned n) {
    const unsigned s = unsigned(comb.size());
    for (unsigned i = s; i-- > 0;) {
        if (comb[i] < n - s + i) {
            ++comb[i];
            for (unsigned j = i + 1; j < s; ++j) comb[j] = comb[j - 1] + 1;
            return true;
        }
    }
    return false;
}

void fill_matrix(FieldMatrix& m, const std::vector<std::uint32_t>& pivots,
                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>& free_pos,
                 const std::vector<std::uint32_t>& digits) {
    std::fill(m.entries.begin(), m.entries.end(), 0u);
    for (std::uint32_t i = 0; i < pivots.size(); ++i) m.set(i, pivots[i], 1);
    for (std::size_t i = 0; i < free_pos.size(); ++i) {
        m.set(free_pos[i].first, free_pos[i].second, digits[i]);
    }
}

}  // namespace

FieldMatrix rref_enumerate(unsigned s, unsigned n, const PrimeField& field,
                           std::uint64_t j) {
    if (s < 1 || s > n) throw std::invalid_argument("rref_enumerate: need 1 <= s <= n");
    const BigInt q = field.order();
    std::vector<std::uint32_t> pivots(s);
    for (unsigned i = 0; i < s; ++i) pivots[i] = i;
    BigInt rest = j;
    do {
        auto pos = free_positions(pivots, n);
        BigInt span = boost::multiprecision::pow(q, unsigned(pos.size()));
        if (rest < span) {
            std::vector<std::uint32_t> digits(pos.size(), 0);
            for (std::size_t i = 0; i < pos.size() && rest != 0; ++i) {
                digits[i] = std::uint32_t(rest % q);
                rest /= q;
            }
            FieldMatrix m(s, n, field.order());
            fill_matrix(m, pivots, pos, digits);
            return m;
        }
        rest -= span;
    } while (next_combination(pivots, n));
    throw std::out_of_range("rref_enumerate: index out of range");
}

RrefEnumerator::RrefEnumerator(unsigned s, unsigned n, const PrimeField& field)
    : s_(s), n_(n), field_(field), mat_(s, n, field.order()) {
    if (s < 1 || s > n) throw std::invalid_argument("RrefEnumerator: need 1 <= s <= n");
    pivots_.resize(s);
    for (unsigned i = 0; i < s; ++i) pivots_[i] = i;
    reset_free_positions();
}

void RrefEnumerator::reset_free_positions() {
    free_pos_ = free_positions(pivots_, n_);
    digits_.assign(free_pos_.size(), 0);
}

const FieldMatrix& RrefEnumerator::matrix() {
    if (mat_dirty_) {
        fill_matrix(mat_, pivots_, free_pos_, digits_);
        mat_dirty_ = false;
    }
    return mat_;
}

void RrefEnumerator::advance() {
    if (done_) return;
    ++index_;
    mat_dirty_ = true;
    const std::uint32_t qm1 = field_.order() - 1;
    for (std::size_t i = 0; i < digits_.size(); ++i) {
        if (digits_[i] < qm1) {
            ++digits_[i];
            return;
        }
        digits_[i] = 0;
    }
    if (next_combination(pivots_, n_)) {
        reset_free_positions();
    } else {
        done_ = true;
    }
}

}  // namespace coverd
