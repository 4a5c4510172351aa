#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "coverd/gf.hpp"
#include "coverd/rng.hpp"

using namespace coverd;

TEST_CASE("prime validation") {
    CHECK(is_prime(2));
    CHECK(is_prime(23));
    CHECK(is_prime(2147483647));  // 2^31 - 1
    CHECK_FALSE(is_prime(1));
    CHECK_FALSE(is_prime(9));
    CHECK_THROWS_AS(PrimeField(1), std::invalid_argument);
    CHECK_THROWS_AS(PrimeField(15), std::invalid_argument);
}

TEST_CASE("field operation examples") {
    PrimeField f7(7);
    CHECK(f7.mul(3, 5) == 1);  // 15 mod 7
    PrimeField f23(23);
    CHECK(f23.inv(2) == 12);  // 2*12 = 24 = 1 mod 23
    PrimeField f2(2);
    CHECK(f2.add(1, 1) == 0);
    CHECK_THROWS_AS(f23.inv(0), std::domain_error);
}

TEST_CASE("field axioms, exhaustive for small q and sampled for large") {
    for (std::uint32_t q : {2u, 3u, 5u, 7u}) {
        PrimeField f(q);
        for (std::uint32_t a = 0; a < q; ++a) {
            for (std::uint32_t b = 0; b < q; ++b) {
                CHECK(f.add(a, b) == f.add(b, a));
                CHECK(f.mul(a, b) == f.mul(b, a));
                if (b != 0) CHECK(f.mul(b, f.inv(b)) == 1);
                CHECK(f.sub(f.add(a, b), b) == a);
                for (std::uint32_t c = 0; c < q; ++c) {
                    CHECK(f.add(f.add(a, b), c) == f.add(a, f.add(b, c)));
                    CHECK(f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c)));
                    CHECK(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }
    PrimeField big(2147483647);
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        std::uint32_t a = std::uint32_t(rng.below(big.order()));
        std::uint32_t b = std::uint32_t(rng.below(big.order()));
        std::uint32_t c = std::uint32_t(rng.below(big.order()));
        CHECK(big.mul(a, b) == big.mul(b, a));
        CHECK(big.mul(a, big.add(b, c)) == big.add(big.mul(a, b), big.mul(a, c)));
        if (a != 0) CHECK(big.mul(a, big.inv(a)) == 1);
    }
}

TEST_CASE("matrix multiply") {
    PrimeField f5(5);
    FieldMatrix id(3, 3, 5);
    for (std::uint32_t i = 0; i < 3; ++i) id.set(i, i, 1);
    FieldMatrix p(3, 4, 5);
    Rng rng(7);
    for (auto& e : p.entries) e = std::uint32_t(rng.below(5));
    CHECK(mat_mul(id, p) == p);

    FieldMatrix a(1, 2, 2), b(2, 1, 2);
    a.entries = {1, 1};
    b.entries = {1, 1};
    CHECK(mat_mul(a, b).entries == std::vector<std::uint32_t>{0});

    // random 3x3 against a naive triple loop
    for (int trial = 0; trial < 20; ++trial) {
        FieldMatrix x(3, 3, 5), y(3, 3, 5);
        for (auto& e : x.entries) e = std::uint32_t(rng.below(5));
        for (auto& e : y.entries) e = std::uint32_t(rng.below(5));
        FieldMatrix naive(3, 3, 5);
        for (std::uint32_t i = 0; i < 3; ++i) {
            for (std::uint32_t j = 0; j < 3; ++j) {
                std::uint32_t acc = 0;
                for (std::uint32_t k = 0; k < 3; ++k) {
                    acc = (acc + x.at(i, k) * y.at(k, j)) % 5;
                }
                naive.set(i, j, acc);
            }
        }
        CHECK(mat_mul(x, y) == naive);
    }

    FieldMatrix bad(2, 2, 5);
    CHECK_THROWS_AS(mat_mul(a, bad), std::invalid_argument);
}

TEST_CASE("gaussian binomial values") {
    PrimeField f2(2), f23(23), f19(19), f3(3);
    CHECK(rref_count(2, 3, f2) == 7);           // Fano plane block count
    CHECK(rref_count(1, 5, f23) == 292561);
    CHECK(rref_count(4, 5, f19) == 137561);     // [5 4]_q == [5 1]_q
    CHECK(rref_count(1, 5, f19) == 137561);
    CHECK(rref_count(1, 3, f3) == 13);
    CHECK(gaussian_binomial(6, 3, 5) == 2558556);
    CHECK(gaussian_binomial(6, 5, 17) == 1508598);
    CHECK(gaussian_binomial(4, 4, 7) == 1);
    CHECK_THROWS_AS(rref_count(0, 3, f2), std::invalid_argument);
    CHECK_THROWS_AS(rref_count(4, 3, f2), std::invalid_argument);
}

namespace {

// Brute-force reference: every full-rank RREF matrix by scanning all q^(s*n)
// matrices.
std::set<std::vector<std::uint32_t>> brute_force_rref(unsigned s, unsigned n,
                                                      std::uint32_t q) {
    std::set<std::vector<std::uint32_t>> out;
    const std::size_t cells = std::size_t(s) * n;
    std::vector<std::uint32_t> entries(cells, 0);
    while (true) {
        FieldMatrix m(s, n, q);
        m.entries = entries;
        if (is_full_rank_rref(m)) out.insert(entries);
        std::size_t i = 0;
        for (; i < cells; ++i) {
            if (entries[i] + 1 < q) {
                ++entries[i];
                break;
            }
            entries[i] = 0;
        }
        if (i == cells) break;
    }
    return out;
}

}  // namespace

TEST_CASE("rref enumeration matches brute force") {
    struct Case {
        unsigned s, n;
        std::uint32_t q;
    };
    for (auto [s, n, q] : {Case{2, 3, 2}, Case{1, 3, 3}, Case{2, 4, 2}, Case{2, 3, 3},
                           Case{3, 4, 2}, Case{1, 2, 5}}) {
        PrimeField f(q);
        auto expected = brute_force_rref(s, n, q);
        BigInt count = rref_count(s, n, f);
        REQUIRE(count == expected.size());
        std::set<std::vector<std::uint32_t>> seen;
        for (std::uint64_t j = 0; j < count; ++j) {
            FieldMatrix m = rref_enumerate(s, n, f, j);
            CHECK(is_full_rank_rref(m));
            CHECK(rank(m) == s);
            seen.insert(m.entries);
        }
        CHECK(seen == expected);  // injective and onto
        CHECK_THROWS_AS(rref_enumerate(s, n, f, count.convert_to<std::uint64_t>()),
                        std::out_of_range);
    }
}

TEST_CASE("first rref matrix is the leading identity block") {
    PrimeField f5(5);
    FieldMatrix m = rref_enumerate(2, 4, f5, 0);
    for (std::uint32_t r = 0; r < 2; ++r) {
        for (std::uint32_t c = 0; c < 4; ++c) {
            CHECK(m.at(r, c) == (r == c ? 1u : 0u));
        }
    }
}

TEST_CASE("enumerator cursor agrees with random access") {
    for (auto [s, n, q] : {std::tuple<unsigned, unsigned, std::uint32_t>{2, 4, 3},
                           {1, 3, 5},
                           {3, 5, 2}}) {
        PrimeField f(q);
        RrefEnumerator it(s, n, f);
        BigInt count = rref_count(s, n, f);
        std::uint64_t total = count.convert_to<std::uint64_t>();
        for (std::uint64_t j = 0; j < total; ++j) {
            REQUIRE_FALSE(it.done());
            CHECK(it.index() == j);
            CHECK(it.matrix() == rref_enumerate(s, n, f, j));
            it.advance();
        }
        CHECK(it.done());
    }
}

TEST_CASE("pivot-set block sizes sum to the count") {
    // checked via full enumeration: advancing the cursor visits each matrix
    // exactly once, so reaching done() at rref_count verifies the identity
    for (auto [s, n, q] : {std::tuple<unsigned, unsigned, std::uint32_t>{2, 5, 3},
                           {3, 6, 2},
                           {2, 4, 5}}) {
        PrimeField f(q);
        BigInt count = rref_count(s, n, f);
        REQUIRE(count < 100000);
        RrefEnumerator it(s, n, f);
        std::uint64_t steps = 0;
        while (!it.done()) {
            it.advance();
            ++steps;
        }
        CHECK(BigInt(steps) == count);
    }
}
