#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "coverd/pg.hpp"
#include "coverd/rng.hpp"
#include "testutil.hpp"

using namespace coverd;

namespace {

std::vector<Block> collect(CvdGenerator& gen) {
    std::vector<Block> out;
    while (auto b = gen.next()) out.push_back(std::move(*b));
    return out;
}

std::vector<Block> full_covering(const PgParams& params) {
    std::uint64_t vp = params.v_prime_u64();
    InducedSelection identity;
    identity.points.resize(vp);
    for (std::uint64_t i = 0; i < vp; ++i) identity.points[i] = i + 1;
    CvdGenerator gen(params, identity, 0, 1);
    return collect(gen);
}

std::multiset<std::size_t> size_multiset(const std::vector<Block>& blocks) {
    std::multiset<std::size_t> out;
    for (const auto& b : blocks) out.insert(b.size());
    return out;
}

}  // namespace

TEST_CASE("parameter validation and derived sizes") {
    CHECK_THROWS_AS(PgParams(4, 3, 2), std::invalid_argument);   // q not prime
    CHECK_THROWS_AS(PgParams(3, 2, 3), std::invalid_argument);   // m < t
    CHECK_THROWS_AS(PgParams(3, 3, 1), std::invalid_argument);   // t < 2
    CHECK(PgParams(2, 2, 2).v_prime() == 7);
    CHECK(PgParams(3, 5, 5).v_prime() == 364);
    CHECK(PgParams(3, 5, 5).k_prime() == 121);
    CHECK(PgParams(17, 5, 5).v_prime() == 1508598);
    CHECK(PgParams(17, 5, 5).k_prime() == 88741);
}

TEST_CASE("point matrix: canonical representatives") {
    PgParams fano(2, 2, 2);
    FieldMatrix P = pg_points(fano);
    CHECK(P.cols == 7);
    // q=2: exactly the nonzero vectors of F_2^3
    std::set<std::vector<std::uint32_t>> cols;
    for (std::uint32_t c = 0; c < P.cols; ++c) {
        cols.insert({P.at(0, c), P.at(1, c), P.at(2, c)});
    }
    CHECK(cols.size() == 7);
    CHECK(cols.count({0, 0, 0}) == 0);

    CHECK(pg_points(PgParams(3, 5, 5)).cols == 364);

    // first nonzero entry is 1 and no two columns are scalar multiples
    for (std::uint32_t q : {2u, 3u, 5u}) {
        for (unsigned m = 2; m <= 3; ++m) {
            PgParams params(q, m, 2);
            PrimeField f(q);
            FieldMatrix pts = pg_points(params);
            for (std::uint32_t c = 0; c < pts.cols; ++c) {
                unsigned r = 0;
                while (r < pts.rows && pts.at(r, c) == 0) ++r;
                REQUIRE(r < pts.rows);
                CHECK(pts.at(r, c) == 1);
            }
            for (std::uint32_t a = 0; a < pts.cols; ++a) {
                for (std::uint32_t b = a + 1; b < pts.cols; ++b) {
                    for (std::uint32_t s = 1; s < q; ++s) {
                        bool equal = true;
                        for (std::uint32_t r = 0; r < pts.rows && equal; ++r) {
                            equal = pts.at(r, a) == f.mul(s, pts.at(r, b));
                        }
                        CHECK_FALSE(equal);
                    }
                }
            }
        }
    }
}

TEST_CASE("pg blocks are flats of the right size") {
    PgParams fano(2, 2, 2);
    std::vector<Block> blocks;
    for (std::uint64_t j = 0; j < 7; ++j) blocks.push_back(pg_block(fano, j));
    // Fano parameters admit a unique design up to isomorphism; checking the
    // BIBD axioms pins it without fixing a point labeling.
    std::map<std::uint32_t, int> point_count;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> pair_count;
    for (const auto& b : blocks) {
        CHECK(b.size() == 3);
        for (std::size_t i = 0; i < b.size(); ++i) {
            ++point_count[b[i]];
            for (std::size_t j2 = i + 1; j2 < b.size(); ++j2) {
                ++pair_count[{b[i], b[j2]}];
            }
        }
    }
    CHECK(point_count.size() == 7);
    for (auto [p, n] : point_count) CHECK(n == 3);
    CHECK(pair_count.size() == 21);
    for (auto [p, n] : pair_count) CHECK(n == 1);

    for (std::uint64_t j : {0ull, 3ull, 11ull}) {
        CHECK(pg_block(PgParams(3, 3, 2), j).size() == 4);  // k' = (3^2-1)/2
    }

    // (q=3,m=3,t=2): all pairs of the 40 points covered by the 130 blocks
    PgParams p332(3, 3, 2);
    auto blocks332 = full_covering(p332);
    CHECK(blocks332.size() == 130);
    std::set<std::pair<std::uint32_t, std::uint32_t>> covered;
    for (const auto& b : blocks332) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            for (std::size_t j2 = i + 1; j2 < b.size(); ++j2) {
                covered.insert({b[i], b[j2]});
            }
        }
    }
    CHECK(covered.size() == 40u * 39 / 2);
}

TEST_CASE("bibd parameters and identities") {
    auto fano = bibd_parameters(PgParams(2, 2, 2));
    CHECK(fano.v == 7);
    CHECK(fano.b == 7);
    CHECK(fano.r == 3);
    CHECK(fano.k == 3);
    CHECK(fano.lambda == 1);

    for (auto [q, m, t] : {std::tuple<std::uint32_t, unsigned, unsigned>{2, 2, 2},
                           {3, 3, 2},
                           {2, 4, 3},
                           {5, 3, 2},
                           {3, 4, 3}}) {
        auto p = bibd_parameters(PgParams(q, m, t));
        CHECK(p.r * p.v == p.b * p.k);
        CHECK(p.lambda * (p.v - 1) == p.r * (p.k - 1));
    }

    // occurrence counts in the generated covering match r and lambda exactly
    PgParams p332(3, 3, 2);
    auto blocks = full_covering(p332);
    auto params = bibd_parameters(p332);
    CHECK(params.r == 13);
    CHECK(params.lambda == 1);
    std::map<std::uint32_t, int> occurrences;
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> pair_occurrences;
    for (const auto& b : blocks) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            ++occurrences[b[i]];
            for (std::size_t j = i + 1; j < b.size(); ++j) {
                ++pair_occurrences[{b[i], b[j]}];
            }
        }
    }
    CHECK(occurrences.size() == 40);
    for (auto [point, n] : occurrences) CHECK(n == 13);
    CHECK(pair_occurrences.size() == 40u * 39 / 2);
    for (auto [pair, n] : pair_occurrences) CHECK(n == 1);
}

TEST_CASE("block count matches rref_count") {
    for (auto [q, m, t] : {std::tuple<std::uint32_t, unsigned, unsigned>{2, 2, 2},
                           {2, 3, 2},
                           {3, 3, 3},
                           {5, 2, 2}}) {
        PgParams params(q, m, t);
        auto blocks = full_covering(params);
        CHECK(BigInt(blocks.size()) ==
              rref_count(m - t + 1, m + 1, PrimeField(q)));
    }
}

TEST_CASE("fano partial inductions, labeling-invariant") {
    PgParams fano(2, 2, 2);
    auto lines = full_covering(fano);
    REQUIRE(lines.size() == 7);

    // complement of a line: sizes {0, 2, 2, 2, 2, 2, 2}
    for (const auto& line : lines) {
        Block complement;
        for (std::uint32_t p = 1; p <= 7; ++p) {
            if (!std::binary_search(line.begin(), line.end(), p)) complement.push_back(p);
        }
        InducedSelection sel;
        for (auto p : complement) sel.points.push_back(p);
        CvdGenerator gen(fano, sel, 0, 1);
        auto sizes = size_multiset(collect(gen));
        CHECK(sizes == std::multiset<std::size_t>{0, 2, 2, 2, 2, 2, 2});
    }

    // a line plus one extra point: sizes {3, 2, 2, 2, 1, 1, 1}
    const auto& line = lines.front();
    std::uint32_t extra = 1;
    while (std::binary_search(line.begin(), line.end(), extra)) ++extra;
    InducedSelection sel;
    for (auto p : line) sel.points.push_back(p);
    sel.points.push_back(extra);
    CvdGenerator gen(fano, sel, 0, 1);
    auto sizes = size_multiset(collect(gen));
    CHECK(sizes == std::multiset<std::size_t>{3, 2, 2, 2, 1, 1, 1});
}

TEST_CASE("partial induction covers all t-subsets of the selection") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        PgParams params(3, 3, 2);
        InducedSelection sel = draw_selection(params, 12, seed);
        CvdGenerator gen(params, sel, 0, 1);
        auto blocks = collect(gen);
        std::set<std::pair<std::uint32_t, std::uint32_t>> covered;
        for (const auto& b : blocks) {
            for (std::size_t i = 0; i < b.size(); ++i) {
                for (std::size_t j = i + 1; j < b.size(); ++j) {
                    covered.insert({b[i], b[j]});
                }
            }
        }
        CHECK(covered.size() == 12u * 11 / 2);
    }
}

TEST_CASE("worker partition reassembles the full stream") {
    PgParams params(3, 3, 2);
    InducedSelection sel = draw_selection(params, 15, 99);
    CvdGenerator whole(params, sel, 0, 1);
    auto reference = collect(whole);
    std::multiset<Block> reference_set(reference.begin(), reference.end());
    for (unsigned n : {1u, 2u, 3u, 8u}) {
        std::multiset<Block> combined;
        for (unsigned w = 0; w < n; ++w) {
            CvdGenerator gen(params, sel, w, n);
            while (auto b = gen.next()) combined.insert(std::move(*b));
        }
        CHECK(combined == reference_set);
    }
}

TEST_CASE("stream is deterministic") {
    PgParams params(2, 4, 2);
    InducedSelection sel = draw_selection(params, 20, 5);
    CvdGenerator a(params, sel, 1, 3), b(params, sel, 1, 3);
    CHECK(collect(a) == collect(b));
}

TEST_CASE("selection draw is seeded and within range") {
    PgParams params(17, 5, 5);
    auto sel = draw_selection(params, 784, 42);
    CHECK(sel.points.size() == 784);
    std::set<std::uint64_t> unique(sel.points.begin(), sel.points.end());
    CHECK(unique.size() == 784);
    CHECK(*unique.rbegin() <= params.v_prime_u64());
    auto again = draw_selection(params, 784, 42);
    CHECK(again.points == sel.points);
}

TEST_CASE("identity selection reproduces pg blocks") {
    PgParams params(2, 3, 2);
    auto via_stream = full_covering(params);
    std::vector<Block> via_random_access;
    BigInt count = rref_count(2, 4, PrimeField(2));
    for (std::uint64_t j = 0; j < count; ++j) {
        via_random_access.push_back(pg_block(params, j));
    }
    CHECK(via_stream == via_random_access);
}
