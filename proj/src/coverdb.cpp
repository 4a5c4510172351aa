#include "coverd/coverdb.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "coverd/rng.hpp"

namespace coverd {

namespace {

// C(n, r) for r <= 8; large enough for every subset rank used here.
class Binomials {
public:
    Binomials(std::uint32_t n, unsigned r) : r_(r), table_((n + 1) * (r + 1), 0) {
        for (std::uint32_t i = 0; i <= n; ++i) {
            at(i, 0) = 1;
            for (unsigned j = 1; j <= r && j <= i; ++j) {
                at(i, j) = at(i - 1, j - 1) + (i > j ? at(i - 1, j) : 0);
            }
        }
    }
    std::uint64_t operator()(std::uint32_t n, unsigned r) const {
        return r > r_ ? 0 : table_[std::size_t(n) * (r_ + 1) + r];
    }

private:
    std::uint64_t& at(std::uint32_t n, unsigned r) {
        return table_[std::size_t(n) * (r_ + 1) + r];
    }
    unsigned r_;
    std::vector<std::uint64_t> table_;
};

// Colex rank of a sorted 0-based t-subset.
std::uint64_t subset_rank(const std::uint32_t* e, unsigned t, const Binomials& C) {
    std::uint64_t r = 0;
    for (unsigned i = 0; i < t; ++i) r += C(e[i], i + 1);
    return r;
}

class CoverageMask {
public:
    CoverageMask(std::uint64_t n) : n_(n), uncovered_(n), bits_((n + 63) / 64, 0) {}

    bool covered(std::uint64_t r) const { return (bits_[r >> 6] >> (r & 63)) & 1; }
    void cover(std::uint64_t r) {
        std::uint64_t mask = 1ull << (r & 63);
        if (!(bits_[r >> 6] & mask)) {
            bits_[r >> 6] |= mask;
            --uncovered_;
        }
    }
    std::uint64_t uncovered() const { return uncovered_; }

private:
    std::uint64_t n_;
    std::uint64_t uncovered_;
    std::vector<std::uint64_t> bits_;
};

// Visit all sorted t-subsets of `set` (0-based values), calling fn(ptr).
template <typename Fn>
void for_each_subset(const std::vector<std::uint32_t>& set, unsigned t, Fn&& fn) {
    const unsigned n = unsigned(set.size());
    if (t > n) return;
    if (t == 0) {
        std::uint32_t none = 0;
        fn(&none);
        return;
    }
    std::vector<unsigned> ix(t);
    for (unsigned i = 0; i < t; ++i) ix[i] = i;
    std::vector<std::uint32_t> sub(t);
    while (true) {
        for (unsigned i = 0; i < t; ++i) sub[i] = set[ix[i]];
        fn(sub.data());
        unsigned i = t;
        while (i-- > 0) {
            if (ix[i] < n - t + i) {
                ++ix[i];
                for (unsigned j = i + 1; j < t; ++j) ix[j] = ix[j - 1] + 1;
                break;
            }
            if (i == 0) return;
        }
    }
}

void mark_block(const Block& block, unsigned t, const Binomials& C, CoverageMask& mask) {
    std::vector<std::uint32_t> zero_based(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) zero_based[i] = block[i] - 1;
    for_each_subset(zero_based, t, [&](const std::uint32_t* sub) {
        mask.cover(subset_rank(sub, t, C));
    });
}

void canonicalize(std::vector<Block>& blocks) {
    std::sort(blocks.begin(), blocks.end());
    blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
}

}  // namespace

CoveringFile greedy_cover(std::uint32_t v, std::uint32_t k, unsigned t,
                          std::uint64_t cap) {
    if (t < 1 || k < t || v < k) {
        throw std::invalid_argument("greedy_cover: need 1 <= t <= k <= v");
    }
    CoveringFile out{v, k, t, {}};
    if (k == v) {
        Block all(v);
        for (std::uint32_t i = 0; i < v; ++i) all[i] = i + 1;
        out.blocks.push_back(std::move(all));
        return out;
    }

    Binomials C(v, t);
    CoverageMask mask(C(v, t));

    // Lexicographic cursor over t-subsets; the smallest uncovered subset
    // only moves forward as coverage grows.
    std::vector<std::uint32_t> cursor(t);
    for (unsigned i = 0; i < t; ++i) cursor[i] = i;
    auto cursor_next = [&]() {
        unsigned i = t;
        while (i-- > 0) {
            if (cursor[i] < v - t + i) {
                ++cursor[i];
                for (unsigned j = i + 1; j < t; ++j) cursor[j] = cursor[j - 1] + 1;
                return true;
            }
        }
        return false;
    };

    std::vector<std::uint32_t> in_block(v, 0);
    std::vector<std::uint64_t> gain(v, 0);
    std::vector<std::uint32_t> scratch(t);

    while (mask.uncovered() > 0) {
        while (mask.covered(subset_rank(cursor.data(), t, C))) {
            if (!cursor_next()) throw std::logic_error("greedy_cover: cursor exhausted early");
        }
        std::vector<std::uint32_t> block(cursor);  // 0-based, sorted
        std::fill(in_block.begin(), in_block.end(), 0);
        for (auto e : block) in_block[e] = 1;

        // gain[e]: uncovered t-subsets of block + e that contain e
        std::fill(gain.begin(), gain.end(), 0);
        for (std::uint32_t e = 0; e < v; ++e) {
            if (in_block[e]) continue;
            for_each_subset(block, t - 1, [&](const std::uint32_t* sub) {
                unsigned pos = 0;
                for (unsigned i = 0; i < t - 1 && sub[i] < e; ++i) ++pos;
                for (unsigned i = 0; i < pos; ++i) scratch[i] = sub[i];
                scratch[pos] = e;
                for (unsigned i = pos; i < t - 1; ++i) scratch[i + 1] = sub[i];
                if (!mask.covered(subset_rank(scratch.data(), t, C))) ++gain[e];
            });
        }

        while (block.size() < k) {
            std::uint32_t best = UINT32_MAX;
            std::uint64_t best_gain = 0;
            for (std::uint32_t e = 0; e < v; ++e) {
                if (in_block[e]) continue;
                if (best == UINT32_MAX || gain[e] > best_gain) {
                    best = e;
                    best_gain = gain[e];
                }
            }
            std::vector<std::uint32_t> old_block = block;
            block.insert(std::upper_bound(block.begin(), block.end(), best), best);
            in_block[best] = 1;
            if (block.size() == k) break;
            // new candidate subsets all contain the fresh element
            for (std::uint32_t e = 0; e < v; ++e) {
                if (in_block[e]) continue;
                for_each_subset(old_block, t - 2, [&](const std::uint32_t* sub) {
                    std::uint32_t tmp[8];
                    unsigned len = 0;
                    for (unsigned i = 0; i < t - 2; ++i) tmp[len++] = sub[i];
                    tmp[len++] = best;
                    tmp[len++] = e;
                    std::sort(tmp, tmp + len);
                    if (!mask.covered(subset_rank(tmp, t, C))) ++gain[e];
                });
            }
        }

        Block one_based(block.size());
        for (std::size_t i = 0; i < block.size(); ++i) one_based[i] = block[i] + 1;
        mark_block(one_based, t, C, mask);
        out.blocks.push_back(std::move(one_based));
        if (out.blocks.size() > cap) {
            throw BlockCapExceeded("greedy_cover: block cap exceeded");
        }
    }
    canonicalize(out.blocks);
    return out;
}

std::vector<Block> rename_to(const CoveringFile& cover, const Block& S) {
    if (S.size() != cover.v) {
        throw std::invalid_argument("rename_to: |S| must equal cover.v");
    }
    std::vector<Block> out;
    out.reserve(cover.blocks.size());
    for (const auto& b : cover.blocks) {
        Block renamed(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) renamed[i] = S[b[i] - 1];
        out.push_back(std::move(renamed));
    }
    return out;
}

CoveringFile induce_cover(const CoveringFile& base, std::uint32_t v,
                          std::uint32_t k, std::uint64_t seed,
                          std::uint64_t cap) {
    if (v > base.v || k > base.k || k < base.t || v < k) {
        throw std::invalid_argument("induce_cover: need t <= k <= v, v <= v', k <= k'");
    }
    Rng rng(mix_seed(seed, 0x1d3ull));
    auto chosen = sample_distinct(rng, base.v, v);
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::uint32_t> rank(base.v + 1, 0);  // base index -> [1, v], 0 if dropped
    for (std::uint32_t i = 0; i < v; ++i) rank[chosen[i]] = i + 1;

    std::map<std::uint32_t, CoveringFile> split_cache;
    CoveringFile out{v, k, base.t, {}};
    for (const auto& block : base.blocks) {
        Block kept;
        for (auto e : block) {
            if (rank[e] != 0) kept.push_back(rank[e]);
        }
        std::sort(kept.begin(), kept.end());
        if (kept.size() > k) {
            auto it = split_cache.find(std::uint32_t(kept.size()));
            if (it == split_cache.end()) {
                it = split_cache
                         .emplace(std::uint32_t(kept.size()),
                                  greedy_cover(std::uint32_t(kept.size()), k, base.t, cap))
                         .first;
            }
            for (auto& piece : rename_to(it->second, kept)) {
                out.blocks.push_back(std::move(piece));
            }
        } else {
            // pad with the smallest absent indices
            std::uint32_t next = 1;
            while (kept.size() < k) {
                while (std::binary_search(kept.begin(), kept.end(), next)) ++next;
                kept.insert(std::lower_bound(kept.begin(), kept.end(), next), next);
            }
            out.blocks.push_back(std::move(kept));
        }
        if (out.blocks.size() > 4 * cap) {
            throw BlockCapExceeded("induce_cover: block cap exceeded");
        }
    }
    canonicalize(out.blocks);
    if (out.blocks.size() > cap) {
        throw BlockCapExceeded("induce_cover: block cap exceeded");
    }
    return out;
}

bool covering_valid(const CoveringFile& cover, std::uint64_t sample_seed,
                    std::uint64_t n_samples) {
    for (const auto& b : cover.blocks) {
        if (b.size() != cover.k) return false;
        if (!std::is_sorted(b.begin(), b.end())) return false;
        if (std::adjacent_find(b.begin(), b.end()) != b.end()) return false;
        if (!b.empty() && (b.front() < 1 || b.back() > cover.v)) return false;
    }
    if (cover.v <= 40) {
        Binomials C(cover.v, cover.t);
        CoverageMask mask(C(cover.v, cover.t));
        for (const auto& b : cover.blocks) mark_block(b, cover.t, C, mask);
        return mask.uncovered() == 0;
    }
    // Sampled check: per-element block lists plus a 64-bit membership
    // signature, so each sample only scans the blocks of its rarest element.
    std::vector<std::uint64_t> sig(cover.blocks.size(), 0);
    std::vector<std::vector<std::uint32_t>> by_element(cover.v + 1);
    for (std::size_t i = 0; i < cover.blocks.size(); ++i) {
        for (auto e : cover.blocks[i]) {
            sig[i] |= 1ull << (e & 63);
            by_element[e].push_back(std::uint32_t(i));
        }
    }
    Rng rng(mix_seed(sample_seed, 0x5a11d));
    std::vector<std::uint32_t> sample(cover.t);
    for (std::uint64_t s = 0; s < n_samples; ++s) {
        auto drawn = sample_distinct(rng, cover.v, cover.t);
        std::uint64_t want = 0;
        std::uint32_t rarest = std::uint32_t(drawn[0]);
        for (unsigned i = 0; i < cover.t; ++i) {
            sample[i] = std::uint32_t(drawn[i]);
            want |= 1ull << (sample[i] & 63);
            if (by_element[sample[i]].size() < by_element[rarest].size()) {
                rarest = sample[i];
            }
        }
        bool found = false;
        for (std::uint32_t i : by_element[rarest]) {
            if ((sig[i] & want) != want) continue;
            const auto& b = cover.blocks[i];
            bool all = true;
            for (unsigned j = 0; j < cover.t && all; ++j) {
                all = std::binary_search(b.begin(), b.end(), sample[j]);
            }
            if (all) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

void write_covering(const CoveringFile& cover, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_covering: cannot open " + path.string());
    out << "c " << cover.v << ' ' << cover.k << ' ' << cover.t << ' '
        << cover.blocks.size() << '\n';
    for (const auto& b : cover.blocks) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (i) out << ' ';
            out << b[i];
        }
        out << '\n';
    }
    if (!out.flush()) throw std::runtime_error("write_covering: write failed");
}

CoveringFile read_covering(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CoverNotFound("read_covering: cannot open " + path.string());
    std::string tag;
    CoveringFile cover;
    std::uint64_t b = 0;
    if (!(in >> tag) || tag != "c" || !(in >> cover.v >> cover.k >> cover.t >> b)) {
        throw std::runtime_error("read_covering: bad header in " + path.string());
    }
    cover.blocks.resize(b);
    for (auto& block : cover.blocks) {
        block.resize(cover.k);
        for (auto& e : block) {
            if (!(in >> e)) throw std::runtime_error("read_covering: truncated " + path.string());
        }
    }
    return cover;
}

CoveringFile import_covering(const std::filesystem::path& path, unsigned t,
                             std::optional<std::uint32_t> v) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import_covering: cannot open " + path.string());
    std::string first_line;
    if (!std::getline(in, first_line)) throw std::runtime_error("import_covering: empty file");
    CoveringFile cover;
    cover.t = t;
    std::uint32_t max_seen = 0;
    if (!first_line.empty() && first_line[0] == 'c') {
        in.close();
        cover = read_covering(path);
        if (cover.t != t) throw std::runtime_error("import_covering: header t mismatch");
    } else {
        std::string line = first_line;
        do {
            std::istringstream row(line);
            Block block;
            std::uint32_t e;
            while (row >> e) block.push_back(e);
            if (block.empty()) continue;
            std::sort(block.begin(), block.end());
            max_seen = std::max(max_seen, block.back());
            cover.blocks.push_back(std::move(block));
        } while (std::getline(in, line));
        if (cover.blocks.empty()) throw std::runtime_error("import_covering: no blocks");
        cover.k = std::uint32_t(cover.blocks.front().size());
        cover.v = v.value_or(max_seen);
        canonicalize(cover.blocks);
    }
    if (!covering_valid(cover)) {
        throw std::runtime_error("import_covering: not a valid covering: " + path.string());
    }
    return cover;
}

CoverDb::CoverDb(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path CoverDb::path_for(std::uint32_t v, std::uint32_t k,
                                        unsigned t) const {
    return root_ / ("t" + std::to_string(t)) /
           ("C_" + std::to_string(v) + "_" + std::to_string(k) + "_" +
            std::to_string(t) + ".txt");
}

bool CoverDb::contains(std::uint32_t v, std::uint32_t k, unsigned t) const {
    return std::filesystem::exists(path_for(v, k, t));
}

const CoveringFile& CoverDb::get(std::uint32_t v, std::uint32_t k, unsigned t) const {
    std::array<std::uint32_t, 3> key{v, k, t};
    std::scoped_lock lock(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        auto path = path_for(v, k, t);
        if (!std::filesystem::exists(path)) {
            throw CoverNotFound("covering C(" + std::to_string(v) + "," +
                                std::to_string(k) + "," + std::to_string(t) +
                                ") not in db at " + root_.string());
        }
        it = cache_.emplace(key, read_covering(path)).first;
    }
    return it->second;
}

std::uint64_t CoverDb::block_count(std::uint32_t v, std::uint32_t k, unsigned t) const {
    std::array<std::uint32_t, 3> key{v, k, t};
    {
        std::scoped_lock lock(mu_);
        auto it = count_cache_.find(key);
        if (it != count_cache_.end()) return it->second;
        auto full = cache_.find(key);
        if (full != cache_.end()) return full->second.blocks.size();
    }
    auto path = path_for(v, k, t);
    std::ifstream in(path);
    if (!in) {
        throw CoverNotFound("covering C(" + std::to_string(v) + "," + std::to_string(k) +
                            "," + std::to_string(t) + ") not in db at " + root_.string());
    }
    std::string tag;
    std::uint32_t hv, hk;
    unsigned ht;
    std::uint64_t b;
    if (!(in >> tag >> hv >> hk >> ht >> b) || tag != "c") {
        throw std::runtime_error("block_count: bad header in " + path.string());
    }
    std::scoped_lock lock(mu_);
    count_cache_[key] = b;
    return b;
}

void CoverDb::put(const CoveringFile& cover) {
    write_covering(cover, path_for(cover.v, cover.k, cover.t));
    std::scoped_lock lock(mu_);
    std::array<std::uint32_t, 3> key{cover.v, cover.k, cover.t};
    cache_[key] = cover;
    count_cache_[key] = cover.blocks.size();
}

void CoverDb::preload(const std::vector<std::array<std::uint32_t, 3>>& triples) const {
    for (const auto& tr : triples) get(tr[0], tr[1], tr[2]);
}

namespace {

// Smallest prime q whose k' = (q^t-1)/(q-1) is at least k; nullopt when the
// search leaves 32 bits.
std::optional<std::uint32_t> first_prime_with_kprime_at_least(std::uint32_t k, unsigned t) {
    for (std::uint64_t q = 2; q <= 0x7fffffffull; ++q) {
        if (!is_prime(q)) continue;
        BigInt kp = (boost::multiprecision::pow(BigInt(q), t) - 1) / (q - 1);
        if (kp >= k) return std::uint32_t(q);
    }
    return std::nullopt;
}

std::optional<CoveringFile> try_pg_exact(std::uint32_t v, std::uint32_t k, unsigned t,
                                         std::uint64_t cap) {
    // k' determines q; v' then determines m.
    for (std::uint64_t q = 2;; ++q) {
        if (!is_prime(q)) continue;
        BigInt kp = (boost::multiprecision::pow(BigInt(q), t) - 1) / (q - 1);
        if (kp > k) return std::nullopt;
        if (kp != k) continue;
        for (unsigned m = t;; ++m) {
            PgParams params(std::uint32_t(q), m, t);
            BigInt vp = params.v_prime();
            if (vp > v) return std::nullopt;
            if (vp < v) continue;
            BigInt blocks = gaussian_binomial(m + 1, t, std::uint32_t(q));
            if (blocks > cap) return std::nullopt;
            CoveringFile out{v, k, t, {}};
            InducedSelection identity;
            identity.points.resize(v);
            for (std::uint32_t i = 0; i < v; ++i) identity.points[i] = i + 1;
            CvdGenerator gen(params, identity, 0, 1);
            while (auto block = gen.next()) out.blocks.push_back(std::move(*block));
            canonicalize(out.blocks);
            return out;
        }
    }
}

std::optional<CoveringFile> try_induced(std::uint32_t v, std::uint32_t k, unsigned t,
                                        std::uint64_t cap, std::uint64_t seed) {
    auto q0 = first_prime_with_kprime_at_least(k, t);
    if (!q0) return std::nullopt;
    std::optional<CoveringFile> best;
    unsigned tried = 0;
    for (std::uint64_t q = *q0; tried < 3 && q <= 0x7fffffffull; ++q) {
        if (!is_prime(q)) continue;
        ++tried;
        unsigned m = t;
        while (PgParams(std::uint32_t(q), m, t).v_prime() < v) ++m;
        PgParams params(std::uint32_t(q), m, t);
        if (gaussian_binomial(m + 1, t, std::uint32_t(q)) > cap) continue;
        if (params.k_prime() < k) continue;

        // Step 1 happens inside the stream: the generator already deletes
        // everything outside the selection.
        InducedSelection sel = draw_selection(params, v, mix_seed(seed, q));
        std::sort(sel.points.begin(), sel.points.end());
        CvdGenerator gen(params, sel, 0, 1);
        CoveringFile out{v, k, t, {}};
        std::map<std::uint32_t, CoveringFile> split_cache;
        bool capped = false;
        while (auto block = gen.next()) {
            Block kept = std::move(*block);
            if (kept.size() > k) {
                auto it = split_cache.find(std::uint32_t(kept.size()));
                if (it == split_cache.end()) {
                    it = split_cache
                             .emplace(std::uint32_t(kept.size()),
                                      greedy_cover(std::uint32_t(kept.size()), k, t, cap))
                             .first;
                }
                for (auto& piece : rename_to(it->second, kept)) {
                    out.blocks.push_back(std::move(piece));
                }
            } else {
                std::uint32_t next = 1;
                while (kept.size() < k) {
                    while (std::binary_search(kept.begin(), kept.end(), next)) ++next;
                    kept.insert(std::lower_bound(kept.begin(), kept.end(), next), next);
                }
                out.blocks.push_back(std::move(kept));
            }
            if (out.blocks.size() > 4 * cap) {
                capped = true;
                break;
            }
        }
        if (capped) continue;
        canonicalize(out.blocks);
        if (out.blocks.size() > cap) continue;
        if (!best || out.blocks.size() < best->blocks.size()) best = std::move(out);
    }
    return best;
}

}  // namespace

void build_db(CoverDb& db, const BuildOptions& opts) {
    for (std::uint32_t v = opts.t; v <= opts.max_v; ++v) {
        for (std::uint32_t k = opts.t; k <= v; ++k) {
            if (opts.skip_existing && db.contains(v, k, opts.t)) continue;
            std::optional<CoveringFile> best;
            auto consider = [&](std::optional<CoveringFile> cand) {
                if (!cand) return;
                if (!best || cand->blocks.size() < best->blocks.size()) best = std::move(cand);
            };
            consider(try_pg_exact(v, k, opts.t, opts.cap));
            consider(try_induced(v, k, opts.t, opts.cap, 0x5eedull * v + k));
            try {
                consider(greedy_cover(v, k, opts.t, opts.cap));
            } catch (const BlockCapExceeded&) {
                // fall through; an induced candidate may still have fit
            }
            if (!best) {
                throw BlockCapExceeded("build_db: no covering within cap for C(" +
                                       std::to_string(v) + "," + std::to_string(k) + "," +
                                       std::to_string(opts.t) + ")");
            }
            // exhaustive below 41 points; a sampled smoke check above (the
            // full-scale sampled validation lives in the test suites)
            if (!covering_valid(*best, 1, 5000)) {
                throw std::logic_error("build_db: built covering failed validation");
            }
            db.put(*best);
            if (opts.verbose) {
                std::fprintf(stderr, "db: C(%u,%u,%u) -> %zu blocks\n", v, k, opts.t,
                             best->blocks.size());
            }
        }
    }
}

}  // namespace coverd
