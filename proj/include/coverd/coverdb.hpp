#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coverd/pg.hpp"

namespace coverd {

constexpr std::uint64_t kDefaultBlockCap = 500000;

/// A covering C(v, k, t): blocks of size exactly k over [1, v] that together
/// contain every t-subset of [1, v].
struct CoveringFile {
    std::uint32_t v = 0;
    std::uint32_t k = 0;
    unsigned t = 0;
    std::vector<Block> blocks;
};

struct CoverNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BlockCapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic greedy construction: each block starts from the
/// lexicographically smallest uncovered t-subset and grows one element at a
/// time, maximizing the number of still-uncovered t-subsets the block gains
/// (ties toward the smallest element).
CoveringFile greedy_cover(std::uint32_t v, std::uint32_t k, unsigned t,
                          std::uint64_t cap = kDefaultBlockCap);

/// Three-step induction of C(v', k', t) down to C(v, k, t): delete the
/// complement of a seeded random v-subset L from every block, pad blocks
/// smaller than k with the smallest absent indices, replace blocks larger
/// than k by a renamed greedy covering, and rename everything to [1, v].
CoveringFile induce_cover(const CoveringFile& base, std::uint32_t v,
                          std::uint32_t k, std::uint64_t seed,
                          std::uint64_t cap = kDefaultBlockCap);

/// Rename a covering into an index set S (|S| == cover.v): index i becomes
/// the i-th smallest element of S.
std::vector<Block> rename_to(const CoveringFile& cover, const Block& S);

/// Coverage check: exhaustive for v <= 40, otherwise n_samples random
/// t-subsets.
bool covering_valid(const CoveringFile& cover, std::uint64_t sample_seed = 1,
                    std::uint64_t n_samples = 100000);

/// Text format: header "c v k t b", then b lines of k sorted 1-based
/// indices. Writing is canonical (blocks sorted lexicographically), so
/// write -> read -> write is byte-identical.
void write_covering(const CoveringFile& cover, const std::filesystem::path& path);
CoveringFile read_covering(const std::filesystem::path& path);

/// Parse an external block listing (one block per line, La Jolla style;
/// our own headered format is accepted too). v defaults to the largest
/// index seen. Coverage is verified before returning.
CoveringFile import_covering(const std::filesystem::path& path, unsigned t,
                             std::optional<std::uint32_t> v = std::nullopt);

/// File-backed covering store, layout root/t{T}/C_{v}_{k}_{t}.txt. Readers
/// share a cache; populate it (via preload or get) before handing the db to
/// concurrent workers.
class CoverDb {
public:
    explicit CoverDb(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path path_for(std::uint32_t v, std::uint32_t k, unsigned t) const;
    bool contains(std::uint32_t v, std::uint32_t k, unsigned t) const;

    /// Parsed covering; throws CoverNotFound for a missing triple.
    const CoveringFile& get(std::uint32_t v, std::uint32_t k, unsigned t) const;
    /// Block count from the file header only.
    std::uint64_t block_count(std::uint32_t v, std::uint32_t k, unsigned t) const;

    void put(const CoveringFile& cover);
    void preload(const std::vector<std::array<std::uint32_t, 3>>& triples) const;

private:
    std::filesystem::path root_;
    mutable std::mutex mu_;
    mutable std::map<std::array<std::uint32_t, 3>, CoveringFile> cache_;
    mutable std::map<std::array<std::uint32_t, 3>, std::uint64_t> count_cache_;
};

struct BuildOptions {
    unsigned t = 2;
    std::uint32_t max_v = 200;
    std::uint64_t cap = kDefaultBlockCap;
    bool skip_existing = true;
    bool verbose = false;
};

/// Populate the db with a covering for every t <= k <= v <= max_v. Builders
/// tried per triple: exact PG match, induction from a PG covering, greedy;
/// the smallest valid result wins (ties prefer that order).
void build_db(CoverDb& db, const BuildOptions& opts);

}  // namespace coverd
