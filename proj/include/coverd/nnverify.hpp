#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "coverd/pg.hpp"

namespace coverd {

enum class Activation { Relu, None };

struct Layer {
    std::uint32_t rows = 0;  // output dimension
    std::uint32_t cols = 0;  // input dimension
    std::vector<double> weights;  // row-major rows x cols
    std::vector<double> bias;     // rows
    Activation act = Activation::None;

    double w(std::uint32_t r, std::uint32_t c) const {
        return weights[std::size_t(r) * cols + c];
    }
};

/// Fully-connected network. Consecutive layer dimensions chain and the last
/// layer has at least two outputs (the classes).
struct Network {
    std::vector<Layer> layers;

    std::uint32_t input_dim() const { return layers.front().cols; }
    std::uint32_t output_dim() const { return layers.back().rows; }
    bool affine_only() const;
    std::vector<double> eval(std::span<const double> x) const;
    /// argmax with ties to the first index.
    std::uint32_t classify(std::span<const double> x) const;

    void validate() const;
};

/// Text format: "relu-net L", then per layer "layer R C", R rows of C
/// weights, one row of R biases, "activation relu|none".
Network load_network(const std::filesystem::path& path);
void save_network(const Network& net, const std::filesystem::path& path);

/// Whitespace-separated reals in [0, 1], row-major.
std::vector<double> load_image(const std::filesystem::path& path);
void save_image(std::span<const double> x, const std::filesystem::path& path);

/// Interval box I_S(x): pixel i ranges over [0, 1] when i is in S and is
/// pinned to x_i otherwise.
struct Neighborhood {
    std::vector<double> lo, hi;

    std::uint32_t free_count() const;
    Block free_indices() const;  // 1-based
};

Neighborhood make_neighborhood(std::span<const double> x, const Block& S);

enum class BackendStatus { Verified, Unknown, Falsified };

struct BackendResult {
    BackendStatus status = BackendStatus::Unknown;
    std::vector<double> witness;  // set only when Falsified
    double seconds = 0.0;         // wall time, or charged virtual time
};

/// A neighborhood verifier. Implementations are stateless after
/// construction; verify() may be called concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    /// Complete backends never answer Unknown on their supported networks.
    virtual bool is_complete() const = 0;
    virtual BackendResult verify(const Neighborhood& nbh, std::uint32_t label) const = 0;
};

/// Sound, incomplete interval propagation. Affine layers get their exact
/// interval image, ReLU clamps at zero; when the final layer is affine the
/// class margins are bounded through it directly. Never answers Falsified.
class IbpBackend : public Backend {
public:
    explicit IbpBackend(const Network& net);
    std::string name() const override { return "ibp"; }
    bool is_complete() const override { return false; }
    BackendResult verify(const Neighborhood& nbh, std::uint32_t label) const override;

private:
    const Network& net_;
};

/// Sound and complete for purely affine networks: folds the layers into one
/// affine map and minimizes every class margin over the box coordinatewise.
/// Falsified results carry the minimizing corner as witness.
class ExactAffineBackend : public Backend {
public:
    explicit ExactAffineBackend(const Network& net);
    std::string name() const override { return "affine"; }
    bool is_complete() const override { return true; }
    BackendResult verify(const Neighborhood& nbh, std::uint32_t label) const override;

private:
    std::uint32_t in_dim_ = 0, out_dim_ = 0;
    std::vector<double> weights_;  // folded, row-major out x in
    std::vector<double> bias_;
};

struct ScriptedEntry {
    double success = 0.0;
    double mean_time = 0.0;
};

/// Simulation backend for planner and engine tests: answers Verified with
/// the profiled probability of the neighborhood's size (decided by a seeded
/// hash of the block, so verdicts are reproducible and independent of call
/// order), and charges the profiled virtual time.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(std::map<std::uint32_t, ScriptedEntry> profile, std::uint64_t seed);
    static ScriptedBackend from_tsv(const std::filesystem::path& path, std::uint64_t seed);

    std::string name() const override { return "scripted"; }
    bool is_complete() const override { return false; }
    BackendResult verify(const Neighborhood& nbh, std::uint32_t label) const override;

private:
    std::map<std::uint32_t, ScriptedEntry> profile_;
    std::uint64_t seed_;
};

}  // namespace coverd
