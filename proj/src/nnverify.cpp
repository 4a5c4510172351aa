#include "coverd/nnverify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "coverd/rng.hpp"

namespace coverd {

bool Network::affine_only() const {
    return std::all_of(layers.begin(), layers.end(),
                       [](const Layer& l) { return l.act == Activation::None; });
}

std::vector<double> Network::eval(std::span<const double> x) const {
    std::vector<double> cur(x.begin(), x.end());
    for (const auto& layer : layers) {
        std::vector<double> next(layer.rows);
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            double acc = layer.bias[r];
            for (std::uint32_t c = 0; c < layer.cols; ++c) acc += layer.w(r, c) * cur[c];
            next[r] = layer.act == Activation::Relu ? std::max(0.0, acc) : acc;
        }
        cur = std::move(next);
    }
    return cur;
}

std::uint32_t Network::classify(std::span<const double> x) const {
    auto scores = eval(x);
    return std::uint32_t(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

void Network::validate() const {
    if (layers.empty()) throw std::invalid_argument("network: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.rows == 0 || l.cols == 0) throw std::invalid_argument("network: empty layer");
        if (l.weights.size() != std::size_t(l.rows) * l.cols || l.bias.size() != l.rows) {
            throw std::invalid_argument("network: layer shape mismatch");
        }
        if (i > 0 && layers[i - 1].rows != l.cols) {
            throw std::invalid_argument("network: layer dimensions do not chain");
        }
    }
    if (output_dim() < 2) throw std::invalid_argument("network: needs >= 2 classes");
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_network: cannot open " + path.string());
    std::string tag;
    std::size_t n_layers = 0;
    if (!(in >> tag >> n_layers) || tag != "relu-net") {
        throw std::runtime_error("load_network: bad header in " + path.string());
    }
    Network net;
    net.layers.resize(n_layers);
    for (auto& layer : net.layers) {
        if (!(in >> tag >> layer.rows >> layer.cols) || tag != "layer") {
            throw std::runtime_error("load_network: bad layer header");
        }
        layer.weights.resize(std::size_t(layer.rows) * layer.cols);
        for (auto& w : layer.weights) {
            if (!(in >> w)) throw std::runtime_error("load_network: truncated weights");
        }
        layer.bias.resize(layer.rows);
        for (auto& b : layer.bias) {
            if (!(in >> b)) throw std::runtime_error("load_network: truncated bias");
        }
        std::string act;
        if (!(in >> tag >> act) || tag != "activation") {
            throw std::runtime_error("load_network: bad activation line");
        }
        if (act == "relu") {
            layer.act = Activation::Relu;
        } else if (act == "none") {
            layer.act = Activation::None;
        } else {
            throw std::runtime_error("load_network: unknown activation '" + act + "'");
        }
    }
    net.validate();
    return net;
}

void save_network(const Network& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_network: cannot open " + path.string());
    out.precision(17);
    out << "relu-net " << net.layers.size() << '\n';
    for (const auto& layer : net.layers) {
        out << "layer " << layer.rows << ' ' << layer.cols << '\n';
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            for (std::uint32_t c = 0; c < layer.cols; ++c) {
                if (c) out << ' ';
                out << layer.w(r, c);
            }
            out << '\n';
        }
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            if (r) out << ' ';
            out << layer.bias[r];
        }
        out << '\n';
        out << "activation " << (layer.act == Activation::Relu ? "relu" : "none") << '\n';
    }
}

std::vector<double> load_image(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_image: cannot open " + path.string());
    std::vector<double> x;
    double value;
    while (in >> value) x.push_back(value);
    if (x.empty()) throw std::runtime_error("load_image: no pixels in " + path.string());
    for (double p : x) {
        if (p < 0.0 || p > 1.0) throw std::runtime_error("load_image: pixel outside [0,1]");
    }
    return x;
}

void save_image(std::span<const double> x, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_image: cannot open " + path.string());
    out.precision(17);
    for (std::size_t i = 0; i < x.size(); ++i) {
        out << x[i] << (i + 1 == x.size() ? '\n' : ' ');
    }
}

std::uint32_t Neighborhood::free_count() const {
    std::uint32_t n = 0;
    for (std::size_t i = 0; i < lo.size(); ++i) n += lo[i] < hi[i];
    return n;
}

Block Neighborhood::free_indices() const {
    Block out;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (lo[i] < hi[i]) out.push_back(std::uint32_t(i + 1));
    }
    return out;
}

Neighborhood make_neighborhood(std::span<const double> x, const Block& S) {
    Neighborhood nbh;
    nbh.lo.assign(x.begin(), x.end());
    nbh.hi.assign(x.begin(), x.end());
    for (double p : x) {
        if (p < 0.0 || p > 1.0) {
            throw std::invalid_argument("make_neighborhood: pixel outside [0,1]");
        }
    }
    for (auto i : S) {
        if (i < 1 || i > x.size()) {
            throw std::invalid_argument("make_neighborhood: index out of range");
        }
        nbh.lo[i - 1] = 0.0;
        nbh.hi[i - 1] = 1.0;
    }
    return nbh;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

IbpBackend::IbpBackend(const Network& net) : net_(net) { net.validate(); }

BackendResult IbpBackend::verify(const Neighborhood& nbh, std::uint32_t label) const {
    auto start = Clock::now();
    std::vector<double> lo = nbh.lo, hi = nbh.hi;
    const std::size_t last = net_.layers.size() - 1;
    for (std::size_t li = 0; li < last; ++li) {
        const Layer& layer = net_.layers[li];
        std::vector<double> nlo(layer.rows), nhi(layer.rows);
        for (std::uint32_t r = 0; r < layer.rows; ++r) {
            double a = layer.bias[r], b = layer.bias[r];
            for (std::uint32_t c = 0; c < layer.cols; ++c) {
                double w = layer.w(r, c);
                if (w >= 0) {
                    a += w * lo[c];
                    b += w * hi[c];
                } else {
                    a += w * hi[c];
                    b += w * lo[c];
                }
            }
            if (layer.act == Activation::Relu) {
                a = std::max(0.0, a);
                b = std::max(0.0, b);
            }
            nlo[r] = a;
            nhi[r] = b;
        }
        lo = std::move(nlo);
        hi = std::move(nhi);
    }

    const Layer& out = net_.layers[last];
    BackendResult res;
    res.status = BackendStatus::Verified;
    if (out.act == Activation::None) {
        // bound each margin through the final affine layer directly
        for (std::uint32_t j = 0; j < out.rows && res.status == BackendStatus::Verified; ++j) {
            if (j == label) continue;
            double margin = out.bias[label] - out.bias[j];
            for (std::uint32_t c = 0; c < out.cols; ++c) {
                double d = out.w(label, c) - out.w(j, c);
                margin += d * (d >= 0 ? lo[c] : hi[c]);
            }
            if (!(margin > 0)) res.status = BackendStatus::Unknown;
        }
    } else {
        std::vector<double> slo(out.rows), shi(out.rows);
        for (std::uint32_t r = 0; r < out.rows; ++r) {
            double a = out.bias[r], b = out.bias[r];
            for (std::uint32_t c = 0; c < out.cols; ++c) {
                double w = out.w(r, c);
                if (w >= 0) {
                    a += w * lo[c];
                    b += w * hi[c];
                } else {
                    a += w * hi[c];
                    b += w * lo[c];
                }
            }
            slo[r] = std::max(0.0, a);
            shi[r] = std::max(0.0, b);
        }
        for (std::uint32_t j = 0; j < out.rows; ++j) {
            if (j != label && !(slo[label] - shi[j] > 0)) {
                res.status = BackendStatus::Unknown;
                break;
            }
        }
    }
    res.seconds = elapsed(start);
    return res;
}

ExactAffineBackend::ExactAffineBackend(const Network& net) {
    net.validate();
    if (!net.affine_only()) {
        throw std::invalid_argument(
            "ExactAffineBackend: network contains ReLU; the exact analysis only "
            "supports purely affine networks");
    }
    // fold layers into a single map: W = W_n ... W_1, b accumulated alongside
    in_dim_ = net.input_dim();
    const Layer& first = net.layers.front();
    weights_ = first.weights;
    bias_ = first.bias;
    out_dim_ = first.rows;
    for (std::size_t li = 1; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        std::vector<double> w(std::size_t(l.rows) * in_dim_, 0.0);
        std::vector<double> b(l.rows, 0.0);
        for (std::uint32_t r = 0; r < l.rows; ++r) {
            double acc = l.bias[r];
            for (std::uint32_t m = 0; m < l.cols; ++m) {
                double lw = l.w(r, m);
                acc += lw * bias_[m];
                for (std::uint32_t c = 0; c < in_dim_; ++c) {
                    w[std::size_t(r) * in_dim_ + c] += lw * weights_[std::size_t(m) * in_dim_ + c];
                }
            }
            b[r] = acc;
        }
        weights_ = std::move(w);
        bias_ = std::move(b);
        out_dim_ = l.rows;
    }
}

BackendResult ExactAffineBackend::verify(const Neighborhood& nbh,
                                         std::uint32_t label) const {
    auto start = Clock::now();
    if (nbh.lo.size() != in_dim_) {
        throw std::invalid_argument("ExactAffineBackend: neighborhood dimension mismatch");
    }
    BackendResult res;
    res.status = BackendStatus::Verified;
    double worst = 0.0;
    std::uint32_t worst_j = 0;
    bool have_worst = false;
    for (std::uint32_t j = 0; j < out_dim_; ++j) {
        if (j == label) continue;
        double margin = bias_[label] - bias_[j];
        for (std::uint32_t c = 0; c < in_dim_; ++c) {
            double d = weights_[std::size_t(label) * in_dim_ + c] -
                       weights_[std::size_t(j) * in_dim_ + c];
            margin += d * (d >= 0 ? nbh.lo[c] : nbh.hi[c]);
        }
        if (!have_worst || margin < worst) {
            worst = margin;
            worst_j = j;
            have_worst = true;
        }
    }
    if (have_worst && !(worst > 0)) {
        res.status = BackendStatus::Falsified;
        res.witness.resize(in_dim_);
        for (std::uint32_t c = 0; c < in_dim_; ++c) {
            double d = weights_[std::size_t(label) * in_dim_ + c] -
                       weights_[std::size_t(worst_j) * in_dim_ + c];
            res.witness[c] = d >= 0 ? nbh.lo[c] : nbh.hi[c];
        }
    }
    res.seconds = elapsed(start);
    return res;
}

ScriptedBackend::ScriptedBackend(std::map<std::uint32_t, ScriptedEntry> profile,
                                 std::uint64_t seed)
    : profile_(std::move(profile)), seed_(seed) {
    for (const auto& [k, entry] : profile_) {
        if (entry.success < 0.0 || entry.success > 1.0) {
            throw std::invalid_argument("ScriptedBackend: success probability outside [0,1]");
        }
    }
}

ScriptedBackend ScriptedBackend::from_tsv(const std::filesystem::path& path,
                                          std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ScriptedBackend: cannot open " + path.string());
    std::map<std::uint32_t, ScriptedEntry> profile;
    std::uint32_t k;
    double success, mean_time;
    while (in >> k >> success >> mean_time) profile[k] = {success, mean_time};
    if (profile.empty()) throw std::runtime_error("ScriptedBackend: empty profile");
    return ScriptedBackend(std::move(profile), seed);
}

BackendResult ScriptedBackend::verify(const Neighborhood& nbh, std::uint32_t) const {
    Block S = nbh.free_indices();
    auto it = profile_.find(std::uint32_t(S.size()));
    if (it == profile_.end()) {
        throw std::out_of_range("ScriptedBackend: no profile entry for k=" +
                                std::to_string(S.size()));
    }
    BackendResult res;
    double u = double(hash_indices(seed_, S) >> 11) * 0x1.0p-53;
    res.status = u < it->second.success ? BackendStatus::Verified : BackendStatus::Unknown;
    res.seconds = it->second.mean_time;
    return res;
}

}  // namespace coverd
