// Command-line front end: covering generation, candidate prediction, bounds,
// the covering database, planning and the verification loop.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "coverd/engine.hpp"
#include "coverd/rng.hpp"

namespace {

using namespace coverd;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void log_info(const std::string& msg) {
    if (g_log_level >= 1) std::fprintf(stderr, "%s\n", msg.c_str());
}

std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string digest_hex(const std::vector<std::uint64_t>& values) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto v : values) h = splitmix64(h ^ v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

// Minimal flat-JSON writer; keys stay in insertion order and floats are
// printed with fixed precision so identical runs give identical bytes.
class FlatJson {
public:
    void add(const std::string& key, const std::string& value) {
        entries_.emplace_back(key, '"' + value + '"');
    }
    void add(const std::string& key, std::uint64_t value) {
        entries_.emplace_back(key, std::to_string(value));
    }
    void add(const std::string& key, double value) {
        entries_.emplace_back(key, fixed6(value));
    }
    void add(const std::string& key, bool value) {
        entries_.emplace_back(key, value ? "true" : "false");
    }
    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path.string());
        out << "{\n";
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            out << "  \"" << entries_[i].first << "\": " << entries_[i].second;
            out << (i + 1 == entries_.size() ? "\n" : ",\n");
        }
        out << "}\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string log_level = "info";
    std::string db_path;
};

std::unique_ptr<Backend> make_backend(const std::string& spec, const Network* net,
                                      std::uint64_t seed) {
    if (spec == "ibp") {
        if (!net) throw std::runtime_error("ibp backend needs a network");
        return std::make_unique<IbpBackend>(*net);
    }
    if (spec == "affine") {
        if (!net) throw std::runtime_error("affine backend needs a network");
        return std::make_unique<ExactAffineBackend>(*net);
    }
    if (spec.rfind("scripted:", 0) == 0) {
        return std::make_unique<ScriptedBackend>(
            ScriptedBackend::from_tsv(spec.substr(9), seed));
    }
    throw std::runtime_error("unknown backend '" + spec + "'");
}

std::unique_ptr<Backend> make_complete_backend(const std::string& spec,
                                               const Network* net,
                                               std::uint64_t seed) {
    if (spec == "none") return nullptr;
    if (spec == "auto") {
        if (net && net->affine_only()) return std::make_unique<ExactAffineBackend>(*net);
        return nullptr;
    }
    return make_backend(spec, net, seed);
}

void emit_blocks_line(std::ostream& out, const Block& block) {
    for (std::size_t i = 0; i < block.size(); ++i) {
        if (i) out << ' ';
        out << block[i];
    }
    out << '\n';
}

std::ostream& open_sink(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open " + path);
    return file;
}

int cmd_covergen_pg(std::uint32_t q, unsigned m, unsigned t, unsigned worker,
                    unsigned workers, const std::string& out_path) {
    PgParams params(q, m, t);
    std::uint64_t vp = params.v_prime_u64();
    InducedSelection identity;
    identity.points.resize(vp);
    for (std::uint64_t i = 0; i < vp; ++i) identity.points[i] = i + 1;
    CvdGenerator gen(params, identity, worker, workers);
    std::ofstream file;
    auto& out = open_sink(file, out_path);
    while (auto block = gen.next()) emit_blocks_line(out, *block);
    return 0;
}

int cmd_covergen_cvd(std::uint32_t q, unsigned m, unsigned t, std::uint64_t v,
                     std::uint64_t seed, unsigned worker, unsigned workers,
                     const std::string& out_path) {
    PgParams params(q, m, t);
    InducedSelection sel = draw_selection(params, v, seed);
    CvdGenerator gen(params, sel, worker, workers);
    std::ofstream file;
    auto& out = open_sink(file, out_path);
    while (auto block = gen.next()) emit_blocks_line(out, *block);
    return 0;
}

int cmd_predict(std::uint64_t v, unsigned t, double min_k, unsigned max_k, double eps) {
    auto candidates = enumerate_candidates(v, t, min_k, max_k, eps);
    std::printf("# q\tm\tv_prime\tk_prime\tb\tmu\tsigma2\n");
    for (const auto& c : candidates) {
        std::printf("%u\t%u\t%s\t%s\t%s\t%s\t%s\n", c.params.q, c.params.m,
                    c.params.v_prime().str().c_str(), c.params.k_prime().str().c_str(),
                    c.b.str().c_str(), fixed6(c.mu_d()).c_str(),
                    fixed6(c.sigma2.convert_to<double>()).c_str());
    }
    return 0;
}

int cmd_ratio_report(std::uint64_t v, unsigned t, double min_mean, unsigned max_k,
                     double eps) {
    auto report = ratio_report(v, t, min_mean, max_k, eps);
    std::printf("q,m,mu,b,bound,ratio\n");
    for (const auto& row : report.rows) {
        std::printf("%u,%u,%s,%s,%s,%s\n", row.q, row.m, fixed6(row.mu).c_str(),
                    row.b.str().c_str(), row.bound.str().c_str(),
                    fixed6(row.ratio).c_str());
    }
    std::printf("average,,,,,%s\n", fixed6(report.average).c_str());
    return 0;
}

void print_kstats_table(const KStats& stats, const RefinementPlan& plan) {
    std::printf("# k\tsamples\tsuccess\tmean_time\tT\tf_R\n");
    for (unsigned k = stats.t; k <= stats.max_k; ++k) {
        std::printf("%u\t%" PRIu64 "\t%s\t%s\t%s\t%u\n", k, stats.sample_count(k),
                    fixed6(stats.success_rate(k)).c_str(),
                    fixed6(stats.mean_time(k)).c_str(), fixed6(plan.T(k)).c_str(),
                    plan.f_R(k));
    }
}

int verdict_exit_code(const BallVerdict& verdict) {
    switch (verdict.status) {
        case BallStatus::Robust: return 0;
        case BallStatus::NonRobust: return 1;
        case BallStatus::Unknown: return 2;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covering-verification-design construction, planning and L0 "
                 "robustness verification"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts global;
    const char* env_db = std::getenv("COVERD_DB");
    global.db_path = env_db ? env_db : "db";
    app.add_option("--seed", global.seed, "global random seed");
    app.add_option("--threads", global.threads, "OpenMP thread cap (0 = default)");
    app.add_option("--log-level", global.log_level, "quiet|info|debug");
    app.add_option("--db", global.db_path, "covering database directory");

    // covergen
    auto* covergen = app.add_subcommand("covergen", "emit covering blocks");
    covergen->require_subcommand(1);
    std::uint32_t q = 2;
    unsigned m = 2, t = 2;
    unsigned worker = 0, workers = 1;
    std::uint64_t v_sel = 0;
    std::string out_path;
    auto* cg_pg = covergen->add_subcommand("pg", "projective-geometry covering");
    cg_pg->add_option("--q", q, "prime field order")->required();
    cg_pg->add_option("--m", m, "geometry dimension parameter")->required();
    cg_pg->add_option("--t", t, "covered subset size")->required();
    cg_pg->add_option("--worker", worker, "worker index");
    cg_pg->add_option("--workers", workers, "worker count");
    cg_pg->add_option("--out", out_path, "output file (default stdout)");
    auto* cg_cvd = covergen->add_subcommand("cvd", "partially-induced covering");
    cg_cvd->add_option("--q", q)->required();
    cg_cvd->add_option("--m", m)->required();
    cg_cvd->add_option("--t", t)->required();
    cg_cvd->add_option("--v", v_sel, "selection size")->required();
    cg_cvd->add_option("--worker", worker);
    cg_cvd->add_option("--workers", workers);
    cg_cvd->add_option("--out", out_path);

    // predict
    auto* predict = app.add_subcommand("predict", "enumerate CVD candidates");
    std::uint64_t pv = 0;
    unsigned pt = 4, pmax_k = 200;
    double pmin_k = 0.0, peps = 0.01;
    predict->add_option("--v", pv, "pixel count")->required();
    predict->add_option("--t", pt, "perturbed pixels")->required();
    predict->add_option("--min-k", pmin_k, "minimum mean block size (default t)");
    predict->add_option("--max-k", pmax_k, "maximum block size");
    predict->add_option("--eps", peps, "overly-large-block budget");

    // bound
    auto* bound = app.add_subcommand("bound", "covering lower bounds");
    bound->require_subcommand(1);
    auto* schonheim = bound->add_subcommand("schonheim", "recursive lower bound");
    std::uint64_t bv = 0, bk = 0;
    unsigned bt = 2;
    schonheim->add_option("--v", bv)->required();
    schonheim->add_option("--k", bk)->required();
    schonheim->add_option("--t", bt)->required();

    // ratio-report
    auto* ratio = app.add_subcommand("ratio-report", "CVD size vs Schonheim bound");
    std::uint64_t rv = 0;
    unsigned rt = 4, rmax_k = 200;
    double rmin_mean = 10.0, reps = 0.01;
    ratio->add_option("--v", rv)->required();
    ratio->add_option("--t", rt)->required();
    ratio->add_option("--min-mean", rmin_mean, "minimum mean block size");
    ratio->add_option("--max-k", rmax_k);
    ratio->add_option("--eps", reps);

    // db
    auto* db_cmd = app.add_subcommand("db", "covering database");
    db_cmd->require_subcommand(1);
    auto* db_build = db_cmd->add_subcommand("build", "build coverings");
    unsigned dbt = 2;
    std::uint32_t db_max_v = 200;
    std::uint64_t db_cap = kDefaultBlockCap;
    db_build->add_option("--t", dbt)->required();
    db_build->add_option("--max-v", db_max_v);
    db_build->add_option("--cap", db_cap);
    auto* db_get = db_cmd->add_subcommand("get", "print one covering");
    std::uint32_t gv = 0, gk = 0;
    unsigned gt = 2;
    db_get->add_option("--v", gv)->required();
    db_get->add_option("--k", gk)->required();
    db_get->add_option("--t", gt)->required();
    auto* db_import = db_cmd->add_subcommand("import", "import a block listing");
    std::string import_path;
    unsigned it_t = 2;
    std::uint32_t it_v = 0;
    db_import->add_option("file", import_path, "block listing file")->required();
    db_import->add_option("--t", it_t)->required();
    db_import->add_option("--v", it_v, "point count (default: largest index)");

    // plan / verify
    auto add_run_options = [&](CLI::App* cmd, std::string& net_path, std::string& image_path,
                               RunConfig& cfg, std::string& backend_spec,
                               std::string& complete_spec) {
        cmd->add_option("--net", net_path, "network file")->required();
        cmd->add_option("--image", image_path, "image file")->required();
        cmd->add_option("--t", cfg.t, "perturbed pixels")->required();
        cmd->add_option("--workers", cfg.workers);
        cmd->add_option("--max-k", cfg.max_k);
        cmd->add_option("--min-k", cfg.min_k);
        cmd->add_option("--eps", cfg.eps);
        cmd->add_option("--n-samples", cfg.n_samples);
        cmd->add_option("--n-fail", cfg.n_fail);
        cmd->add_option("--reduced-samples", cfg.reduced_samples);
        cmd->add_option("--backend", backend_spec, "ibp|affine|scripted:FILE");
        cmd->add_option("--complete-backend", complete_spec, "auto|none|affine|scripted:FILE");
        cmd->add_flag("--deterministic", cfg.deterministic_rounding,
                      "round-half-even instead of seeded Bernoulli rounding");
    };

    auto* plan_cmd = app.add_subcommand("plan", "sample, plan and choose a design");
    std::string plan_net, plan_image, plan_report;
    std::string plan_backend = "ibp", plan_complete = "auto";
    RunConfig plan_cfg;
    add_run_options(plan_cmd, plan_net, plan_image, plan_cfg, plan_backend, plan_complete);
    plan_cmd->add_option("--report", plan_report, "write a flat JSON report");

    auto* verify_cmd = app.add_subcommand("verify", "verify an L0 t-ball");
    std::string ver_net, ver_image, ver_stats, ver_witness;
    std::string ver_backend = "ibp", ver_complete = "auto";
    RunConfig ver_cfg;
    add_run_options(verify_cmd, ver_net, ver_image, ver_cfg, ver_backend, ver_complete);
    verify_cmd->add_option("--timeout", ver_cfg.timeout_seconds, "seconds, 0 = none");
    verify_cmd->add_option("--stats", ver_stats, "write run statistics as flat JSON");
    verify_cmd->add_option("--witness", ver_witness, "write a counterexample image");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 10;
    }

    try {
        if (global.log_level == "quiet") g_log_level = 0;
        else if (global.log_level == "debug") g_log_level = 2;
        if (global.threads > 0) omp_set_num_threads(global.threads);

        if (cg_pg->parsed()) return cmd_covergen_pg(q, m, t, worker, workers, out_path);
        if (cg_cvd->parsed()) {
            return cmd_covergen_cvd(q, m, t, v_sel, global.seed, worker, workers, out_path);
        }
        if (predict->parsed()) {
            return cmd_predict(pv, pt, pmin_k > 0 ? pmin_k : double(pt), pmax_k, peps);
        }
        if (schonheim->parsed()) {
            std::printf("%s\n", schonheim_bound(bv, bk, bt).str().c_str());
            return 0;
        }
        if (ratio->parsed()) return cmd_ratio_report(rv, rt, rmin_mean, rmax_k, reps);

        if (db_build->parsed()) {
            CoverDb db(global.db_path);
            BuildOptions opts;
            opts.t = dbt;
            opts.max_v = db_max_v;
            opts.cap = db_cap;
            opts.verbose = g_log_level >= 2;
            build_db(db, opts);
            log_info("db build complete under " + db.root().string());
            return 0;
        }
        if (db_get->parsed()) {
            CoverDb db(global.db_path);
            const auto& cover = db.get(gv, gk, gt);
            std::printf("c %u %u %u %zu\n", cover.v, cover.k, cover.t, cover.blocks.size());
            for (const auto& block : cover.blocks) {
                for (std::size_t i = 0; i < block.size(); ++i) {
                    std::printf(i ? " %u" : "%u", block[i]);
                }
                std::printf("\n");
            }
            return 0;
        }
        if (db_import->parsed()) {
            CoverDb db(global.db_path);
            auto cover = import_covering(import_path, it_t,
                                         it_v ? std::optional<std::uint32_t>(it_v)
                                              : std::nullopt);
            db.put(cover);
            log_info("imported C(" + std::to_string(cover.v) + "," +
                     std::to_string(cover.k) + "," + std::to_string(cover.t) + ") with " +
                     std::to_string(cover.blocks.size()) + " blocks");
            return 0;
        }

        if (plan_cmd->parsed() || verify_cmd->parsed()) {
            const bool planning = plan_cmd->parsed();
            RunConfig& cfg = planning ? plan_cfg : ver_cfg;
            cfg.seed = global.seed;
            cfg.serial = global.threads == 1;
            Network net = load_network(planning ? plan_net : ver_net);
            auto image = load_image(planning ? plan_image : ver_image);
            if (image.size() != net.input_dim()) {
                throw std::runtime_error("image size does not match the network input");
            }
            auto incomplete = make_backend(planning ? plan_backend : ver_backend, &net,
                                           mix_seed(global.seed, 0xb1));
            auto complete = make_complete_backend(planning ? plan_complete : ver_complete,
                                                  &net, mix_seed(global.seed, 0xb2));
            CoverDb db(global.db_path);

            if (planning) {
                PlanArtifacts art =
                    plan_ball(net, image, cfg, *incomplete, complete.get(), db);
                std::printf("label %u\n", net.classify(image));
                std::printf("t_complete %s\n", fixed6(art.t_complete).c_str());
                std::printf("chosen_q %u\n", art.chosen.params.q);
                std::printf("chosen_m %u\n", art.chosen.params.m);
                std::printf("chosen_b %s\n", art.chosen.b.str().c_str());
                std::printf("chosen_mu %s\n", fixed6(art.chosen.mu_d()).c_str());
                std::printf("selection_digest %s\n",
                            digest_hex(art.selection.points).c_str());
                std::printf("candidates %zu\n", art.scores.size());
                std::printf("# q\tm\tb\tmu\tscore\n");
                for (const auto& cs : art.scores) {
                    std::printf("%u\t%u\t%s\t%s\t%s\n", cs.candidate.params.q,
                                cs.candidate.params.m, cs.candidate.b.str().c_str(),
                                fixed6(cs.candidate.mu_d()).c_str(),
                                fixed6(cs.score).c_str());
                }
                print_kstats_table(art.stats, art.plan);
                if (!plan_report.empty()) {
                    FlatJson json;
                    json.add("label", std::uint64_t(net.classify(image)));
                    json.add("t", std::uint64_t(cfg.t));
                    json.add("chosen_q", std::uint64_t(art.chosen.params.q));
                    json.add("chosen_m", std::uint64_t(art.chosen.params.m));
                    json.add("chosen_b", art.chosen.b.str());
                    json.add("chosen_mu", art.chosen.mu_d());
                    json.add("chosen_sigma2", art.chosen.sigma2.convert_to<double>());
                    json.add("selection_digest", digest_hex(art.selection.points));
                    json.add("t_complete", art.t_complete);
                    json.add("candidates", std::uint64_t(art.scores.size()));
                    for (const auto& cs : art.scores) {
                        json.add("score_q" + std::to_string(cs.candidate.params.q) + "_m" +
                                     std::to_string(cs.candidate.params.m),
                                 cs.score);
                    }
                    json.write(plan_report);
                }
                return 0;
            }

            auto [verdict, stats] =
                verify_ball(net, image, cfg, *incomplete, complete.get(), db);
            std::printf("verdict %s\n", stats.verdict.c_str());
            std::printf("unresolved %" PRIu64 "\n", verdict.unresolved);
            std::printf("timed_out %d\n", verdict.timed_out ? 1 : 0);
            std::printf("incomplete_calls %" PRIu64 "\n", stats.incomplete_calls);
            std::printf("complete_calls %" PRIu64 "\n", stats.complete_calls);
            std::printf("refinements %" PRIu64 "\n", stats.refinements);
            std::printf("cvd_blocks %" PRIu64 "\n", stats.cvd_blocks);
            std::printf("max_size %u\n", stats.max_size);
            std::printf("min_size %u\n", stats.min_size);
            std::printf("wall_seconds %s\n", fixed6(stats.wall_seconds).c_str());
            if (!ver_witness.empty() && verdict.status == BallStatus::NonRobust) {
                save_image(verdict.witness, ver_witness);
                log_info("witness written to " + ver_witness);
            }
            if (!ver_stats.empty()) {
                FlatJson json;
                json.add("verdict", stats.verdict);
                json.add("unresolved", verdict.unresolved);
                json.add("timed_out", verdict.timed_out);
                json.add("incomplete_calls", stats.incomplete_calls);
                json.add("complete_calls", stats.complete_calls);
                json.add("refinements", stats.refinements);
                json.add("cvd_blocks", stats.cvd_blocks);
                json.add("skipped_small", stats.skipped_small);
                json.add("max_size", std::uint64_t(stats.max_size));
                json.add("min_size", std::uint64_t(stats.min_size));
                json.add("wall_seconds", stats.wall_seconds);
                json.add("backend_seconds", stats.backend_seconds);
                for (const auto& [size, count] : stats.incomplete_by_size) {
                    json.add("incomplete_calls_size_" + std::to_string(size), count);
                }
                json.write(ver_stats);
            }
            return verdict_exit_code(verdict);
        }
        std::fprintf(stderr, "no subcommand\n");
        return 10;
    } catch (const CoverNotFound& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 12;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 11;
    }
}
