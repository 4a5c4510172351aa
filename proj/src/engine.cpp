#include "coverd/engine.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <set>

#include "coverd/rng.hpp"

namespace coverd {

const char* to_string(BallStatus s) {
    switch (s) {
        case BallStatus::Robust: return "robust";
        case BallStatus::NonRobust: return "non-robust";
        case BallStatus::Unknown: return "unknown";
    }
    return "unknown";
}

PlanArtifacts plan_ball(const Network& net, std::span<const double> image,
                        const RunConfig& cfg, const Backend& incomplete,
                        const Backend* complete, const CoverDb& db) {
    auto start = std::chrono::steady_clock::now();
    PlanArtifacts art;
    std::uint32_t label = net.classify(image);

    SampleOptions sopts;
    sopts.n_samples = cfg.n_samples;
    sopts.n_fail = cfg.n_fail;
    sopts.reduced_samples = cfg.reduced_samples;
    sopts.workers = cfg.workers;
    sopts.seed = mix_seed(cfg.seed, 0x5a17);
    sopts.parallel = !cfg.serial;
    art.stats = sample_kstats(incomplete, image, label, cfg.t, cfg.max_k, sopts);

    art.t_complete =
        complete ? estimate_complete_time(*complete, image, label, cfg.t,
                                          cfg.complete_probe, mix_seed(cfg.seed, 0x7c))
                 : 0.0;

    CoverSizeFn sizes = [&db](std::uint32_t v, std::uint32_t k, unsigned t) {
        return db.block_count(v, k, t);
    };
    art.plan = refine_plan(art.stats, sizes, art.t_complete);

    double min_k = cfg.min_k > 0 ? cfg.min_k : double(cfg.t);
    DesignChoice choice =
        choose_design(image.size(), cfg.t, art.stats, art.plan, min_k, cfg.max_k,
                      cfg.eps, cfg.seed, cfg.deterministic_rounding);
    art.chosen = choice.chosen;
    art.selection = std::move(choice.selection);
    art.scores = std::move(choice.scores);
    art.plan_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return art;
}

std::vector<Block> refine(const Block& S, const RefinementPlan& plan,
                          const CoverDb& db, unsigned t) {
    const std::uint32_t k = std::uint32_t(S.size());
    if (k <= t) throw std::invalid_argument("refine: block not larger than t");
    if (k > plan.max_k) {
        throw std::runtime_error("refine: block of size " + std::to_string(k) +
                                 " exceeds the planned maximum " +
                                 std::to_string(plan.max_k));
    }
    return rename_to(db.get(k, plan.f_R(k), t), S);
}

namespace {

using Clock = std::chrono::steady_clock;

struct WorkerStats {
    std::uint64_t incomplete_calls = 0;
    std::map<std::uint32_t, std::uint64_t> incomplete_by_size;
    std::uint64_t complete_calls = 0;
    std::uint32_t max_size = 0;
    std::uint32_t min_size = UINT32_MAX;
    std::uint64_t refinements = 0;
    std::uint64_t cvd_blocks = 0;
    std::uint64_t skipped_small = 0;
    std::uint64_t unresolved = 0;
    double backend_seconds = 0.0;
};

struct SharedState {
    std::atomic<bool> stop{false};
    std::atomic<bool> timed_out{false};
    std::mutex mu;
    std::set<Block> submitted_t_blocks;  // global complete-backend dedup
    bool have_witness = false;
    std::vector<double> witness;
    Clock::time_point deadline{};
    bool has_deadline = false;

    bool deadline_passed() const {
        return has_deadline && Clock::now() >= deadline;
    }
};

struct Worker {
    CvdGenerator gen;
    std::vector<Block> stack;
    WorkerStats stats;
    bool exhausted = false;

    Worker(const PgParams& params, const InducedSelection& sel, unsigned id,
           unsigned n_workers)
        : gen(params, sel, id, n_workers) {}
};

class Analysis {
public:
    Analysis(const Network& net, std::span<const double> image,
             const PlanArtifacts& art, const RunConfig& cfg,
             const Backend& incomplete, const Backend* complete, const CoverDb& db)
        : image_(image),
          art_(art),
          cfg_(cfg),
          incomplete_(incomplete),
          complete_(complete),
          db_(db),
          label_(net.classify(image)) {
        if (cfg.timeout_seconds > 0) {
            shared_.deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                                  std::chrono::duration<double>(
                                                      cfg.timeout_seconds));
            shared_.has_deadline = true;
        }
    }

    std::pair<BallVerdict, RunStats> run() {
        auto start = Clock::now();
        const unsigned n = cfg_.workers;
        std::vector<Worker> workers;
        workers.reserve(n);
        for (unsigned w = 0; w < n; ++w) {
            workers.emplace_back(art_.chosen.params, art_.selection, w, n);
        }
        std::exception_ptr failure;

        if (cfg_.serial) {
            // Reference scheduler: round-robin, one stream block per turn.
            bool alive = true;
            while (alive && !shared_.stop.load(std::memory_order_relaxed)) {
                alive = false;
                for (auto& worker : workers) {
                    if (worker.exhausted || shared_.stop.load(std::memory_order_relaxed)) {
                        continue;
                    }
                    step(worker);
                    alive = alive || !worker.exhausted;
                }
            }
        } else {
#pragma omp parallel for schedule(static, 1)
            for (int w = 0; w < int(n); ++w) {
                try {
                    while (!workers[w].exhausted &&
                           !shared_.stop.load(std::memory_order_relaxed)) {
                        step(workers[w]);
                    }
                } catch (...) {
#pragma omp critical
                    if (!failure) failure = std::current_exception();
                    shared_.stop.store(true, std::memory_order_relaxed);
                }
            }
        }
        if (failure) std::rethrow_exception(failure);

        BallVerdict verdict;
        RunStats stats;
        for (const auto& worker : workers) {
            const auto& ws = worker.stats;
            stats.incomplete_calls += ws.incomplete_calls;
            for (const auto& [size, count] : ws.incomplete_by_size) {
                stats.incomplete_by_size[size] += count;
            }
            stats.complete_calls += ws.complete_calls;
            stats.max_size = std::max(stats.max_size, ws.max_size);
            stats.min_size = std::min(stats.min_size == 0 ? UINT32_MAX : stats.min_size,
                                      ws.min_size);
            stats.refinements += ws.refinements;
            stats.cvd_blocks += ws.cvd_blocks;
            stats.skipped_small += ws.skipped_small;
            verdict.unresolved += ws.unresolved;
            stats.backend_seconds += ws.backend_seconds;
        }
        if (stats.min_size == UINT32_MAX) stats.min_size = 0;

        verdict.timed_out = shared_.timed_out.load();
        if (shared_.have_witness) {
            verdict.status = BallStatus::NonRobust;
            verdict.witness = shared_.witness;
            verdict.unresolved = 0;
        } else if (verdict.timed_out || verdict.unresolved > 0) {
            verdict.status = BallStatus::Unknown;
        } else {
            verdict.status = BallStatus::Robust;
        }
        stats.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
        stats.verdict = to_string(verdict.status);
        return {verdict, stats};
    }

private:
    // Pull one stream block and resolve it (including refinements).
    void step(Worker& worker) {
        auto next = worker.gen.next();
        if (!next) {
            worker.exhausted = true;
            return;
        }
        if (next->size() < cfg_.t) {
            ++worker.stats.skipped_small;
            return;
        }
        ++worker.stats.cvd_blocks;
        worker.stack.push_back(std::move(*next));
        while (!worker.stack.empty()) {
            if (shared_.stop.load(std::memory_order_relaxed)) return;
            if (shared_.deadline_passed()) {
                shared_.timed_out.store(true);
                shared_.stop.store(true, std::memory_order_relaxed);
                return;
            }
            Block S = std::move(worker.stack.back());
            worker.stack.pop_back();
            process(worker, S);
        }
    }

    void process(Worker& worker, const Block& S) {
        auto& ws = worker.stats;
        const std::uint32_t size = std::uint32_t(S.size());
        auto nbh = make_neighborhood(image_, S);
        auto res = incomplete_.verify(nbh, label_);
        ++ws.incomplete_calls;
        ++ws.incomplete_by_size[size];
        ws.max_size = std::max(ws.max_size, size);
        ws.min_size = std::min(ws.min_size, size);
        ws.backend_seconds += res.seconds;
        if (res.status == BackendStatus::Verified) return;

        if (size == cfg_.t) {
            bool fresh;
            {
                std::scoped_lock lock(shared_.mu);
                fresh = shared_.submitted_t_blocks.insert(S).second;
            }
            if (!fresh) return;  // another worker already owns this block
            if (!complete_) {
                ++ws.unresolved;
                return;
            }
            auto cres = complete_->verify(nbh, label_);
            ++ws.complete_calls;
            ws.backend_seconds += cres.seconds;
            if (cres.status == BackendStatus::Falsified) {
                std::scoped_lock lock(shared_.mu);
                if (!shared_.have_witness) {
                    shared_.have_witness = true;
                    shared_.witness = cres.witness;
                }
                shared_.stop.store(true, std::memory_order_relaxed);
            } else if (cres.status == BackendStatus::Unknown) {
                ++ws.unresolved;  // only possible with a simulated complete backend
            }
            return;
        }

        ++ws.refinements;
        for (auto& piece : refine(S, art_.plan, db_, cfg_.t)) {
            worker.stack.push_back(std::move(piece));
        }
    }

    std::span<const double> image_;
    const PlanArtifacts& art_;
    const RunConfig& cfg_;
    const Backend& incomplete_;
    const Backend* complete_;
    const CoverDb& db_;
    std::uint32_t label_;
    SharedState shared_;
};

}  // namespace

std::pair<BallVerdict, RunStats> run_analysis(const Network& net,
                                              std::span<const double> image,
                                              const PlanArtifacts& artifacts,
                                              const RunConfig& cfg,
                                              const Backend& incomplete,
                                              const Backend* complete,
                                              const CoverDb& db) {
    // Warm the covering cache up front; workers then only read.
    std::vector<std::array<std::uint32_t, 3>> needed;
    for (unsigned k = cfg.t + 1; k <= artifacts.plan.max_k; ++k) {
        needed.push_back({k, artifacts.plan.f_R(k), cfg.t});
    }
    db.preload(needed);
    Analysis analysis(net, image, artifacts, cfg, incomplete, complete, db);
    return analysis.run();
}

std::pair<BallVerdict, RunStats> verify_ball(const Network& net,
                                             std::span<const double> image,
                                             const RunConfig& cfg,
                                             const Backend& incomplete,
                                             const Backend* complete,
                                             const CoverDb& db) {
    PlanArtifacts art = plan_ball(net, image, cfg, incomplete, complete, db);
    auto [verdict, stats] = run_analysis(net, image, art, cfg, incomplete, complete, db);
    stats.wall_seconds += art.plan_seconds;
    return {verdict, stats};
}

}  // namespace coverd
