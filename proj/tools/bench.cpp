// Benchmark: OpenMP-parallel paths against their serial reference
// implementations (stream generation, sampling, full analysis).

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <vector>

#include <omp.h>

#include "coverd/engine.hpp"
#include "coverd/rng.hpp"

using namespace coverd;

namespace {

Network random_affine_net(std::uint32_t pixels, std::uint32_t classes, double margin,
                          std::uint64_t seed) {
    Rng rng(seed);
    Layer layer;
    layer.rows = classes;
    layer.cols = pixels;
    layer.weights.resize(std::size_t(classes) * pixels);
    layer.bias.assign(classes, 0.0);
    for (auto& w : layer.weights) w = (rng.unit() - 0.5) / double(pixels);
    layer.bias[0] = margin;  // class 0 wins everywhere when margin is large
    Network net;
    net.layers.push_back(std::move(layer));
    return net;
}

double bench_stream(const PgParams& params, std::uint64_t v, unsigned workers,
                    std::uint64_t limit, std::uint64_t* checksum) {
    InducedSelection sel = draw_selection(params, v, 7);
    double start = omp_get_wtime();
    std::vector<std::uint64_t> sums(workers, 0);
#pragma omp parallel for schedule(static, 1) num_threads(workers)
    for (int w = 0; w < int(workers); ++w) {
        CvdGenerator gen(params, sel, unsigned(w), workers);
        std::uint64_t emitted = 0, sum = 0;
        while (emitted < limit / workers) {
            auto block = gen.next();
            if (!block) break;
            sum += block->size();
            ++emitted;
        }
        sums[w] = sum;
    }
    double elapsed = omp_get_wtime() - start;
    *checksum = 0;
    for (auto s : sums) *checksum += s;
    return elapsed;
}

}  // namespace

int main(int argc, char** argv) {
    unsigned workers = argc > 1 ? unsigned(std::atoi(argv[1])) : 2;
    std::printf("benchmarking with %u workers\n\n", workers);

    {
        PgParams params(17, 5, 5);
        std::uint64_t limit = 100000;
        std::uint64_t sum_serial = 0, sum_parallel = 0;
        double serial = bench_stream(params, 784, 1, limit, &sum_serial);
        double parallel = bench_stream(params, 784, workers, limit, &sum_parallel);
        std::printf("cvd stream   (q=17,m=5,t=5,v=784, %llu blocks)\n",
                    (unsigned long long)limit);
        std::printf("  serial   %8.3fs\n", serial);
        std::printf("  parallel %8.3fs   speedup %.2fx\n\n", parallel, serial / parallel);
    }

    {
        Network net = random_affine_net(96, 4, 0.25, 11);
        std::vector<double> image(96, 0.5);
        IbpBackend ibp(net);
        std::uint32_t label = net.classify(image);
        SampleOptions opts;
        opts.n_samples = 400;
        opts.workers = workers;
        opts.seed = 3;
        opts.parallel = false;
        double start = omp_get_wtime();
        KStats serial_stats = sample_kstats(ibp, image, label, 2, 96, opts);
        double serial = omp_get_wtime() - start;
        opts.parallel = true;
        start = omp_get_wtime();
        KStats parallel_stats = sample_kstats(ibp, image, label, 2, 96, opts);
        double parallel = omp_get_wtime() - start;
        bool match = serial_stats.successes == parallel_stats.successes &&
                     serial_stats.samples == parallel_stats.samples;
        std::printf("sample_kstats (v=96, k=2..96, 400 samples each)\n");
        std::printf("  serial   %8.3fs\n", serial);
        std::printf("  parallel %8.3fs   speedup %.2fx   identical tallies: %s\n\n",
                    parallel, serial / parallel, match ? "yes" : "NO");
    }

    {
        std::uint32_t pixels = 48;
        Network net = random_affine_net(pixels, 3, 0.4, 5);
        std::vector<double> image(pixels, 0.5);
        IbpBackend ibp(net);
        ExactAffineBackend exact(net);
        CoverDb db(std::filesystem::temp_directory_path() /
                   ("coverd_bench_db_" + std::to_string(::getpid())));
        BuildOptions build;
        build.t = 2;
        build.max_v = pixels;
        build_db(db, build);
        RunConfig cfg;
        cfg.t = 2;
        cfg.workers = workers;
        cfg.n_samples = 80;
        cfg.reduced_samples = workers * 2;
        while (cfg.n_samples % workers) ++cfg.n_samples;
        cfg.seed = 9;

        cfg.serial = true;
        double start = omp_get_wtime();
        auto serial_out = verify_ball(net, image, cfg, ibp, &exact, db);
        double serial = omp_get_wtime() - start;
        cfg.serial = false;
        start = omp_get_wtime();
        auto parallel_out = verify_ball(net, image, cfg, ibp, &exact, db);
        double parallel = omp_get_wtime() - start;
        std::printf("verify_ball  (affine net, v=%u, t=2)\n", pixels);
        std::printf("  serial   %8.3fs   verdict %s\n", serial,
                    serial_out.second.verdict.c_str());
        std::printf("  parallel %8.3fs   verdict %s   speedup %.2fx\n", parallel,
                    parallel_out.second.verdict.c_str(), serial / parallel);
        std::error_code ec;
        std::filesystem::remove_all(db.root(), ec);
    }
    return 0;
}
