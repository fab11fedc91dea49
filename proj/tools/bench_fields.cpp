// Benchmark for the pairwise field kernel: serial reference vs the OpenMP
// batch, with a doubling sweep that estimates the scaling exponent.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "sphereflow/fields.hpp"
#include "sphereflow/run.hpp"

using namespace sphereflow;

namespace {

double time_once(const ParticleEnsemble& mu, const KernelSpec& k, bool parallel,
                 std::vector<double>& out) {
    const auto start = std::chrono::steady_clock::now();
    if (parallel) {
        velocity_batch(sources(mu), k, FieldMode::General, {mu.x.data(), mu.x.size()},
                       mu.size(), {out.data(), out.size()});
    } else {
        velocity_batch_serial(sources(mu), k, FieldMode::General,
                              {mu.x.data(), mu.x.size()}, mu.size(),
                              {out.data(), out.size()});
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

double best_of(int reps, const ParticleEnsemble& mu, const KernelSpec& k, bool parallel,
               std::vector<double>& out) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) best = std::min(best, time_once(mu, k, parallel, out));
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    run::apply_thread_env();
    const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;

    const std::vector<int> sizes = quick ? std::vector<int>{250, 500}
                                         : std::vector<int>{500, 1000, 2000};
    const int reps = quick ? 2 : 3;

    std::printf("%8s %14s %14s %10s\n", "n", "serial[ms]", "parallel[ms]", "equal");
    std::vector<double> serial_times;
    bool all_equal = true;
    for (int n : sizes) {
        const ParticleEnsemble mu = uniform_ensemble(3, n, 99);
        const KernelSpec k = make_simple_attention(1.0, 3);
        std::vector<double> a(mu.x.size()), b(mu.x.size());
        const double ts = best_of(reps, mu, k, false, a);
        const double tp = best_of(reps, mu, k, true, b);
        const bool equal = a == b;
        all_equal = all_equal && equal;
        serial_times.push_back(ts);
        std::printf("%8d %14.3f %14.3f %10s\n", n, ts * 1e3, tp * 1e3,
                    equal ? "yes" : "NO");
    }

    if (!all_equal) {
        std::printf("FAIL: parallel batch is not bit-identical to the serial reference\n");
        return 1;
    }

    if (!quick) {
        // doubling n should multiply the time by ~4
        bool scaling_ok = true;
        for (std::size_t i = 1; i < serial_times.size(); ++i) {
            const double exponent = std::log2(serial_times[i] / serial_times[i - 1]);
            std::printf("scaling exponent %zu: %.2f\n", i, exponent);
            scaling_ok = scaling_ok && exponent > 1.4 && exponent < 2.8;
        }
        if (!scaling_ok) {
            std::printf("FAIL: pairwise kernel does not scale like n^2\n");
            return 1;
        }
    }
    std::printf("ok\n");
    return 0;
}
