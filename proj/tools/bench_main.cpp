// Benchmark: OpenMP kernels against the serial reference path. Each kernel
// is run both ways and the outputs are compared bit for bit before timing is
// reported, so a speedup never comes at the cost of the determinism contract.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/exit.hpp"
#include "rwre/lyapunov.hpp"
#include "rwre/parallel.hpp"
#include "rwre/walk.hpp"

using namespace rwre;

namespace {

EnvironmentSpec golden_spec() {
    EnvironmentSpec spec;
    spec.L = 1;
    spec.kappa = 0.05;
    spec.atoms.push_back({SiteLaw::from_map(1, {{-1, 0.2}, {0, 0.0}, {1, 0.8}}), 0.5});
    spec.atoms.push_back(
        {SiteLaw::from_map(1, {{-1, 2.0 / 3.0}, {0, 0.0}, {1, 1.0 / 3.0}}), 0.5});
    return spec;
}

double time_s(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void line(const char* name, double serial, double parallel, bool identical) {
    std::printf("%-22s %9.3f s %9.3f s %7.2fx   %s\n", name, serial, parallel,
                serial / parallel, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int workers = resolve_workers(argc > 1 ? std::atoi(argv[1]) : 0);
    const auto spec = golden_spec();
    std::printf("workers: 1 (serial reference) vs %d (OpenMP)\n\n", workers);
    std::printf("%-22s %11s %11s %8s\n", "kernel", "serial", "parallel", "speedup");

    {
        std::vector<double> a, b;
        const double ts =
            time_s([&] { a = replica_log_deltas(spec, 20000, 128, 7, 1); });
        const double tp =
            time_s([&] { b = replica_log_deltas(spec, 20000, 128, 7, workers); });
        line("replica log-deltas", ts, tp, a == b);
    }

    {
        auto run = [&](int w) {
            std::vector<double> out(256);
            run_indexed(256, w, [&](std::int64_t i) {
                const EnvironmentWindow env(spec, -55, 55,
                                            derive(11, static_cast<std::uint64_t>(i)));
                out[static_cast<std::size_t>(i)] =
                    survival_exact(EnvView(env), 55, 55, 4096);
            });
            return out;
        };
        std::vector<double> a, b;
        const double ts = time_s([&] { a = run(1); });
        const double tp = time_s([&] { b = run(workers); });
        line("survival batch", ts, tp, a == b);
    }

    {
        std::vector<std::int64_t> a, b;
        const double ts = time_s([&] {
            a = batch_final_positions(spec, 16384, 2000, 3, BatchMode::Annealed, 1);
        });
        const double tp = time_s([&] {
            b = batch_final_positions(spec, 16384, 2000, 3, BatchMode::Annealed, workers);
        });
        line("walker batch", ts, tp, a == b);
    }

    return 0;
}
