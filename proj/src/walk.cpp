#include "rwre/walk.hpp"

#include <algorithm>

#include "rwre/parallel.hpp"

namespace rwre {

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::LeftLevel: return "left_level";
        case StopReason::RightLevel: return "right_level";
        case StopReason::ExitedInterval: return "exited_interval";
        case StopReason::Censored: return "censored";
    }
    return "?";
}

std::int64_t step(const EnvView& env, std::int64_t x, SplitMix64& rng) {
    return x + env.law(x).sample_jump(rng.next_unit());
}

Trajectory run_until(const EnvView& env, std::int64_t x0, const StopSpec& stop,
                     std::uint64_t seed) {
    if (!stop.valid())
        throw InvalidInput("run_until: need cap >= 1 and at least one stopping rule");
    Trajectory traj;
    traj.start = x0;
    traj.record_stride = std::max<std::int64_t>(1, (stop.cap + 1023) / 1024);
    traj.recorded.emplace_back(0, x0);

    auto outside = [&](std::int64_t x) {
        return stop.interval && (x < stop.interval->first || x > stop.interval->second);
    };
    // T_U = inf{k >= 0 : X_k outside U}: a start outside exits immediately.
    if (outside(x0)) {
        traj.final_position = x0;
        traj.steps = 0;
        traj.reason = StopReason::ExitedInterval;
        return traj;
    }

    SplitMix64 rng(derive(seed, kStreamWalk));
    std::int64_t x = x0;
    for (std::int64_t k = 1; k <= stop.cap; ++k) {
        x = step(env, x, rng);
        const bool record = k % traj.record_stride == 0;
        if (stop.left_level && x <= *stop.left_level) {
            traj.reason = StopReason::LeftLevel;
        } else if (stop.right_level && x >= *stop.right_level) {
            traj.reason = StopReason::RightLevel;
        } else if (outside(x)) {
            traj.reason = StopReason::ExitedInterval;
        } else {
            if (record) traj.recorded.emplace_back(k, x);
            if (k == stop.cap) {
                traj.reason = StopReason::Censored;
                traj.final_position = x;
                traj.steps = k;
                if (!record) traj.recorded.emplace_back(k, x);
                return traj;
            }
            continue;
        }
        traj.final_position = x;
        traj.steps = k;
        traj.recorded.emplace_back(k, x);
        return traj;
    }
    return traj;  // unreachable; cap >= 1
}

std::vector<std::int64_t> batch_final_positions(const EnvironmentSpec& spec,
                                                std::int64_t n, std::int64_t walkers,
                                                std::uint64_t seed, BatchMode mode,
                                                int workers) {
    require_structure(spec);
    if (walkers < 1) throw InvalidInput("batch_final_positions: walkers >= 1");
    if (n < 0) throw InvalidInput("batch_final_positions: n >= 0");

    const std::uint64_t env_stream = derive(seed, kStreamEnv);
    const std::uint64_t walk_stream = derive(seed, kStreamWalk);
    // Quenched mode: one shared environment for every walker.
    const EnvironmentWindow shared =
        EnvironmentWindow::lazy(spec, derive(env_stream, 0));

    std::vector<std::int64_t> finals(static_cast<std::size_t>(walkers));
    run_indexed(walkers, workers, [&](std::int64_t w) {
        // Annealed mode: a fresh environment per walker is exactly the
        // annealed law P_0.
        std::optional<EnvironmentWindow> own;
        if (mode == BatchMode::Annealed)
            own.emplace(EnvironmentWindow::lazy(
                spec, derive(env_stream, static_cast<std::uint64_t>(w))));
        const EnvView env(own ? *own : shared);
        SplitMix64 rng(derive(walk_stream, static_cast<std::uint64_t>(w)));
        std::int64_t x = 0;
        for (std::int64_t k = 0; k < n; ++k) x = step(env, x, rng);
        finals[static_cast<std::size_t>(w)] = x;
    });
    return finals;
}

}  // namespace rwre
