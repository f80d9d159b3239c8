#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/rng.hpp"

namespace rwre {

// Quenched walk: X_{n+1} = X_n + z with z ~ omega_{X_n}.

struct StopSpec {
    std::optional<std::int64_t> left_level;   // stop when X <= left_level (n > 0)
    std::optional<std::int64_t> right_level;  // stop when X >= right_level (n > 0)
    std::optional<std::pair<std::int64_t, std::int64_t>> interval;  // stop on exit
    std::int64_t cap = 1'000'000;

    bool valid() const {
        return cap >= 1 && (left_level || right_level || interval);
    }
};

enum class StopReason { LeftLevel, RightLevel, ExitedInterval, Censored };

const char* stop_reason_name(StopReason r);

struct Trajectory {
    std::int64_t start = 0;
    std::int64_t final_position = 0;
    std::int64_t steps = 0;
    StopReason reason = StopReason::Censored;
    std::int64_t record_stride = 1;
    std::vector<std::pair<std::int64_t, std::int64_t>> recorded;  // (step, position)
};

// One transition from site x. Left jumps can overshoot a level by up to
// L - 1; right stops are hit exactly (right jumps are +1).
std::int64_t step(const EnvView& env, std::int64_t x, SplitMix64& rng);

// Walk until a stopping rule fires or the cap is reached (Censored). With an
// interval rule, steps is the exit time T_U; a start outside the interval
// exits at step 0.
Trajectory run_until(const EnvView& env, std::int64_t x0, const StopSpec& stop,
                     std::uint64_t seed);

enum class BatchMode { Annealed, Quenched };

// Final positions of `walkers` independent n-step walks from 0. Annealed
// mode draws a fresh environment per walker (this is the annealed law);
// quenched mode shares the environment derived from the master seed.
std::vector<std::int64_t> batch_final_positions(const EnvironmentSpec& spec,
                                                std::int64_t n, std::int64_t walkers,
                                                std::uint64_t seed, BatchMode mode,
                                                int workers);

}  // namespace rwre
