#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/lyapunov.hpp"

namespace rwre {

// Desk-scale slowdown experiments: trap frequency vs n, the X_n / n^{s'}
// trend, and the annealed tail P_0(X_n > n^{s'}).

struct TrapScanRow {
    std::int64_t n = 0;
    std::int64_t window = 0;   // arm: U = [-window, window]
    std::int64_t samples = 0;
    std::int64_t successes = 0;  // environments with survival >= e^{-2}
    double q_hat = 0.0;
    double std_error = 0.0;
};

struct TrapScanReport {
    std::vector<TrapScanRow> rows;
    double k_used = 0.0;
    bool k_auto = false;
    double threshold = 0.0;  // e^{-2}
    double slope = 0.0;      // least-squares slope of log q vs log n
    double slope_std_error = 0.0;
    bool slope_valid = false;  // >= 2 usable points (>= 10 successes each)
    std::optional<double> s_reference;
    bool slope_in_band = false;  // slope in [-1.5 s, -0.5 s] when s_reference set
    std::vector<std::string> flags;
    std::string regime;
};

struct TrapScanOptions {
    std::optional<double> K;  // window coefficient; default ceil(2/|gamma|)
    std::int64_t env_samples = 2000;
    bool force = false;  // skip the regime precondition
    std::int64_t min_fit_successes = 10;
    std::optional<double> s_reference;  // check the slope against [-1.5 s, -0.5 s]
};

// For each n: sample environments, count the fraction whose exact survival
// probability in [-ceil(K log n), ceil(K log n)] at horizon n is >= e^{-2},
// then fit the log-log slope. Requires a zero-speed transient regime unless
// forced; raises InvalidInput("AllZero...") when no environment traps at any n.
TrapScanReport trap_frequency_scan(const EnvironmentSpec& spec,
                                   const std::vector<std::int64_t>& n_grid,
                                   const TrapScanOptions& opts, std::uint64_t seed,
                                   int workers);

struct SlowdownCell {
    std::int64_t n = 0;
    double s_prime = 0.0;
    double median = 0.0;
    double upper_quartile = 0.0;
    double median_std_error = 0.0;  // bootstrap
};

struct SlowdownReport {
    double s = 0.0;  // slowdown exponent when computable, else NaN
    bool mirrored = false;  // Case 2: statistic is (-X_n) / n^{s'}
    std::int64_t walkers = 0;
    std::string regime;
    std::vector<SlowdownCell> cells;
};

struct SlowdownOptions {
    std::optional<double> s_reference;  // skip the internal find-s
    std::int64_t bootstrap = 200;
    bool force = false;
};

SlowdownReport slowdown_curve(const EnvironmentSpec& spec,
                              const std::vector<double>& s_prime_grid,
                              const std::vector<std::int64_t>& n_grid,
                              std::int64_t walkers, const SlowdownOptions& opts,
                              std::uint64_t seed, int workers);

struct TailEstimate {
    std::int64_t n = 0;
    double s_prime = 0.0;
    double threshold = 0.0;  // n^{s'}
    double p_hat = 0.0;      // P_0(X_n > n^{s'})
    double std_error = 0.0;
    std::int64_t walkers = 0;
};

TailEstimate annealed_tail(const EnvironmentSpec& spec, std::int64_t n,
                           double s_prime, std::int64_t walkers, std::uint64_t seed,
                           int workers);

std::vector<std::int64_t> default_n_grid();  // 2^10 .. 2^16

}  // namespace rwre
