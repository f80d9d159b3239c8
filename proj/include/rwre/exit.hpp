#pragma once

#include <cstdint>

#include "rwre/environment.hpp"

namespace rwre {

// Exact quenched exit probabilities and window survival.

enum class ExitSide { Minus, Plus };  // reach (-inf,a] first / reach [b,inf) first

// Ratio formula: P{a,b,-} from k equals
//   sum_{j=k}^{b-1} delta(j, a+1) / sum_{j=a}^{b-1} delta(j, a+1),
// evaluated from one shared prefix pass with a common max subtracted, so
// equal-delta cases reduce to an exact integer ratio.
double exit_prob_closed(const EnvView& env, std::int64_t k, std::int64_t a,
                        std::int64_t b, ExitSide side);

// First-step-analysis oracle: solve h(x) = sum_z omega_x(z) h(x+z) on
// a < x < b with h = 1 on the absorbing target side (sites a-L+1..a for
// Minus, site b for Plus) and 0 on the other. Banded elimination, bandwidth
// L+1. Window b - a must be <= 1e4.
double exit_prob_linear(const EnvView& env, std::int64_t k, std::int64_t a,
                        std::int64_t b, ExitSide side);

struct TrapQuantities {
    std::int64_t M = 0, N = 0;
    double r_plus = 0.0;   // R_M = (1/M) log delta(M, 1)
    double r_minus = 0.0;  // R_N = (1/N) log sum_{j=-L}^{-1} delta(j, -N)
    double gamma_u = 0.0;  // 1 ^ max(e^{N R_-}, e^{-M R_+})
    double bound6 = 0.0;   // (1 - e^{-M R_+})_+  lower bound from site 1
    double bound7 = 0.0;   // (1 - e^{N R_-})_+   lower bound from sites -1..-L
};

// Requires M > 1, N > L.
TrapQuantities trap_quantities(const EnvView& env, std::int64_t N, std::int64_t M);

// P_{0,omega}(T_U > n) for U = [-N, M], computed exactly by iterating the
// substochastic transition operator restricted to U. Aborts with
// NumericalFault if the total mass ever grows by more than 1e-12.
double survival_exact(const EnvView& env, std::int64_t N, std::int64_t M,
                      std::int64_t n);

// First step at which the surviving mass drops below `threshold`, or n+1 if
// it stays above through step n. Same iteration as survival_exact; mass is
// nonincreasing, so "survival_exact >= threshold" equals "result == n+1".
std::int64_t survival_threshold_step(const EnvView& env, std::int64_t N,
                                     std::int64_t M, std::int64_t n,
                                     double threshold);

}  // namespace rwre
