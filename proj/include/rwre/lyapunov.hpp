#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rwre/environment.hpp"

namespace rwre {

// Top Lyapunov exponent gamma_L, the moment function F(u), its Legendre
// transform I(x), the slowdown root F(s) = 0, and the regime classification
// driven by the signs of gamma_L, F(1) and F(-1).

struct LyapunovEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
    std::int64_t replicas = 0;
    std::string method;  // "monte-carlo" | "exact-enumeration"
};

struct FEval {
    double value = 0.0;
    double std_error = 0.0;
};

struct MomentPoint {
    double u = 0.0;
    double f_hat = 0.0;
    double std_error = 0.0;
    bool heavy_tail = false;  // top replica carried >99% of the u-th moment mass
};

struct MomentCurve {
    std::vector<MomentPoint> points;  // strictly increasing u
    std::int64_t n = 0;
    std::int64_t replicas = 0;
    std::string method;

    const MomentPoint* find_u(double u) const;
};

struct RatePoint {
    double x = 0.0;
    double rate = 0.0;
    double argmax_u = 0.0;
};

struct RateFunction {
    MomentCurve repaired;  // convex minorant of the input curve
    std::vector<RatePoint> points;
};

enum class Regime {
    TransientRightPositiveSpeed,
    TransientRightZeroSpeed,
    TransientLeftNegativeSpeed,
    TransientLeftZeroSpeed,
    Recurrent,
};

const char* regime_name(Regime r);

struct RegimeReport {
    Regime regime = Regime::Recurrent;
    LyapunovEstimate gamma;
    FEval f1, fm1;
    double z_gamma = 0.0;     // gamma / se
    double z_decisive = 0.0;  // z of the F(1) or F(-1) sign decision
    std::vector<std::string> inconclusive;  // decisions with |z| < 3
};

// Per-replica log delta over fresh length-n environments; replica r uses the
// seed substream derive(derive(seed, kStreamReplica), r). Deterministic for
// any worker count.
std::vector<double> replica_log_deltas(const EnvironmentSpec& spec, std::int64_t n,
                                       std::int64_t replicas, std::uint64_t seed,
                                       int workers);

LyapunovEstimate estimate_gamma(const EnvironmentSpec& spec, std::int64_t n,
                                std::int64_t replicas, std::uint64_t seed,
                                int workers);

// F(u) estimated per grid point by a log-sum-exp over replica log deltas;
// the standard error comes from the delta method on the log of the sample
// mean. F(0) is pinned to 0 exactly.
MomentCurve estimate_F(const EnvironmentSpec& spec, const std::vector<double>& u_grid,
                       std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                       int workers);

// Same estimator but from a precomputed replica sample (u-independent part
// is shared between grid points and bisection probes).
MomentPoint moment_point_from_sample(const std::vector<double>& log_deltas,
                                     double u, std::int64_t n);

// Exact (1/n) log E delta^u by exhaustive enumeration of atom sequences.
// Throws TooLarge when atoms^n > 1e7.
double exact_F_enumeration(const EnvironmentSpec& spec, double u, std::int64_t n);

// Enumeration analogues used by the classifier and exact curves.
double exact_gamma_enumeration(const EnvironmentSpec& spec, std::int64_t n);
MomentCurve exact_F_curve(const EnvironmentSpec& spec, const std::vector<double>& u_grid,
                          std::int64_t n);
bool enumeration_feasible(const EnvironmentSpec& spec, std::int64_t n,
                          double budget = 1e7);

// Greatest convex minorant of (u, F) grid points, same grid.
std::vector<double> convex_minorant(const std::vector<double>& u,
                                    const std::vector<double>& f);

// Legendre transform I(x) = max_u (u x - F(u)) over the repaired grid.
// Throws GridTooNarrow when the max for some requested x sits only on the
// grid boundary.
RateFunction legendre_rate(const MomentCurve& curve, const std::vector<double>& x_grid);

enum class RootSide { Positive, Negative };

struct RootOptions {
    double tol = 1e-6;                       // absolute tolerance in u
    std::int64_t base_replicas = 1024;       // first Monte Carlo sample size
    std::int64_t replica_budget = 10'000'000;  // total replica products
    // optional starting bracket (e.g. from a cached moment curve); end-point
    // signs are re-verified and the full side bracket is used on mismatch
    std::optional<std::pair<double, double>> bracket;
};

// Evaluates F(u); exact sources report std_error 0 and ignore the replica
// request. Monte Carlo sources must be deterministic in (u, replicas).
struct FEvaluator {
    std::function<FEval(double u, std::int64_t replicas)> eval;
    bool exact = false;
};

FEvaluator make_exact_evaluator(const EnvironmentSpec& spec, std::int64_t n);
FEvaluator make_mc_evaluator(const EnvironmentSpec& spec, std::int64_t n,
                             std::uint64_t seed, int workers);

// Bisection for the slowdown exponent: F(s) = 0 with s in (0,1) (Positive
// side, needs gamma < 0 and F(1) > 0) or s in (-1,0) (Negative side, needs
// gamma > 0 and F(-1) > 0). Monte Carlo sign tests escalate replicas x4
// until |F| >= 3 se; exceeding the budget throws Unresolved.
double find_root_s(const FEvaluator& eval, RootSide side,
                   const LyapunovEstimate& gamma, const RootOptions& opts = {});

// Sign table over (gamma, F(1), F(-1)); |z_gamma| < 3 means Recurrent.
// Exact inputs (se = 0) get z = +-inf, or 0 for an exactly-zero value.
RegimeReport classify_regime(const LyapunovEstimate& gamma, const FEval& f1,
                             const FEval& fm1);

// Convenience: classification inputs from enumeration when feasible, else
// Monte Carlo at the given (n, replicas).
RegimeReport classify_spec(const EnvironmentSpec& spec, std::int64_t n,
                           std::int64_t replicas, std::uint64_t seed, int workers,
                           bool prefer_exact = true);

std::vector<double> default_u_grid();  // -1.5 .. 1.5 step 0.1

}  // namespace rwre
