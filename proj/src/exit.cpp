#include "rwre/exit.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rwre/matrix.hpp"

namespace rwre {

namespace {

constexpr std::int64_t kMaxWindow = 10'000;

// Exit probabilities on 200-site windows are checked to 1e-12 against the
// delta-ratio route; the absorbing system's condition number grows like the
// delta range, so the solve runs in quad precision where the compiler has
// it. Plain arithmetic only, no libquadmath calls.
#if defined(__SIZEOF_FLOAT128__)
using quad = __float128;
#else
using quad = long double;
#endif

// Banded solve of the first-step equations on the interior of (a, b).
// Unknowns h(a+1..b-1); lower bandwidth L (jumps down to -L), upper 1.
// rhs[i] collects the absorbed mass on the target side. The system matrix
// I - Q is weakly diagonally dominant, so elimination needs no pivoting.
std::vector<quad> solve_interior(const EnvView& env, std::int64_t a,
                                 std::int64_t b, ExitSide side) {
    const int L = env.spec().L;
    const auto n = static_cast<std::size_t>(b - a - 1);
    const auto width = static_cast<std::size_t>(L + 2);  // offsets -L..+1
    std::vector<quad> band(n * width, quad(0));
    std::vector<quad> rhs(n, quad(0));
    auto at = [&](std::size_t i, std::int64_t j) -> quad& {
        return band[i * width + static_cast<std::size_t>(j - static_cast<std::int64_t>(i) + L)];
    };

    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t x = a + 1 + static_cast<std::int64_t>(i);
        const SiteLaw& law = env.law(x);
        // diagonal as the exact off-diagonal sum, not 1 - omega(0): the jump
        // chain must balance exactly even though the stored probabilities
        // only sum to 1 up to rounding (the chain amplifies any per-site
        // imbalance by the expected visit count)
        quad diag(0);
        for (int z = -L; z <= 1; ++z) {
            if (z == 0) continue;
            diag += quad(law.prob(z));
            const std::int64_t y = x + z;
            if (y <= a) {
                if (side == ExitSide::Minus) rhs[i] += quad(law.prob(z));
            } else if (y >= b) {
                if (side == ExitSide::Plus) rhs[i] += quad(law.prob(z));
            } else {
                at(i, y - (a + 1)) -= quad(law.prob(z));
            }
        }
        at(i, static_cast<std::int64_t>(i)) = diag;
    }

    // forward elimination (rows below i reach columns >= i - L)
    for (std::size_t i = 0; i < n; ++i) {
        const quad piv = at(i, static_cast<std::int64_t>(i));
        if (!(piv > quad(0) || piv < quad(0)))
            throw NumericalFault("exit_prob_linear: zero pivot");
        const std::size_t last = std::min(n - 1, i + static_cast<std::size_t>(L));
        for (std::size_t r = i + 1; r <= last && r < n; ++r) {
            const quad factor = at(r, static_cast<std::int64_t>(i)) / piv;
            if (factor == quad(0)) continue;
            at(r, static_cast<std::int64_t>(i)) = quad(0);
            // row i has one superdiagonal entry at column i+1
            if (i + 1 < n)
                at(r, static_cast<std::int64_t>(i + 1)) -=
                    factor * at(i, static_cast<std::int64_t>(i + 1));
            rhs[r] -= factor * rhs[i];
        }
    }
    // back substitution
    std::vector<quad> h(n, quad(0));
    for (std::size_t ii = n; ii-- > 0;) {
        quad acc = rhs[ii];
        if (ii + 1 < n)
            acc -= at(ii, static_cast<std::int64_t>(ii + 1)) * h[ii + 1];
        h[ii] = acc / at(ii, static_cast<std::int64_t>(ii));
    }
    return h;
}

}  // namespace

double exit_prob_closed(const EnvView& env, std::int64_t k, std::int64_t a,
                        std::int64_t b, ExitSide side) {
    if (!(a < k && k < b)) throw InvalidInput("exit_prob_closed: need a < k < b");
    // One prefix pass gives every log delta(j, a+1); numerator terms are a
    // suffix of the denominator terms, so share one max and divide the sums.
    const std::vector<long double> ld = log_delta_prefix_ext(env, a + 1, b - 1);
    long double max_l = ld[0];
    for (long double v : ld) max_l = std::max(max_l, v);
    long double den = 0.0L, num = 0.0L;
    for (std::int64_t j = a; j <= b - 1; ++j) {
        const long double term = expl(ld[static_cast<std::size_t>(j - a)] - max_l);
        den += term;
        if (j >= k) num += term;
    }
    const double minus = static_cast<double>(num / den);
    return side == ExitSide::Minus ? minus : 1.0 - minus;
}

double exit_prob_linear(const EnvView& env, std::int64_t k, std::int64_t a,
                        std::int64_t b, ExitSide side) {
    if (!(a < k && k < b)) throw InvalidInput("exit_prob_linear: need a < k < b");
    if (b - a > kMaxWindow)
        throw WindowTooLarge("exit_prob_linear: window exceeds 1e4 sites");
    const auto h = solve_interior(env, a, b, side);
    const double v = static_cast<double>(h[static_cast<std::size_t>(k - a - 1)]);
    return std::clamp(v, 0.0, 1.0);
}

TrapQuantities trap_quantities(const EnvView& env, std::int64_t N, std::int64_t M) {
    if (M <= 1 || N <= env.spec().L)
        throw InvalidInput("trap_quantities: need M > 1 and N > L");
    TrapQuantities t;
    t.M = M;
    t.N = N;
    t.r_plus = log_delta(env, M, 1) / static_cast<double>(M);
    t.r_minus =
        log_delta_sum(env, -env.spec().L, -1, -N) / static_cast<double>(N);
    t.gamma_u = std::min(
        1.0, std::max(std::exp(static_cast<double>(N) * t.r_minus),
                      std::exp(-static_cast<double>(M) * t.r_plus)));
    t.bound6 = std::max(0.0, -std::expm1(-static_cast<double>(M) * t.r_plus));
    t.bound7 = std::max(0.0, -std::expm1(static_cast<double>(N) * t.r_minus));
    return t;
}

namespace {

// Shared survival iteration; returns the first step the mass in U drops
// below `threshold` (n+1 if never) and leaves the final mass in *mass_out.
std::int64_t survival_iterate(const EnvView& env, std::int64_t N, std::int64_t M,
                              std::int64_t n, double threshold, double* mass_out) {
    if (N < 0 || M < 0) throw InvalidInput("survival: need N, M >= 0");
    if (N + M + 1 > kMaxWindow)
        throw WindowTooLarge("survival: window exceeds 1e4 sites");
    if (n < 0) throw InvalidInput("survival: n >= 0");
    const int L = env.spec().L;
    const auto size = static_cast<std::size_t>(N + M + 1);
    const auto width = static_cast<std::size_t>(L + 2);

    // per-site jump rows over U, materialized once
    std::vector<double> rows(size * width);
    for (std::size_t i = 0; i < size; ++i) {
        const SiteLaw& law = env.law(static_cast<std::int64_t>(i) - N);
        for (int z = -L; z <= 1; ++z)
            rows[i * width + static_cast<std::size_t>(z + L)] = law.prob(z);
    }

    std::vector<double> p(size, 0.0), q(size);
    p[static_cast<std::size_t>(N)] = 1.0;  // X_0 = 0
    double mass = 1.0;
    std::int64_t hit = n + 1;
    for (std::int64_t k = 1; k <= n; ++k) {
        std::fill(q.begin(), q.end(), 0.0);
        for (std::size_t i = 0; i < size; ++i) {
            const double w = p[i];
            if (w == 0.0) continue;
            const double* row = &rows[i * width];
            const std::int64_t x = static_cast<std::int64_t>(i) - N;
            for (int z = -L; z <= 1; ++z) {
                const std::int64_t y = x + z;
                if (y < -N || y > M) continue;
                q[static_cast<std::size_t>(y + N)] +=
                    w * row[static_cast<std::size_t>(z + L)];
            }
        }
        p.swap(q);
        double next_mass = 0.0;
        for (double v : p) next_mass += v;
        if (next_mass > mass + 1e-12)
            throw NumericalFault("survival: mass grew by more than 1e-12 at step " +
                                 std::to_string(k));
        mass = next_mass;
        if (mass < threshold) {
            hit = k;
            break;
        }
    }
    if (mass_out) *mass_out = mass;
    return hit;
}

}  // namespace

double survival_exact(const EnvView& env, std::int64_t N, std::int64_t M,
                      std::int64_t n) {
    double mass = 1.0;
    survival_iterate(env, N, M, n, -1.0, &mass);  // threshold < 0: never stops
    return mass;
}

std::int64_t survival_threshold_step(const EnvView& env, std::int64_t N,
                                     std::int64_t M, std::int64_t n,
                                     double threshold) {
    return survival_iterate(env, N, M, n, threshold, nullptr);
}

}  // namespace rwre
