#include "rwre/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>

#include "rwre/matrix.hpp"
#include "rwre/parallel.hpp"

namespace rwre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Streaming log-sum-exp; -inf terms contribute nothing.
struct StreamingLse {
    long double max_term = -std::numeric_limits<long double>::infinity();
    long double sum = 0.0L;
    bool any = false;

    void add(long double lt) {
        if (std::isinf(static_cast<double>(lt)) && lt < 0.0L) return;
        if (!any) {
            max_term = lt;
            sum = 1.0L;
            any = true;
        } else if (lt > max_term) {
            sum = sum * expl(max_term - lt) + 1.0L;
            max_term = lt;
        } else {
            sum += expl(lt - max_term);
        }
    }

    long double log_total() const {
        if (!any) return -std::numeric_limits<long double>::infinity();
        return max_term + logl(sum);
    }
};

// Depth-first enumeration of all atom sequences of length n with prefix
// products reused across siblings; leaf(log_weight, log_delta).
template <class Leaf>
void enumerate_sequences(const EnvironmentSpec& spec, std::int64_t n, Leaf&& leaf) {
    const auto K = spec.atoms.size();
    std::vector<CompanionMatrix> ms;
    std::vector<double> log_w;
    ms.reserve(K);
    log_w.reserve(K);
    for (const Atom& atom : spec.atoms) {
        ms.push_back(build_matrix(atom.law));
        log_w.push_back(std::log(atom.weight));
    }

    const auto depth = static_cast<std::size_t>(n);
    std::vector<std::size_t> digit(depth, 0);
    std::vector<ProductAccumulator> acc;
    std::vector<double> lw(depth + 1, 0.0);
    acc.reserve(depth + 1);
    acc.emplace_back(spec.L);
    for (std::size_t d = 0; d < depth; ++d) {
        acc.push_back(acc.back());
        acc.back().apply(ms[0]);
        lw[d + 1] = lw[d] + log_w[0];
    }

    for (;;) {
        leaf(lw[depth], acc[depth].log_first());
        // odometer increment, recomputing only the changed suffix
        std::size_t d = depth;
        while (d > 0 && digit[d - 1] == K - 1) {
            digit[d - 1] = 0;
            --d;
        }
        if (d == 0) break;
        ++digit[d - 1];
        for (std::size_t e = d - 1; e < depth; ++e) {
            acc[e + 1] = acc[e];
            acc[e + 1].apply(ms[digit[e]]);
            lw[e + 1] = lw[e] + log_w[digit[e]];
        }
    }
}

void check_enumeration_size(const EnvironmentSpec& spec, std::int64_t n) {
    if (n < 1) throw InvalidInput("enumeration: n must be >= 1");
    if (!enumeration_feasible(spec, n))
        throw TooLarge("enumeration of " + std::to_string(spec.atoms.size()) + "^" +
                       std::to_string(n) + " atom sequences exceeds the 1e7 bound");
}

double z_score(double value, double se) {
    if (se > 0.0) return value / se;
    if (value == 0.0) return 0.0;
    return value > 0.0 ? kInf : -kInf;
}

}  // namespace

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::TransientRightPositiveSpeed: return "TransientRightPositiveSpeed";
        case Regime::TransientRightZeroSpeed: return "TransientRightZeroSpeed";
        case Regime::TransientLeftNegativeSpeed: return "TransientLeftNegativeSpeed";
        case Regime::TransientLeftZeroSpeed: return "TransientLeftZeroSpeed";
        case Regime::Recurrent: return "Recurrent";
    }
    return "?";
}

const MomentPoint* MomentCurve::find_u(double u) const {
    for (const auto& pt : points)
        if (pt.u == u) return &pt;
    return nullptr;
}

std::vector<double> replica_log_deltas(const EnvironmentSpec& spec, std::int64_t n,
                                       std::int64_t replicas, std::uint64_t seed,
                                       int workers) {
    require_valid(spec);
    if (n < spec.L) throw InvalidInput("product length n must be >= L");
    if (replicas < 1) throw InvalidInput("replicas must be >= 1");
    const std::uint64_t stream = derive(seed, kStreamReplica);
    std::vector<double> out(static_cast<std::size_t>(replicas));
    run_indexed(replicas, workers, [&](std::int64_t r) {
        EnvironmentWindow env(spec, 0, n - 1, derive(stream, static_cast<std::uint64_t>(r)));
        out[static_cast<std::size_t>(r)] = log_delta(EnvView(env), n - 1, 0);
    });
    return out;
}

LyapunovEstimate estimate_gamma(const EnvironmentSpec& spec, std::int64_t n,
                                std::int64_t replicas, std::uint64_t seed,
                                int workers) {
    const auto d = replica_log_deltas(spec, n, replicas, seed, workers);
    long double sum = 0.0L;
    for (double v : d) sum += static_cast<long double>(v);
    const double mean = static_cast<double>(sum / static_cast<long double>(d.size())) /
                        static_cast<double>(n);
    double se = 0.0;
    if (d.size() >= 2) {
        long double ss = 0.0L;
        for (double v : d) {
            const long double dev =
                static_cast<long double>(v / static_cast<double>(n)) - mean;
            ss += dev * dev;
        }
        se = std::sqrt(static_cast<double>(ss) / static_cast<double>(d.size() - 1) /
                       static_cast<double>(d.size()));
    }
    return {mean, se, n, replicas, "monte-carlo"};
}

MomentPoint moment_point_from_sample(const std::vector<double>& log_deltas, double u,
                                     std::int64_t n) {
    MomentPoint pt;
    pt.u = u;
    if (u == 0.0) return pt;  // F(0) = 0 exactly, by definition
    const auto R = log_deltas.size();
    long double max_m = -std::numeric_limits<long double>::infinity();
    for (double d : log_deltas)
        max_m = std::max(max_m, static_cast<long double>(u) * d);
    long double sum_w = 0.0L;
    long double max_w = 0.0L;
    std::vector<long double> w(R);
    for (std::size_t r = 0; r < R; ++r) {
        w[r] = expl(static_cast<long double>(u) * log_deltas[r] - max_m);
        sum_w += w[r];
        max_w = std::max(max_w, w[r]);
    }
    const long double mean_w = sum_w / static_cast<long double>(R);
    pt.f_hat = static_cast<double>((max_m + logl(mean_w)) / static_cast<long double>(n));
    if (R >= 2) {
        long double ss = 0.0L;
        for (std::size_t r = 0; r < R; ++r) {
            const long double dev = w[r] - mean_w;
            ss += dev * dev;
        }
        const long double sd = sqrtl(ss / static_cast<long double>(R - 1));
        // delta method on log of the sample mean
        pt.std_error = static_cast<double>(
            sd / (sqrtl(static_cast<long double>(R)) * mean_w)) /
            static_cast<double>(n);
    }
    pt.heavy_tail = static_cast<double>(max_w / sum_w) > 0.99;
    return pt;
}

MomentCurve estimate_F(const EnvironmentSpec& spec, const std::vector<double>& u_grid,
                       std::int64_t n, std::int64_t replicas, std::uint64_t seed,
                       int workers) {
    if (replicas < 2) throw InvalidInput("estimate_F: replicas must be >= 2");
    for (std::size_t i = 1; i < u_grid.size(); ++i)
        if (u_grid[i] <= u_grid[i - 1])
            throw InvalidInput("estimate_F: u grid must be strictly increasing");
    const auto d = replica_log_deltas(spec, n, replicas, seed, workers);
    MomentCurve curve;
    curve.n = n;
    curve.replicas = replicas;
    curve.method = "monte-carlo";
    curve.points.reserve(u_grid.size());
    for (double u : u_grid) curve.points.push_back(moment_point_from_sample(d, u, n));
    return curve;
}

bool enumeration_feasible(const EnvironmentSpec& spec, std::int64_t n, double budget) {
    if (n < 1) return false;
    const double K = static_cast<double>(spec.atoms.size());
    return static_cast<double>(n) * std::log(K) <= std::log(budget) + 1e-9;
}

double exact_F_enumeration(const EnvironmentSpec& spec, double u, std::int64_t n) {
    require_valid(spec);
    check_enumeration_size(spec, n);
    StreamingLse lse;
    enumerate_sequences(spec, n, [&](double log_w, double log_d) {
        lse.add(static_cast<long double>(log_w) + static_cast<long double>(u) * log_d);
    });
    return static_cast<double>(lse.log_total()) / static_cast<double>(n);
}

double exact_gamma_enumeration(const EnvironmentSpec& spec, std::int64_t n) {
    require_valid(spec);
    check_enumeration_size(spec, n);
    long double sum = 0.0L;
    enumerate_sequences(spec, n, [&](double log_w, double log_d) {
        sum += expl(static_cast<long double>(log_w)) * log_d;
    });
    return static_cast<double>(sum) / static_cast<double>(n);
}

MomentCurve exact_F_curve(const EnvironmentSpec& spec, const std::vector<double>& u_grid,
                          std::int64_t n) {
    require_valid(spec);
    check_enumeration_size(spec, n);
    std::vector<StreamingLse> lse(u_grid.size());
    enumerate_sequences(spec, n, [&](double log_w, double log_d) {
        for (std::size_t i = 0; i < u_grid.size(); ++i)
            lse[i].add(static_cast<long double>(log_w) +
                       static_cast<long double>(u_grid[i]) * log_d);
    });
    MomentCurve curve;
    curve.n = n;
    curve.replicas = 0;
    curve.method = "exact-enumeration";
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        MomentPoint pt;
        pt.u = u_grid[i];
        pt.f_hat = u_grid[i] == 0.0 ? 0.0
                                    : static_cast<double>(lse[i].log_total()) /
                                          static_cast<double>(n);
        curve.points.push_back(pt);
    }
    return curve;
}

std::vector<double> convex_minorant(const std::vector<double>& u,
                                    const std::vector<double>& f) {
    const std::size_t n = u.size();
    if (n != f.size() || n < 2) throw InvalidInput("convex_minorant: bad grid");
    // lower convex hull, then interpolate back onto the grid
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < n; ++i) {
        while (hull.size() >= 2) {
            const std::size_t o = hull[hull.size() - 2];
            const std::size_t a = hull[hull.size() - 1];
            // pop a when slope(o,a) >= slope(a,i)
            if ((f[a] - f[o]) * (u[i] - u[a]) >= (f[i] - f[a]) * (u[a] - u[o]))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    std::vector<double> out(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg + 1 < hull.size() && hull[seg + 1] <= i) ++seg;
        const std::size_t a = hull[seg];
        if (a == i) {  // hull vertices pass through exactly
            out[i] = f[i];
            continue;
        }
        const std::size_t b = hull[seg + 1];
        const double t = (u[i] - u[a]) / (u[b] - u[a]);
        out[i] = f[a] + t * (f[b] - f[a]);
    }
    return out;
}

RateFunction legendre_rate(const MomentCurve& curve, const std::vector<double>& x_grid) {
    const std::size_t n = curve.points.size();
    if (n < 5) throw InvalidInput("legendre_rate: need >= 5 grid points");
    bool has_zero = false;
    for (const auto& pt : curve.points) has_zero |= pt.u == 0.0;
    if (!has_zero || curve.points.front().u >= 0.0 || curve.points.back().u <= 0.0)
        throw InvalidInput("legendre_rate: u grid must contain 0 in its interior");

    std::vector<double> us(n), fs(n);
    for (std::size_t i = 0; i < n; ++i) {
        us[i] = curve.points[i].u;
        fs[i] = curve.points[i].f_hat;
    }
    const std::vector<double> repaired = convex_minorant(us, fs);

    RateFunction rf;
    rf.repaired = curve;
    for (std::size_t i = 0; i < n; ++i) rf.repaired.points[i].f_hat = repaired[i];

    for (double x : x_grid) {
        std::size_t best = 0;
        double best_t = -kInf;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = us[i] * x - repaired[i];
            if (t > best_t || (t == best_t && std::abs(us[i]) < std::abs(us[best]))) {
                best_t = t;
                best = i;
            }
        }
        if (best == 0 || best == n - 1)
            throw GridTooNarrow("legendre_rate: sup for x = " + std::to_string(x) +
                                " attained at grid boundary u = " +
                                std::to_string(us[best]));
        rf.points.push_back({x, best_t, us[best]});
    }
    return rf;
}

FEvaluator make_exact_evaluator(const EnvironmentSpec& spec, std::int64_t n) {
    check_enumeration_size(spec, n);
    // Cache the per-sequence (log weight, log delta) pairs when they fit;
    // each probe is then a single log-sum-exp sweep.
    auto cache = std::make_shared<std::vector<std::pair<double, double>>>();
    const bool cacheable = enumeration_feasible(spec, n, 4e6);
    EnvironmentSpec spec_copy = spec;
    FEvaluator ev;
    ev.exact = true;
    ev.eval = [spec_copy, n, cache, cacheable](double u, std::int64_t) -> FEval {
        if (cacheable) {
            if (cache->empty())
                enumerate_sequences(spec_copy, n, [&](double lw, double ld) {
                    cache->emplace_back(lw, ld);
                });
            StreamingLse lse;
            for (const auto& [lw, ld] : *cache)
                lse.add(static_cast<long double>(lw) + static_cast<long double>(u) * ld);
            return {static_cast<double>(lse.log_total()) / static_cast<double>(n), 0.0};
        }
        return {exact_F_enumeration(spec_copy, u, n), 0.0};
    };
    return ev;
}

FEvaluator make_mc_evaluator(const EnvironmentSpec& spec, std::int64_t n,
                             std::uint64_t seed, int workers) {
    struct State {
        EnvironmentSpec spec;
        std::int64_t n;
        std::uint64_t stream;
        int workers;
        std::vector<double> cache;
    };
    auto st = std::make_shared<State>(
        State{spec, n, derive(seed, kStreamReplica), workers, {}});
    FEvaluator ev;
    ev.exact = false;
    ev.eval = [st](double u, std::int64_t replicas) -> FEval {
        const auto have = static_cast<std::int64_t>(st->cache.size());
        if (replicas > have) {
            st->cache.resize(static_cast<std::size_t>(replicas));
            run_indexed(replicas - have, st->workers, [&](std::int64_t i) {
                const std::int64_t r = have + i;
                EnvironmentWindow env(st->spec, 0, st->n - 1,
                                      derive(st->stream, static_cast<std::uint64_t>(r)));
                st->cache[static_cast<std::size_t>(r)] =
                    log_delta(EnvView(env), st->n - 1, 0);
            });
        }
        std::vector<double> sample(st->cache.begin(),
                                   st->cache.begin() + replicas);
        const MomentPoint pt = moment_point_from_sample(sample, u, st->n);
        return {pt.f_hat, pt.std_error};
    };
    return ev;
}

namespace {

// Sign of F(u) resolved at 3 standard errors, escalating the sample x4.
int resolved_sign(const FEvaluator& eval, double u, const RootOptions& opts,
                  std::int64_t& max_replicas_used) {
    if (eval.exact) {
        const FEval fe = eval.eval(u, 0);
        if (fe.value == 0.0) return 0;
        return fe.value > 0.0 ? 1 : -1;
    }
    std::int64_t replicas = std::max<std::int64_t>(2, opts.base_replicas);
    for (;;) {
        if (replicas > opts.replica_budget)
            throw Unresolved("sign of F(" + std::to_string(u) +
                             ") unresolved within replica budget " +
                             std::to_string(opts.replica_budget));
        const FEval fe = eval.eval(u, replicas);
        max_replicas_used = std::max(max_replicas_used, replicas);
        if (std::abs(fe.value) >= 3.0 * fe.std_error && fe.std_error > 0.0)
            return fe.value > 0.0 ? 1 : -1;
        replicas *= 4;
    }
}

}  // namespace

double find_root_s(const FEvaluator& eval, RootSide side,
                   const LyapunovEstimate& gamma, const RootOptions& opts) {
    std::int64_t used = 0;
    const double zg = z_score(gamma.value, gamma.std_error);
    if (side == RootSide::Positive) {
        if (!(gamma.value < 0.0) || std::abs(zg) < 3.0)
            throw NoSlowdownRoot("find_root_s: need gamma < 0 resolved at 3 se (got " +
                                 std::to_string(gamma.value) + ")");
        if (resolved_sign(eval, 1.0, opts, used) <= 0)
            throw NoSlowdownRoot("find_root_s: F(1) <= 0, walk has positive speed");
    } else {
        if (!(gamma.value > 0.0) || std::abs(zg) < 3.0)
            throw NoSlowdownRoot("find_root_s: need gamma > 0 resolved at 3 se (got " +
                                 std::to_string(gamma.value) + ")");
        if (resolved_sign(eval, -1.0, opts, used) <= 0)
            throw NoSlowdownRoot("find_root_s: F(-1) <= 0, walk has negative speed");
    }

    // F < 0 on the gamma side of 0, > 0 at the far end of the bracket.
    double lo = side == RootSide::Positive ? 0.0 : -1.0;
    double hi = side == RootSide::Positive ? 1.0 : 0.0;
    const int sign_lo = side == RootSide::Positive ? -1 : 1;
    if (opts.bracket) {
        const double blo = std::max(lo, opts.bracket->first);
        const double bhi = std::min(hi, opts.bracket->second);
        if (blo < bhi) {
            bool ok = true;
            if (blo != lo) {
                const int s = resolved_sign(eval, blo, opts, used);
                if (s == 0) return blo;
                ok &= s == sign_lo;
            }
            if (ok && bhi != hi) {
                const int s = resolved_sign(eval, bhi, opts, used);
                if (s == 0) return bhi;
                ok &= s == -sign_lo;
            }
            if (ok) {
                lo = blo;
                hi = bhi;
            }
        }
    }
    while (hi - lo > opts.tol) {
        const double mid = 0.5 * (lo + hi);
        const int s = resolved_sign(eval, mid, opts, used);
        if (s == 0) return mid;
        if (s == sign_lo)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

RegimeReport classify_regime(const LyapunovEstimate& gamma, const FEval& f1,
                             const FEval& fm1) {
    RegimeReport rep;
    rep.gamma = gamma;
    rep.f1 = f1;
    rep.fm1 = fm1;
    rep.z_gamma = z_score(gamma.value, gamma.std_error);
    if (std::abs(rep.z_gamma) < 3.0) {
        rep.regime = Regime::Recurrent;
        rep.z_decisive = rep.z_gamma;
        return rep;
    }
    if (gamma.value < 0.0) {
        rep.z_decisive = z_score(f1.value, f1.std_error);
        rep.regime = f1.value < 0.0 ? Regime::TransientRightPositiveSpeed
                                    : Regime::TransientRightZeroSpeed;
        if (std::abs(rep.z_decisive) < 3.0)
            rep.inconclusive.push_back("F(1) sign resolved below 3 std errors");
    } else {
        rep.z_decisive = z_score(fm1.value, fm1.std_error);
        rep.regime = fm1.value < 0.0 ? Regime::TransientLeftNegativeSpeed
                                     : Regime::TransientLeftZeroSpeed;
        if (std::abs(rep.z_decisive) < 3.0)
            rep.inconclusive.push_back("F(-1) sign resolved below 3 std errors");
    }
    return rep;
}

RegimeReport classify_spec(const EnvironmentSpec& spec, std::int64_t n,
                           std::int64_t replicas, std::uint64_t seed, int workers,
                           bool prefer_exact) {
    require_valid(spec);
    if (prefer_exact && enumeration_feasible(spec, n)) {
        LyapunovEstimate gamma{exact_gamma_enumeration(spec, n), 0.0, n, 0,
                               "exact-enumeration"};
        const FEval f1{exact_F_enumeration(spec, 1.0, n), 0.0};
        const FEval fm1{exact_F_enumeration(spec, -1.0, n), 0.0};
        return classify_regime(gamma, f1, fm1);
    }
    const auto d = replica_log_deltas(spec, n, replicas, seed, workers);
    const LyapunovEstimate gamma = estimate_gamma(spec, n, replicas, seed, workers);
    const MomentPoint p1 = moment_point_from_sample(d, 1.0, n);
    const MomentPoint pm1 = moment_point_from_sample(d, -1.0, n);
    return classify_regime(gamma, {p1.f_hat, p1.std_error},
                           {pm1.f_hat, pm1.std_error});
}

std::vector<double> default_u_grid() {
    std::vector<double> grid;
    for (int i = -15; i <= 15; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

}  // namespace rwre
