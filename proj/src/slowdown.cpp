#include "rwre/slowdown.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwre/exit.hpp"
#include "rwre/parallel.hpp"
#include "rwre/walk.hpp"

namespace rwre {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

RegimeReport default_classify(const EnvironmentSpec& spec, std::uint64_t seed,
                              int workers) {
    const std::int64_t n_exact = 12;
    if (enumeration_feasible(spec, n_exact))
        return classify_spec(spec, n_exact, 0, seed, workers, true);
    return classify_spec(spec, 2000, 64, derive(seed, 0x5f), workers, false);
}

bool zero_speed(Regime r) {
    return r == Regime::TransientRightZeroSpeed || r == Regime::TransientLeftZeroSpeed;
}

double binomial_se(double p, std::int64_t m) {
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(m));
}

// type-7 interpolated quantile of sorted data
double quantile_sorted(const std::vector<std::int64_t>& sorted, double p) {
    const auto m = sorted.size();
    const double pos = p * static_cast<double>(m - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= m) return static_cast<double>(sorted[m - 1]);
    return static_cast<double>(sorted[lo]) +
           frac * static_cast<double>(sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<std::int64_t> default_n_grid() {
    std::vector<std::int64_t> grid;
    for (int e = 10; e <= 16; ++e) grid.push_back(std::int64_t{1} << e);
    return grid;
}

TrapScanReport trap_frequency_scan(const EnvironmentSpec& spec,
                                   const std::vector<std::int64_t>& n_grid,
                                   const TrapScanOptions& opts, std::uint64_t seed,
                                   int workers) {
    require_structure(spec);
    if (n_grid.empty()) throw InvalidInput("trap scan: empty n grid");
    if (opts.env_samples < 100) throw InvalidInput("trap scan: env_samples >= 100");

    TrapScanReport rep;
    rep.regime = "forced";
    rep.threshold = std::exp(-2.0);
    rep.k_auto = !opts.K.has_value();
    double gamma_val = kNan;
    if (!opts.force || rep.k_auto) {
        const RegimeReport cls = default_classify(spec, seed, workers);
        rep.regime = regime_name(cls.regime);
        gamma_val = cls.gamma.value;
        if (!opts.force && !zero_speed(cls.regime))
            throw RegimeMismatch(std::string("trap scan: spec classified ") +
                                 regime_name(cls.regime) +
                                 "; needs a zero-speed transient regime");
    }
    // window arms of ceil(K log n) sites; the default K = ceil(2/|gamma|) matches
    // the depth needed for order-n holding times
    rep.k_used = opts.K.value_or(
        gamma_val == 0.0 ? kNan : std::ceil(2.0 / std::abs(gamma_val)));
    if (!(rep.k_used > 0.0))
        throw InvalidInput("trap scan: window coefficient K must be positive");

    const std::uint64_t scan_stream = derive(seed, kStreamScan);
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::int64_t n = n_grid[gi];
        if (n < 2) throw InvalidInput("trap scan: n values must be >= 2");
        const auto W = static_cast<std::int64_t>(
            std::ceil(rep.k_used * std::log(static_cast<double>(n))));
        const std::uint64_t n_stream = derive(scan_stream, gi);
        std::vector<std::uint8_t> trapped(static_cast<std::size_t>(opts.env_samples), 0);
        run_indexed(opts.env_samples, workers, [&](std::int64_t r) {
            const EnvironmentWindow env(
                spec, -W, W, derive(n_stream, static_cast<std::uint64_t>(r)));
            // mass is nonincreasing: surviving to horizon n above e^{-2}
            // is equivalent to never dropping below it
            const std::int64_t hit =
                survival_threshold_step(EnvView(env), W, W, n, rep.threshold);
            trapped[static_cast<std::size_t>(r)] = hit > n ? 1 : 0;
        });
        TrapScanRow row;
        row.n = n;
        row.window = W;
        row.samples = opts.env_samples;
        for (auto t : trapped) row.successes += t;
        row.q_hat = static_cast<double>(row.successes) /
                    static_cast<double>(row.samples);
        row.std_error = binomial_se(row.q_hat, row.samples);
        rep.rows.push_back(row);
    }

    bool all_zero = true;
    for (const auto& row : rep.rows) all_zero &= row.successes == 0;
    if (all_zero)
        throw AllZero("trap scan: no trapping environment at any n; K = " +
                      std::to_string(rep.k_used) + " may be too small");

    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].q_hat > rep.rows[i - 1].q_hat) {
            rep.flags.push_back("q_hat not monotone nonincreasing across n");
            break;
        }

    // least-squares slope of log q vs log n over rows with enough successes
    // for the binomial noise not to wreck the fit
    std::vector<double> xs, ys;
    for (const auto& row : rep.rows)
        if (row.successes >= opts.min_fit_successes) {
            xs.push_back(std::log(static_cast<double>(row.n)));
            ys.push_back(std::log(row.q_hat));
        }
    if (xs.size() >= 2) {
        const auto m = static_cast<double>(xs.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= m;
        my /= m;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        rep.slope = sxy / sxx;
        rep.slope_valid = true;
        if (xs.size() >= 3) {
            double ss = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double resid = ys[i] - my - rep.slope * (xs[i] - mx);
                ss += resid * resid;
            }
            rep.slope_std_error = std::sqrt(ss / (m - 2.0) / sxx);
        }
    } else {
        rep.slope = kNan;
        rep.flags.push_back("fewer than 2 points with >= " +
                            std::to_string(opts.min_fit_successes) +
                            " successes; slope not fitted");
    }

    rep.s_reference = opts.s_reference;
    if (opts.s_reference && rep.slope_valid) {
        const double s = *opts.s_reference;
        rep.slope_in_band = rep.slope >= -1.5 * s && rep.slope <= -0.5 * s;
        if (!rep.slope_in_band)
            rep.flags.push_back("slope outside [-1.5 s, -0.5 s] band");
    }
    return rep;
}

SlowdownReport slowdown_curve(const EnvironmentSpec& spec,
                              const std::vector<double>& s_prime_grid,
                              const std::vector<std::int64_t>& n_grid,
                              std::int64_t walkers, const SlowdownOptions& opts,
                              std::uint64_t seed, int workers) {
    require_structure(spec);
    if (walkers < 2) throw InvalidInput("slowdown curve: walkers >= 2");
    if (s_prime_grid.empty() || n_grid.empty())
        throw InvalidInput("slowdown curve: empty grid");

    SlowdownReport rep;
    rep.regime = "forced";
    rep.walkers = walkers;
    rep.s = kNan;
    std::optional<RegimeReport> cls;
    try {
        cls = default_classify(spec, seed, workers);
    } catch (const Error&) {
        if (!opts.force) throw;
    }
    if (cls) {
        rep.regime = regime_name(cls->regime);
        rep.mirrored = cls->regime == Regime::TransientLeftZeroSpeed;
        if (!opts.force && !zero_speed(cls->regime))
            throw RegimeMismatch(std::string("slowdown curve: spec classified ") +
                                 rep.regime + "; needs a zero-speed transient regime");
    }
    if (opts.s_reference) {
        rep.s = *opts.s_reference;
    } else if (cls && enumeration_feasible(spec, 12)) {
        try {
            rep.s = find_root_s(make_exact_evaluator(spec, 12),
                                rep.mirrored ? RootSide::Negative : RootSide::Positive,
                                cls->gamma);
        } catch (const RegimeMismatch&) {
            // leave NaN; the curve is still informative
        }
    }

    const std::uint64_t boot_stream = derive(seed, kStreamBootstrap);
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::int64_t n = n_grid[gi];
        std::vector<std::int64_t> finals = batch_final_positions(
            spec, n, walkers, derive(seed, gi), BatchMode::Annealed, workers);
        if (rep.mirrored)
            for (auto& x : finals) x = -x;
        std::sort(finals.begin(), finals.end());
        const double med = quantile_sorted(finals, 0.5);
        const double q75 = quantile_sorted(finals, 0.75);

        // bootstrap se of the raw median; the n^{-s'} scaling is common to
        // every resample
        SplitMix64 rng(derive(boot_stream, gi));
        std::vector<double> meds;
        meds.reserve(static_cast<std::size_t>(opts.bootstrap));
        std::vector<std::int64_t> resample(finals.size());
        for (std::int64_t b = 0; b < opts.bootstrap; ++b) {
            for (auto& v : resample) {
                const auto idx = static_cast<std::size_t>(
                    rng.next_unit() * static_cast<double>(finals.size()));
                v = finals[std::min(idx, finals.size() - 1)];
            }
            std::sort(resample.begin(), resample.end());
            meds.push_back(quantile_sorted(resample, 0.5));
        }
        double mmean = 0.0;
        for (double v : meds) mmean += v;
        mmean /= static_cast<double>(meds.size());
        double mss = 0.0;
        for (double v : meds) mss += (v - mmean) * (v - mmean);
        const double med_se =
            meds.size() >= 2
                ? std::sqrt(mss / static_cast<double>(meds.size() - 1))
                : 0.0;

        for (double sp : s_prime_grid) {
            const double scale = std::pow(static_cast<double>(n), sp);
            rep.cells.push_back({n, sp, med / scale, q75 / scale, med_se / scale});
        }
    }
    return rep;
}

TailEstimate annealed_tail(const EnvironmentSpec& spec, std::int64_t n,
                           double s_prime, std::int64_t walkers, std::uint64_t seed,
                           int workers) {
    require_structure(spec);
    if (walkers < 1) throw InvalidInput("annealed_tail: walkers >= 1");
    const std::vector<std::int64_t> finals =
        batch_final_positions(spec, n, walkers, seed, BatchMode::Annealed, workers);
    TailEstimate est;
    est.n = n;
    est.s_prime = s_prime;
    est.threshold = std::pow(static_cast<double>(n), s_prime);
    std::int64_t hits = 0;
    for (auto x : finals)
        if (static_cast<double>(x) > est.threshold) ++hits;
    est.p_hat = static_cast<double>(hits) / static_cast<double>(walkers);
    est.std_error = binomial_se(est.p_hat, walkers);
    est.walkers = walkers;
    return est;
}

}  // namespace rwre
