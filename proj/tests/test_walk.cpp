#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rwre/exit.hpp"
#include "rwre/walk.hpp"

using namespace rwre;

namespace {

EnvironmentSpec det_right_spec() {
    EnvironmentSpec spec;
    spec.L = 1;
    spec.kappa = 0.5;  // structural only; this law is deliberately not elliptic
    spec.atoms.push_back({SiteLaw::from_map(1, {{-1, 0.0}, {0, 0.0}, {1, 1.0}}), 1.0});
    return spec;
}

}  // namespace

TEST_CASE("step: deterministic drift and replay") {
    auto env = EnvironmentWindow::lazy(det_right_spec(), 4);
    EnvView view(env);
    SplitMix64 rng(123);
    for (std::int64_t x : {-5, 0, 3}) CHECK(step(view, x, rng) == x + 1);

    auto golden = EnvironmentWindow::lazy(oracles::golden_spec(), 8);
    EnvView gv(golden);
    SplitMix64 r1(77), r2(77);
    for (int i = 0; i < 200; ++i) CHECK(step(gv, i % 7, r1) == step(gv, i % 7, r2));
}

TEST_CASE("step: jump frequencies match the site law (chi-square, 99%)") {
    EnvironmentSpec spec;
    spec.L = 1;
    spec.kappa = 0.1;
    spec.atoms.push_back({SiteLaw::from_map(1, {{-1, 0.3}, {0, 0.2}, {1, 0.5}}), 1.0});
    auto env = EnvironmentWindow::lazy(spec, 1);
    EnvView view(env);
    SplitMix64 rng(2025);
    std::int64_t c[3] = {0, 0, 0};
    const std::int64_t m = 100000;
    for (std::int64_t i = 0; i < m; ++i) ++c[step(view, 0, rng) + 1];
    const double expect[3] = {0.3 * m, 0.2 * m, 0.5 * m};
    double chi2 = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double d = static_cast<double>(c[k]) - expect[k];
        chi2 += d * d / expect[k];
    }
    CHECK(chi2 < oracles::chi2_99(2));
}

TEST_CASE("run_until: interval exit and censoring") {
    auto env = EnvironmentWindow::lazy(det_right_spec(), 4);
    EnvView view(env);

    StopSpec interval;
    interval.interval = {{-5, 12}};
    interval.cap = 1000;
    auto traj = run_until(view, 0, interval, 9);
    CHECK(traj.reason == StopReason::ExitedInterval);
    CHECK(traj.steps == 13);  // T_U: first k with X_k outside [-5, M]
    CHECK(traj.final_position == 13);

    StopSpec left;
    left.left_level = 0;
    left.cap = 50;
    auto censored = run_until(view, 1, left, 9);
    CHECK(censored.reason == StopReason::Censored);
    CHECK(censored.steps == 50);
    CHECK(censored.final_position == 51);

    // start outside the interval: T_U = 0
    auto immediate = run_until(view, 40, interval, 9);
    CHECK(immediate.reason == StopReason::ExitedInterval);
    CHECK(immediate.steps == 0);

    StopSpec none;
    CHECK_THROWS_AS(run_until(view, 0, none, 9), InvalidInput);
}

TEST_CASE("run_until: gambler's ruin exit side frequency") {
    auto env = EnvironmentWindow::lazy(oracles::point_mass_rho1_spec(), 6);
    EnvView view(env);
    const std::int64_t M = 9;
    const std::int64_t runs = 100000;
    std::int64_t left_first = 0;
    for (std::int64_t r = 0; r < runs; ++r) {
        StopSpec stop;
        stop.left_level = 0;
        stop.right_level = M + 1;
        stop.cap = 1 << 20;
        auto traj = run_until(view, 1, stop, derive(31, static_cast<std::uint64_t>(r)));
        REQUIRE(traj.reason != StopReason::Censored);
        left_first += traj.reason == StopReason::LeftLevel ? 1 : 0;
    }
    const double p = static_cast<double>(M) / static_cast<double>(M + 1);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(runs));
    CHECK(std::abs(static_cast<double>(left_first) / static_cast<double>(runs) - p) <
          3.0 * se);
}

TEST_CASE("trajectory increments stay in {-L,...,1}") {
    auto spec = oracles::random_spec(3, 31337);
    auto env = EnvironmentWindow::lazy(spec, 5);
    StopSpec stop;
    stop.interval = {{-400, 400}};
    stop.cap = 1000;  // stride 1: every step recorded
    auto traj = run_until(EnvView(env), 0, stop, 17);
    REQUIRE(traj.recorded.size() >= 2);
    CHECK(traj.recorded.size() <= static_cast<std::size_t>(stop.cap) + 1);
    for (std::size_t i = 1; i < traj.recorded.size(); ++i) {
        const auto dz = traj.recorded[i].second - traj.recorded[i - 1].second;
        CHECK(dz >= -3);
        CHECK(dz <= 1);
    }
}

TEST_CASE("left stops may overshoot by at most L - 1; right stops are exact") {
    auto spec = oracles::random_spec(3, 4242);
    auto env = EnvironmentWindow::lazy(spec, 9);
    for (std::uint64_t r = 0; r < 200; ++r) {
        StopSpec stop;
        stop.left_level = -6;
        stop.right_level = 6;
        stop.cap = 1 << 16;
        auto traj = run_until(EnvView(env), 0, stop, derive(70, r));
        if (traj.reason == StopReason::LeftLevel) {
            CHECK(traj.final_position <= -6);
            CHECK(traj.final_position >= -6 - 2);  // overshoot < L
        } else if (traj.reason == StopReason::RightLevel) {
            CHECK(traj.final_position == 6);
        }
    }
}

TEST_CASE("exit-side frequency matches the closed formula (random env)") {
    auto spec = oracles::random_spec(2, 616);
    auto env = sample_environment(spec, -9, 8, 3);
    EnvView view(env);
    const std::int64_t a = -8, b = 8, k = 1;
    const double p = exit_prob_closed(view, k, a, b, ExitSide::Minus);
    const std::int64_t runs = 20000;
    std::int64_t left = 0;
    for (std::int64_t r = 0; r < runs; ++r) {
        StopSpec stop;
        stop.interval = {{a + 1, b - 1}};  // exit means X <= a or X >= b
        stop.cap = 1 << 20;
        auto traj = run_until(view, k, stop, derive(81, static_cast<std::uint64_t>(r)));
        REQUIRE(traj.reason == StopReason::ExitedInterval);
        left += traj.final_position <= a ? 1 : 0;
    }
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(runs));
    CHECK(std::abs(static_cast<double>(left) / static_cast<double>(runs) - p) <
          3.0 * se);
}

TEST_CASE("batch_final_positions: deterministic drift and annealed envs") {
    auto finals = batch_final_positions(det_right_spec(), 500, 16, 3, BatchMode::Annealed, 2);
    for (auto x : finals) CHECK(x == 500);

    // annealed walkers see different environments (multi-atom spec)
    const std::uint64_t env_stream = derive(12, kStreamEnv);
    auto e0 = EnvironmentWindow::lazy(oracles::golden_spec(), derive(env_stream, 0));
    auto e1 = EnvironmentWindow::lazy(oracles::golden_spec(), derive(env_stream, 1));
    bool differ = false;
    for (std::int64_t x = -100; x <= 100; ++x) differ |= e0.atom_at(x) != e1.atom_at(x);
    CHECK(differ);
}

TEST_CASE("batch mean speed matches a longer pilot run (positive speed spec)") {
    auto spec = oracles::positive_speed_spec();
    const std::int64_t n_pilot = 20000, w_pilot = 400;
    const std::int64_t n = 2000, w = 2000;
    auto pilot = batch_final_positions(spec, n_pilot, w_pilot, 913, BatchMode::Annealed, 2);
    auto test = batch_final_positions(spec, n, w, 914, BatchMode::Annealed, 2);
    auto speed = [](const std::vector<std::int64_t>& xs, std::int64_t steps) {
        double m = 0.0;
        for (auto x : xs) m += static_cast<double>(x);
        return m / static_cast<double>(xs.size()) / static_cast<double>(steps);
    };
    auto speed_se = [](const std::vector<std::int64_t>& xs, std::int64_t steps,
                       double mean_speed) {
        double ss = 0.0;
        for (auto x : xs) {
            const double v = static_cast<double>(x) / static_cast<double>(steps);
            ss += (v - mean_speed) * (v - mean_speed);
        }
        return std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                         static_cast<double>(xs.size()));
    };
    const double c_pilot = speed(pilot, n_pilot);
    const double c_test = speed(test, n);
    CHECK(c_pilot > 0.0);
    // Solomon speed for L=1: (1 - E rho) / (1 + E rho) = 7/11
    CHECK(c_pilot == doctest::Approx(7.0 / 11.0).epsilon(0.02));
    const double se = std::sqrt(std::pow(speed_se(test, n, c_test), 2) +
                                std::pow(speed_se(pilot, n_pilot, c_pilot), 2));
    CHECK(std::abs(c_test - c_pilot) < 3.0 * se + 3.0 / static_cast<double>(n));
}

TEST_CASE("quenched vs annealed agree for a point mass (KS, 99%)") {
    auto spec = oracles::scalar_spec({0.5});
    const std::int64_t n = 200, w = 3000;
    auto a = batch_final_positions(spec, n, w, 111, BatchMode::Annealed, 2);
    auto q = batch_final_positions(spec, n, w, 222, BatchMode::Quenched, 2);
    std::sort(a.begin(), a.end());
    std::sort(q.begin(), q.end());
    double d_max = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < q.size()) {
        std::int64_t v;
        if (i < a.size() && j < q.size())
            v = std::min(a[i], q[j]);
        else
            v = i < a.size() ? a[i] : q[j];
        while (i < a.size() && a[i] == v) ++i;
        while (j < q.size() && q[j] == v) ++j;
        d_max = std::max(d_max,
                         std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                  static_cast<double>(j) / static_cast<double>(q.size())));
    }
    CHECK(d_max < oracles::ks_99(a.size(), q.size()));
}

TEST_CASE("batch is identical across worker counts") {
    auto spec = oracles::golden_spec();
    auto serial = batch_final_positions(spec, 300, 64, 5, BatchMode::Annealed, 1);
    auto parallel = batch_final_positions(spec, 300, 64, 5, BatchMode::Annealed, 2);
    CHECK(serial == parallel);
}
