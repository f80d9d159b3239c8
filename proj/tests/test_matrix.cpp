#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rwre/matrix.hpp"

using namespace rwre;

TEST_CASE("build_matrix top rows") {
    SiteLaw l2 = SiteLaw::from_map(2, {{-2, 0.1}, {-1, 0.2}, {0, 0.2}, {1, 0.5}});
    auto m2 = build_matrix(l2);
    REQUIRE(m2.a.size() == 2);
    CHECK(m2.a[0] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(m2.a[1] == doctest::Approx(0.2).epsilon(1e-14));

    SiteLaw l1 = SiteLaw::from_map(1, {{-1, 0.25}, {0, 0.25}, {1, 0.5}});
    CHECK(build_matrix(l1).a[0] == doctest::Approx(0.5).epsilon(1e-14));

    SiteLaw sym = SiteLaw::from_map(1, {{-1, 0.5}, {0, 0.0}, {1, 0.5}});
    CHECK(build_matrix(sym).a[0] == doctest::Approx(1.0).epsilon(1e-14));

    // tail sums are nested: a_1 >= a_2 >= ... >= a_L
    auto spec = oracles::random_spec(3, 99);
    for (const auto& atom : spec.atoms) {
        auto m = build_matrix(atom.law);
        for (std::size_t i = 1; i < m.a.size(); ++i) CHECK(m.a[i - 1] >= m.a[i]);
    }

    CHECK_THROWS_AS(build_matrix(SiteLaw::from_map(1, {{-1, 0.5}, {1, 0.0}, {0, 0.5}})),
                    InvalidInput);
}

TEST_CASE("log_delta basics") {
    auto env = sample_environment(oracles::golden_spec(), -10, 10, 5);
    EnvView view(env);
    CHECK(log_delta(view, 0, 1) == 0.0);   // delta(l-1, l) = 1
    CHECK(log_delta(view, -4, -3) == 0.0);

    auto half = sample_environment(oracles::scalar_spec({0.5}), 0, 10, 1);
    CHECK(log_delta(EnvView(half), 3, 1) ==
          doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("log_delta against dense matrix powers (L=2 point mass)") {
    auto spec = oracles::point_mass_L2_spec();
    auto env = sample_environment(spec, 0, 25, 3);
    EnvView view(env);
    const std::vector<std::vector<long double>> tops = {{0.6L, 0.2L}};
    for (std::int64_t k = 1; k <= 20; ++k) {
        std::vector<std::size_t> sites(static_cast<std::size_t>(k), 0);
        const long double exact = oracles::dense_delta(tops, sites);
        CHECK(log_delta(view, k, 1) ==
              doctest::Approx(static_cast<double>(logl(exact))).epsilon(1e-12));
    }
}

TEST_CASE("scalar reduction: delta is a plain product of rhos for L=1") {
    auto spec = oracles::golden_spec();
    auto env = sample_environment(spec, -30, 30, 11);
    EnvView view(env);
    long double acc = 0.0L;
    for (std::int64_t k = -20; k <= 20; ++k) {
        const SiteLaw& law = env.law_at(k);
        acc += logl(static_cast<long double>(law.prob(-1)) / law.prob(1));
        CHECK(log_delta(view, k, -20) ==
              doctest::Approx(static_cast<double>(acc)).epsilon(1e-13));
    }
}

TEST_CASE("renormalized product matches extended-precision evaluation") {
    auto spec = oracles::random_spec(3, 1234);
    auto env = sample_environment(spec, 0, 60, 77);
    std::vector<std::vector<long double>> tops;
    for (const auto& atom : spec.atoms) {
        auto m = build_matrix(atom.law);
        tops.emplace_back(m.a.begin(), m.a.end());
    }
    for (std::int64_t len : {1, 5, 17, 50}) {
        std::vector<std::size_t> sites;
        for (std::int64_t x = 0; x < len; ++x) sites.push_back(env.atom_at(x));
        const long double exact = oracles::dense_delta(tops, sites);
        const double got = log_delta(EnvView(env), len - 1, 0);
        CHECK(got == doctest::Approx(static_cast<double>(logl(exact))).epsilon(1e-10));
    }
}

TEST_CASE("long products stay finite and positive") {
    auto env = sample_environment(oracles::golden_spec(), 0, 5000, 21);
    const double ld = log_delta(EnvView(env), 5000, 0);
    CHECK(std::isfinite(ld));  // raw product would underflow ~e^{-1700}

    // all entries strictly positive after >= L factors
    auto spec3 = oracles::random_spec(3, 4321);
    auto env3 = sample_environment(spec3, 0, 10, 2);
    std::vector<CompanionMatrix> ms;
    for (const auto& atom : spec3.atoms) ms.push_back(build_matrix(atom.law));
    ProductAccumulator acc(3);
    for (std::int64_t x = 0; x <= 10; ++x) {
        acc.apply(ms[env3.atom_at(x)]);
        if (acc.count() >= 3)
            for (double v : acc.vec()) CHECK(v > 0.0);
    }
}

TEST_CASE("supermultiplicativity of the (1,1) entry") {
    auto spec = oracles::random_spec(3, 5150);
    auto env = sample_environment(spec, -40, 40, 6);
    EnvView view(env);
    for (std::int64_t m : {-10, 0, 7, 22}) {
        const double whole = log_delta(view, 30, -20);
        const double split =
            log_delta(view, 30, m + 1) + log_delta(view, m, -20);
        CHECK(whole >= split - 1e-9);
    }
}

TEST_CASE("log_delta_sum") {
    auto env1 = sample_environment(oracles::scalar_spec({1.0}, 0.4), -5, 60, 1);
    EnvView ones(env1);
    // single unit term
    CHECK(log_delta_sum(ones, 4, 4, 5) == doctest::Approx(0.0));
    // all deltas equal 1: sum over [0, M] is M + 1
    CHECK(log_delta_sum(ones, 0, 50, 1) ==
          doctest::Approx(std::log(51.0)).epsilon(1e-13));

    // geometric series: rho = 2 everywhere, sum_{j=1}^{M} 2^j = 2^{M+1} - 2
    auto env2 = sample_environment(oracles::scalar_spec({2.0}), -5, 60, 1);
    EnvView twos(env2);
    for (std::int64_t M : {3, 10, 40}) {
        const double expect = std::log(std::pow(2.0, static_cast<double>(M + 1)) - 2.0);
        CHECK(log_delta_sum(twos, 1, M, 1) == doctest::Approx(expect).epsilon(1e-12));
    }

    CHECK_THROWS_AS(log_delta_sum(ones, 3, 10, 5), InvalidInput);  // base > j_lo + 1
}
