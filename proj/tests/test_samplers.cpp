#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlmc_saa/samplers.hpp"
#include "mlmc_saa/stats.hpp"

using namespace mlmc_saa;

namespace {
const GbmParams base_gbm{};  // X0=100, r=0.05, sigma=0.2, T=1, K=110, P0=10.7

std::vector<double> draw_normals(const SeedSpec& spec, int n) {
    RandomStream stream(spec);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (auto& x : z) x = stream.next_normal();
    return z;
}
}  // namespace

TEST_CASE("gbm_euler_terminal trivial and hand-computed cases") {
    GbmParams p = base_gbm;
    p.sigma = 0.0;
    p.r = 0.0;
    const std::vector<double> incs{0.3, -0.1, 0.2};
    CHECK(gbm_euler_terminal(p, 3, incs) == p.x0);

    p.r = 0.05;
    const std::vector<double> one{0.4};
    CHECK(gbm_euler_terminal(p, 1, one) == doctest::Approx(p.x0 * 1.05).epsilon(1e-15));

    // Four-step recursion recomputed independently step by step.
    const GbmParams q = base_gbm;
    const std::vector<double> same(4, 0.1);
    double x = q.x0;
    for (int i = 0; i < 4; ++i) x = x + q.r * x * 0.25 + q.sigma * x * 0.1;
    CHECK(gbm_euler_terminal(q, 4, same) == doctest::Approx(x).epsilon(1e-15));

    CHECK_THROWS_AS(gbm_euler_terminal(q, 0, std::vector<double>{}), std::domain_error);
}

TEST_CASE("gbm_milstein_terminal trivial and single-step algebra") {
    GbmParams p = base_gbm;
    p.sigma = 0.0;
    p.r = 0.0;
    const std::vector<double> incs{0.5, 0.5};
    CHECK(gbm_milstein_terminal(p, 2, incs) == p.x0);

    p.r = 0.07;  // sigma = 0 makes the schemes coincide for any r
    CHECK(gbm_milstein_terminal(p, 2, incs) == gbm_euler_terminal(p, 2, incs));

    const GbmParams q = base_gbm;
    const double w = 0.37;
    const std::vector<double> one{w};
    const double expected =
        q.x0 * (1.0 + (q.r - 0.5 * q.sigma * q.sigma) * q.T + q.sigma * w +
                0.5 * q.sigma * q.sigma * w * w);
    CHECK(gbm_milstein_terminal(q, 1, one) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("put_loss covers the payoff regions") {
    CHECK(put_loss(120.0, base_gbm) == doctest::Approx(-10.7 * std::exp(0.05)).epsilon(1e-15));
    CHECK(put_loss(110.0, base_gbm) == doctest::Approx(-std::exp(0.05) * 10.7).epsilon(1e-15));
    GbmParams p = base_gbm;
    p.P0 = 0.0;
    CHECK(put_loss(0.0, p) == 110.0);
}

TEST_CASE("gbm coupled pair: degenerate equality and level-0 shape") {
    GbmParams p = base_gbm;
    p.sigma = 0.0;
    p.r = 0.0;
    const BiasLadder ladder(1.0, 4, 2);
    RandomStream stream(SeedSpec{5, 0, 2, StreamRole::level_sampling});
    const CoupledDraw pair = gbm_coupled_pair(p, GbmScheme::euler, ladder, 2, stream);
    CHECK(pair.fine == pair.coarse);

    RandomStream stream0(SeedSpec{5, 0, 0, StreamRole::level_sampling});
    const CoupledDraw level0 = gbm_coupled_pair(base_gbm, GbmScheme::euler, ladder, 0, stream0);
    CHECK(std::isnan(level0.coarse));
    CHECK(std::isfinite(level0.fine));
}

TEST_CASE("gbm coupling identity: aggregated increments reproduce the coarse path bitwise") {
    const BiasLadder ladder(1.0, 4, 3);
    for (GbmScheme scheme : {GbmScheme::euler, GbmScheme::milstein}) {
        for (int ell : {1, 2, 3}) {
            const SeedSpec spec{1234, 9, static_cast<std::uint32_t>(ell),
                                StreamRole::level_sampling};
            RandomStream stream(spec);
            const CoupledDraw pair = gbm_coupled_pair(base_gbm, scheme, ladder, ell, stream);

            const int n_fine = static_cast<int>(std::llround(1.0 / level_bias(ladder, ell)));
            const double sqrt_dt = std::sqrt(base_gbm.T / n_fine);
            std::vector<double> fine_incs = draw_normals(spec, n_fine);
            for (auto& dw : fine_incs) dw *= sqrt_dt;

            std::vector<double> coarse_incs(static_cast<std::size_t>(n_fine / ladder.m), 0.0);
            for (int i = 0; i < n_fine; ++i) coarse_incs[static_cast<std::size_t>(i / ladder.m)] += fine_incs[static_cast<std::size_t>(i)];

            const auto terminal = scheme == GbmScheme::euler ? gbm_euler_terminal
                                                             : gbm_milstein_terminal;
            CHECK(pair.fine == put_loss(terminal(base_gbm, n_fine, fine_incs), base_gbm));
            CHECK(pair.coarse ==
                  put_loss(terminal(base_gbm, n_fine / ladder.m, coarse_incs), base_gbm));
        }
    }
}

TEST_CASE("gbm coupled pair: high correlation and strong-rate variance decay") {
    const BiasLadder ladder(1.0, 4, 3);
    const int n = 10000;

    RunningMoments fine_m, coarse_m;
    double cross = 0.0;
    std::vector<double> fines, coarses;
    RandomStream stream(SeedSpec{77, 0, 2, StreamRole::level_sampling});
    for (int k = 0; k < n; ++k) {
        const CoupledDraw pair = gbm_coupled_pair(base_gbm, GbmScheme::milstein, ladder, 2, stream);
        fines.push_back(pair.fine);
        coarses.push_back(pair.coarse);
        fine_m.add(pair.fine);
        coarse_m.add(pair.coarse);
    }
    for (int k = 0; k < n; ++k)
        cross += (fines[static_cast<std::size_t>(k)] - fine_m.mean) *
                 (coarses[static_cast<std::size_t>(k)] - coarse_m.mean);
    const double corr =
        cross / ((n - 1) * std::sqrt(fine_m.variance() * coarse_m.variance()));
    CHECK(corr > 0.9);

    // var(fine - coarse) should shrink by about m^beta = 16 per level (Milstein).
    std::vector<double> level_vars;
    for (int ell = 1; ell <= 3; ++ell) {
        RandomStream s(SeedSpec{78, 0, static_cast<std::uint32_t>(ell), StreamRole::level_sampling});
        RunningMoments diff;
        for (int k = 0; k < 20000; ++k) {
            const CoupledDraw pair = gbm_coupled_pair(base_gbm, GbmScheme::milstein, ladder, ell, s);
            diff.add(pair.fine - pair.coarse);
        }
        level_vars.push_back(diff.variance());
    }
    for (std::size_t i = 0; i + 1 < level_vars.size(); ++i) {
        const double ratio = level_vars[i] / level_vars[i + 1];
        CHECK(ratio > 6.0);
        CHECK(ratio < 45.0);
    }
}

TEST_CASE("phi quadratic form") {
    CHECK(phi(0.0, 0.0, 0.3) == 0.0);
    CHECK(phi(1.0, 0.0, 0.5) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(phi(1.0, 1.0, 0.5) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("nested_inner_estimate basics") {
    const std::vector<double> zeros(4, 0.0);
    CHECK(nested_inner_estimate(0.0, 4, zeros, 0.5) == -1.0);
    const std::vector<double> one{1.0};
    CHECK(nested_inner_estimate(0.0, 1, one, 0.5) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK_THROWS_AS(nested_inner_estimate(0.0, 0, std::vector<double>{}, 0.5),
                    std::domain_error);
}

TEST_CASE("nested_inner_estimate converges to tau*(y^2 - 1)") {
    const double y = 1.5, tau = 0.5;
    const int m_inner = 1000000;
    const auto draws = draw_normals(SeedSpec{31, 0, 0, StreamRole::pilot}, m_inner);
    const double estimate = nested_inner_estimate(y, m_inner, draws, tau);
    // sd of phi(1.5, Z) is sqrt(2.25 + 0.5) ~ 1.66; three standard errors.
    CHECK(tau * (y * y - 1.0) == 0.625);
    CHECK(std::abs(estimate - 0.625) < 3.0 * 1.66 / std::sqrt(static_cast<double>(m_inner)));
}

TEST_CASE("nested coupled pair: shared-draw reconstruction is exact") {
    const BiasLadder ladder(1.0 / 64.0, 2, 3);
    const double tau = 0.5, y = 0.8;
    for (int ell : {1, 2, 3}) {
        const SeedSpec spec{91, 4, static_cast<std::uint32_t>(ell), StreamRole::level_sampling};
        RandomStream stream(spec);
        const CoupledDraw pair = nested_coupled_pair(y, ladder, ell, stream, tau);

        const int m_fine = static_cast<int>(std::llround(1.0 / level_bias(ladder, ell)));
        const int m_coarse = static_cast<int>(std::llround(1.0 / level_bias(ladder, ell - 1)));
        const auto draws = draw_normals(spec, m_fine);

        double sum = 0.0;
        for (int j = 0; j < m_coarse; ++j) sum += phi(y, draws[static_cast<std::size_t>(j)], tau);
        CHECK(pair.coarse == -1.0 - sum / m_coarse);
        for (int j = m_coarse; j < m_fine; ++j) sum += phi(y, draws[static_cast<std::size_t>(j)], tau);
        CHECK(pair.fine == -1.0 - sum / m_fine);
    }

    RandomStream stream0(SeedSpec{91, 4, 0, StreamRole::level_sampling});
    CHECK(std::isnan(nested_coupled_pair(y, ladder, 0, stream0, tau).coarse));
}

TEST_CASE("nested coupled pair: variance of the difference scales like h_l") {
    const BiasLadder ladder(1.0 / 64.0, 2, 4);
    const NestedProblem problem{NestedParams{}};
    std::vector<double> ells, log_vars;
    for (int ell = 1; ell <= 4; ++ell) {
        RandomStream stream(SeedSpec{17, 0, static_cast<std::uint32_t>(ell), StreamRole::level_sampling});
        RunningMoments diff;
        for (int k = 0; k < 20000; ++k) {
            const CoupledDraw pair = problem.sample_pair(ladder, ell, stream);
            diff.add(pair.fine - pair.coarse);
        }
        ells.push_back(ell);
        log_vars.push_back(std::log(diff.variance()) / std::log(2.0));
    }
    const double slope = regression_slope(ells, log_vars);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.35));
}

TEST_CASE("cvar_reference_gbm matches the benchmark value and its degenerate limits") {
    const double value = cvar_reference_gbm(base_gbm, 0.95);
    CHECK(std::abs(value - 30.347) <= 0.01);
    // Frozen against an independent quadrature of the lognormal tail.
    CHECK(value == doctest::Approx(30.356927539864458).epsilon(1e-12));

    GbmParams tiny_k = base_gbm;
    tiny_k.P0 = 0.0;
    tiny_k.K = 1e-9;
    CHECK(std::abs(cvar_reference_gbm(tiny_k, 0.95)) < 1e-10);

    GbmParams det = base_gbm;
    det.sigma = 0.0;
    const double degenerate = std::max(110.0 - 100.0 * std::exp(0.05), 0.0) -
                              std::exp(0.05) * 10.7;
    CHECK(cvar_reference_gbm(det, 0.95) == doctest::Approx(degenerate).epsilon(1e-14));
    det.sigma = 1e-8;
    CHECK(cvar_reference_gbm(det, 0.95) == doctest::Approx(degenerate).epsilon(1e-6));

    CHECK_THROWS_AS(cvar_reference_gbm(base_gbm, 1.0), std::domain_error);
}

TEST_CASE("cvar_reference_nested closed form") {
    const double value = cvar_reference_nested(0.5, 0.975);
    // Frozen against an independent evaluation of the stated closed form.
    CHECK(value == doctest::Approx(2.901128255081333).epsilon(1e-12));
    CHECK(value > 2.895);
    CHECK(value < 2.915);

    CHECK(cvar_reference_nested(0.3, 0.9) * 2.0 ==
          doctest::Approx(cvar_reference_nested(0.6, 0.9)).epsilon(1e-14));
    CHECK(cvar_reference_nested(1e-12, 0.975) < 1e-10);
    CHECK_THROWS_AS(cvar_reference_nested(0.0, 0.975), std::domain_error);
    CHECK_THROWS_AS(cvar_reference_nested(0.5, -0.1), std::domain_error);
}
