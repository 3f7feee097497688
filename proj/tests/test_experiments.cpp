#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlmc_saa/experiments.hpp"
#include "mlmc_saa/rng.hpp"

using namespace mlmc_saa;

namespace {

// Coupled pair with exactly known rates: the fine-minus-coarse cost
// difference has mean proportional to h_l^alpha and variance to h_l^beta.
class SyntheticRateProblem final : public Problem {
public:
    explicit SyntheticRateProblem(double beta) : beta_(beta) {}
    CoupledDraw sample_pair(const BiasLadder& ladder, int ell, RandomStream& stream) const override {
        const double base = 10.0 + stream.next_normal();
        if (ell == 0) return {base, std::numeric_limits<double>::quiet_NaN()};
        const double h = level_bias(ladder, ell);
        const double fine = base + h + 0.01 * std::pow(h, 0.5 * beta_) * stream.next_normal();
        return {fine, base};
    }
    Interval domain() const override { return Interval(-200.0, 30.0); }
    double theta() const override { return 0.5; }
    double reference_value() const override { return 0.0; }
    std::string name() const override { return "synthetic_rate"; }

private:
    double beta_;
};

class ConstantProblem final : public Problem {
public:
    explicit ConstantProblem(double c) : c_(c) {}
    CoupledDraw sample_pair(const BiasLadder&, int ell, RandomStream&) const override {
        return {c_, ell > 0 ? c_ : std::numeric_limits<double>::quiet_NaN()};
    }
    Interval domain() const override { return Interval(c_ - 1.0, c_ + 1.0); }
    double theta() const override { return 0.5; }
    double reference_value() const override { return c_; }
    std::string name() const override { return "constant"; }

private:
    double c_;
};

std::vector<SolveReport> fake_reports(double mean, double variance, double cost) {
    // Two reports with values mean -/+ s reproduce the requested mean and
    // unbiased variance exactly (s = sqrt(variance/2)).
    const double s = std::sqrt(0.5 * variance);
    SolveReport lo, hi;
    lo.value = mean - s;
    hi.value = mean + s;
    lo.cost.total = cost;
    hi.cost.total = cost;
    return {lo, hi};
}

}  // namespace

TEST_CASE("summarize reproduces the rmse identity on benchmark pairs") {
    // (bias, variance, rmse) rows from the benchmark tables.
    const struct {
        double bias, variance, rmse;
    } rows[] = {
        {2.7188e-01, 3.0176e-01, 0.6129},
        {5.5760e-02, 7.9016e-02, 0.2866},
        {9.4734e-01, 1.3697e-01, 1.0171},
        {9.7929e-03, 1.3391e-03, 0.0379},
    };
    for (const auto& row : rows) {
        const auto reports = fake_reports(row.bias, row.variance, 1.0);
        const ExperimentSummary s = summarize(reports, 0.0, 0.5);
        CHECK(s.bias == doctest::Approx(row.bias).epsilon(1e-12));
        CHECK(s.variance == doctest::Approx(row.variance).epsilon(1e-12));
        CHECK(std::abs(s.rmse - row.rmse) <= 5e-4);
    }
}

TEST_CASE("summarize on identical values") {
    auto reports = fake_reports(3.0, 0.0, 7.0);
    const ExperimentSummary s = summarize(reports, 3.0, 0.25);
    CHECK(s.bias == 0.0);
    CHECK(s.variance == 0.0);
    CHECK(s.rmse == 0.0);
    CHECK(s.tail_prob == 0.0);
    CHECK(s.mean_cost == 7.0);
    CHECK(s.mean_value == 3.0);

    // Tail probability counts runs farther than eps from p*.
    auto spread = fake_reports(3.0, 2.0, 1.0);
    const ExperimentSummary t = summarize(spread, 3.0, 0.5);
    CHECK(t.tail_prob == 1.0);
    CHECK_THROWS_AS(summarize({reports[0]}, 3.0, 0.5), std::invalid_argument);
}

TEST_CASE("run_replications: R=1 equals a direct solve and threads do not matter") {
    const GbmProblem problem(GbmParams{}, GbmScheme::milstein);
    SolverConfig cfg{RateContract(1.0, 2.0, 1e-3)};
    cfg.pilot_n = 500;

    const auto single = run_replications(problem, SolverKind::mc, 0.5, 1, cfg, 99, 1);
    const SolveReport direct =
        mc_saa_solve(problem, 0.5, cfg, SeedSpec{99, 0, 0, StreamRole::pilot});
    CHECK(single[0].value == direct.value);
    CHECK(single[0].argmin == direct.argmin);

    const auto serial = run_replications(problem, SolverKind::mlmc, 0.5, 6, cfg, 123, 1);
    const auto threaded = run_replications(problem, SolverKind::mlmc, 0.5, 6, cfg, 123, 3);
    REQUIRE(serial.size() == threaded.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].value == threaded[i].value);
        CHECK(serial[i].argmin == threaded[i].argmin);
        CHECK(serial[i].cost.total == threaded[i].cost.total);
    }
}

TEST_CASE("estimate_rates recovers exact synthetic rates") {
    const BiasLadder ladder(0.25, 2, 4);
    for (double beta : {1.0, 2.0}) {
        const SyntheticRateProblem problem(beta);
        const RateEstimate est = estimate_rates(problem, -150.0, ladder, 20000, 4711);
        CHECK(est.alpha_hat == doctest::Approx(1.0).epsilon(0.05));
        CHECK(est.beta_hat == doctest::Approx(beta).epsilon(0.05));
        CHECK(est.level_means.size() == 4);
        CHECK(est.excluded_levels.empty());
    }
    CHECK_THROWS_AS(estimate_rates(SyntheticRateProblem(1.0), -150.0, BiasLadder(0.25, 2, 2),
                                   100, 1),
                    std::invalid_argument);
}

TEST_CASE("reproduce_table shapes, h0 column and cost monotonicity") {
    const ConstantProblem problem(0.4);
    SolverConfig cfg{RateContract(1.0, 1.0, 1e-3)};
    cfg.pilot_n = 20;
    const std::vector<double> eps_list{0.5, 0.25, 0.125};
    const auto table = reproduce_table(problem, SolverKind::mc, eps_list, 3,
                                       problem.reference_value(), cfg, 2222, 1);
    REQUIRE(table.size() == 3);
    for (std::size_t i = 0; i < table.size(); ++i) {
        CHECK(table[i].eps == eps_list[i]);
        CHECK(table[i].h0 ==
              doctest::Approx(mc_bias_parameter(eps_list[i], 1.0, 0.5, 0.5)).epsilon(1e-12));
        CHECK(table[i].replications == 3);
        CHECK(table[i].bias <= 1e-12);  // constant loss solved exactly up to roundoff
        if (i > 0) CHECK(table[i].mean_cost >= table[i - 1].mean_cost);
    }
}

TEST_CASE("scale presets match the benchmark grid") {
    CHECK(full_scale_eps() == std::vector<double>{0.5, 0.25, 0.125, 0.0625, 0.03125});
    CHECK(desk_scale_eps() == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
    CHECK(full_scale_replications == 100);
    CHECK(desk_scale_replications == 20);
}
