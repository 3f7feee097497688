#include "mlmc_saa/solvers.hpp"

#include <chrono>
#include <cmath>

#include "mlmc_saa/stats.hpp"

namespace mlmc_saa {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::int64_t ceil_to_long(double x) {
    const double c = std::ceil(x);
    if (c >= 9.2e18) throw std::overflow_error("sample size overflows 64-bit integer");
    return c < 1.0 ? 1 : static_cast<std::int64_t>(c);
}

}  // namespace

double mc_bias_parameter(double eps, double alpha, double h_ref, double eps_ref) {
    if (!(eps > 0) || !(alpha > 0) || !(h_ref > 0) || !(eps_ref > 0))
        throw std::invalid_argument("mc_bias_parameter: all arguments must be positive");
    return h_ref * std::pow(eps / eps_ref, 1.0 / alpha);
}

std::int64_t mc_sample_size(double var_h, double eps, double alpha) {
    if (!(eps > 0) || !(alpha > 0))
        throw std::invalid_argument("mc_sample_size: eps and alpha must be positive");
    if (var_h < 0) throw std::invalid_argument("mc_sample_size: negative variance");
    if (var_h == 0.0) return 1;
    return ceil_to_long((1.0 + 0.5 / alpha) * var_h / (eps * eps));
}

PilotReport mc_pilot(const Problem& problem, double h0, int pilot_n, RandomStream& stream,
                     std::vector<double>* out_draws) {
    if (pilot_n < 2) throw std::invalid_argument("mc_pilot: pilot_n must be >= 2");
    const BiasLadder ladder(h0, 2, 0);

    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(pilot_n));
    for (int k = 0; k < pilot_n; ++k)
        draws.push_back(problem.sample_pair(ladder, 0, stream).fine);

    const CvarCost cost(problem.theta());
    const MinimizeResult rough =
        minimize_breakpoints(WeightedSampleSet::uniform(draws), cost, problem.domain());

    PilotReport report;
    report.x_hat = rough.argmin;
    report.pilot_n = pilot_n;
    std::vector<double> costs(draws.size());
    for (std::size_t k = 0; k < draws.size(); ++k)
        costs[k] = cvar_cost_eval(report.x_hat, draws[k], cost.theta);
    report.var_h = sample_variance(costs);
    // A constant loss leaves only summation roundoff in the variance.
    const double cost_mean = mean(costs);
    report.degenerate_variance = report.var_h <= 1e-20 * (1.0 + cost_mean * cost_mean);
    if (out_draws) *out_draws = std::move(draws);
    return report;
}

PilotReport mlmc_pilot(const Problem& problem, double h0, int m, const RateContract& rates,
                       int pilot_n, RandomStream& stream, std::vector<double>* out_draws) {
    PilotReport report = mc_pilot(problem, h0, pilot_n, stream, out_draws);

    const BiasLadder ladder(h0, m, 1);
    const double theta = problem.theta();
    RunningMoments diff_moments;
    for (int k = 0; k < pilot_n; ++k) {
        const CoupledDraw pair = problem.sample_pair(ladder, 1, stream);
        diff_moments.add(cvar_cost_eval(report.x_hat, pair.fine, theta) -
                         cvar_cost_eval(report.x_hat, pair.coarse, theta));
    }
    report.var_diff = diff_moments.variance();

    // Richardson extraction: E f(zeta_h0) - E f(zeta_h0/m) ~ c1 h0^a (1 - m^-a).
    const double denom =
        std::pow(h0, rates.alpha) * (1.0 - std::pow(static_cast<double>(m), -rates.alpha));
    report.c1_hat = std::abs(diff_moments.mean) / denom;

    const double h1 = h0 / m;
    const double v1 = report.var_diff / std::pow(h1, rates.beta);
    report.lambda_hat = report.var_h > 0.0 ? v1 / report.var_h : 0.0;
    return report;
}

SolveReport mc_saa_solve(const Problem& problem, double eps, const SolverConfig& config,
                         const SeedSpec& seed) {
    if (!(eps > 0)) throw std::invalid_argument("mc_saa_solve: eps must be positive");
    const auto t0 = clock_type::now();

    const double h = mc_bias_parameter(eps, config.rates.alpha, config.mc_h_ref, config.mc_eps_ref);
    RandomStream pilot_stream(seed.with_stream(StreamRole::pilot, 0));
    std::vector<double> draws;
    const PilotReport pilot = mc_pilot(problem, h, config.pilot_n, pilot_stream, &draws);

    const std::int64_t n = pilot.degenerate_variance ? pilot.pilot_n
                                             : mc_sample_size(pilot.var_h, eps, config.rates.alpha);
    const BiasLadder ladder(h, config.m, 0);
    if (n < static_cast<std::int64_t>(draws.size())) {
        draws.resize(static_cast<std::size_t>(n));
    } else {
        RandomStream main_stream(seed.with_stream(StreamRole::level_sampling, 0));
        draws.reserve(static_cast<std::size_t>(n));
        while (static_cast<std::int64_t>(draws.size()) < n)
            draws.push_back(problem.sample_pair(ladder, 0, main_stream).fine);
    }

    const MinimizeResult res = minimize_breakpoints(WeightedSampleSet::uniform(std::move(draws)),
                                                    CvarCost(problem.theta()), problem.domain());

    SolveReport report;
    report.argmin = res.argmin;
    report.value = res.value;
    report.mc_samples = n;
    report.h_used = h;
    report.cost = simulation_cost({n}, ladder, config.eta_bar);
    report.seed = seed;
    report.wall_time_s = seconds_since(t0);
    return report;
}

int mlmc_level_count(double eps, const RateContract& rates, int m, double h0) {
    if (!(eps > 0) || !(h0 > 0) || m < 2)
        throw std::invalid_argument("mlmc_level_count: invalid arguments");
    if (rates.c1 <= 0.0) return 1;
    const double scale = std::pow(1.0 + 2.0 * rates.alpha, 0.5 / rates.alpha) *
                         std::pow(rates.c1 / eps, 1.0 / rates.alpha);
    const int level = 1 + static_cast<int>(std::ceil(std::log(scale * h0) / std::log(m)));
    return level < 1 ? 1 : level;
}

MlmcPlan mlmc_plan(double eps, const PilotReport& pilot, const RateContract& rates, int m,
                   double h0) {
    if (!(eps > 0)) throw std::invalid_argument("mlmc_plan: eps must be positive");
    if (!(pilot.var_h > 0)) throw std::invalid_argument("mlmc_plan: pilot variance must be > 0");

    MlmcPlan plan;
    plan.m = m;
    const RateContract calibrated(rates.alpha, rates.beta, rates.a, pilot.c1_hat, rates.c2);
    plan.L = mlmc_level_count(eps, calibrated, m, h0);

    if (pilot.c1_hat > 0.0) {
        const double scale = std::pow(1.0 + 2.0 * rates.alpha, 0.5 / rates.alpha) *
                             std::pow(pilot.c1_hat / eps, 1.0 / rates.alpha);
        plan.h = h0 / std::ceil(h0 * scale * std::pow(static_cast<double>(m), -plan.L));
    } else {
        plan.h = h0;
    }

    const double lambda = pilot.lambda_hat;
    const double bias_pow = std::pow(plan.h, 0.5 * rates.beta);
    if (lambda <= 0.0) {
        // No usable level-1 variance: all sampling collapses onto level 0.
        plan.q = {1.0};
        plan.N_total =
            ceil_to_long((1.0 + 0.5 / rates.alpha) * pilot.var_h / (eps * eps));
        plan.N_levels = {plan.N_total};
        return plan;
    }

    // Allocation fractions and total sample count from the parameter table:
    //   q_0 = 1/q+, q_l = lambda h^(b/2) (m_{l-1}^-1 - m_l^-1)^(b/2) / (q+ sqrt(m_{l-1}+m_l)),
    //   N = ceil((1+1/(2a)) V_h q+ (1 + lambda h^(b/2) sum_l u_l s_l) / eps^2).
    std::vector<double> u(static_cast<std::size_t>(plan.L) + 1, 0.0);
    std::vector<double> s(static_cast<std::size_t>(plan.L) + 1, 0.0);
    double m_prev = 1.0;
    double q_dagger = 1.0;
    double n_series = 1.0;
    for (int ell = 1; ell <= plan.L; ++ell) {
        const double m_cur = m_prev * m;
        u[ell] = std::pow(1.0 / m_prev - 1.0 / m_cur, 0.5 * rates.beta);
        s[ell] = std::sqrt(m_prev + m_cur);
        q_dagger += lambda * bias_pow * u[ell] / s[ell];
        n_series += lambda * bias_pow * u[ell] * s[ell];
        m_prev = m_cur;
    }

    plan.q.resize(static_cast<std::size_t>(plan.L) + 1);
    plan.q[0] = 1.0 / q_dagger;
    for (int ell = 1; ell <= plan.L; ++ell)
        plan.q[ell] = lambda * bias_pow * u[ell] / (q_dagger * s[ell]);

    plan.N_total = ceil_to_long((1.0 + 0.5 / rates.alpha) * pilot.var_h * q_dagger * n_series /
                                (eps * eps));
    plan.N_levels.resize(plan.q.size());
    for (std::size_t ell = 0; ell < plan.q.size(); ++ell)
        plan.N_levels[ell] = ceil_to_long(static_cast<double>(plan.N_total) * plan.q[ell]);
    return plan;
}

WeightedSampleSet assemble_mlmc_sample_set(const std::vector<LevelBatch>& batches) {
    if (batches.empty() || batches.front().draws.empty())
        throw std::invalid_argument("assemble_mlmc_sample_set: level 0 batch required");
    WeightedSampleSet set;
    std::size_t total = 0;
    for (const LevelBatch& b : batches) total += 2 * b.draws.size();
    set.values.reserve(total);
    set.weights.reserve(total);

    for (std::size_t ell = 0; ell < batches.size(); ++ell) {
        const auto& draws = batches[ell].draws;
        if (draws.empty())
            throw std::invalid_argument("assemble_mlmc_sample_set: empty level batch");
        const double w = 1.0 / static_cast<double>(draws.size());
        for (const CoupledDraw& d : draws) {
            set.values.push_back(d.fine);
            set.weights.push_back(w);
            if (ell > 0) {
                set.values.push_back(d.coarse);
                set.weights.push_back(-w);
            }
        }
    }
    return set;
}

SolveReport mlmc_saa_solve(const Problem& problem, double eps, const SolverConfig& config,
                           const SeedSpec& seed) {
    if (!(eps > 0)) throw std::invalid_argument("mlmc_saa_solve: eps must be positive");
    const auto t0 = clock_type::now();

    RandomStream pilot_stream(seed.with_stream(StreamRole::pilot, 0));
    const PilotReport pilot =
        mlmc_pilot(problem, config.h0, config.m, config.rates, config.pilot_n, pilot_stream);

    MlmcPlan plan;
    if (pilot.degenerate_variance) {
        plan.L = 1;
        plan.m = config.m;
        plan.h = config.h0;
        plan.q = {1.0};
        plan.N_total = pilot.pilot_n;
        plan.N_levels = {static_cast<std::int64_t>(pilot.pilot_n)};
    } else {
        plan = mlmc_plan(eps, pilot, config.rates, config.m, config.h0);
    }

    const BiasLadder ladder = plan.ladder();
    std::vector<LevelBatch> batches(plan.N_levels.size());
    for (std::size_t ell = 0; ell < plan.N_levels.size(); ++ell) {
        RandomStream stream(seed.with_stream(StreamRole::level_sampling,
                                             static_cast<std::uint32_t>(ell)));
        auto& draws = batches[ell].draws;
        draws.reserve(static_cast<std::size_t>(plan.N_levels[ell]));
        for (std::int64_t k = 0; k < plan.N_levels[ell]; ++k)
            draws.push_back(problem.sample_pair(ladder, static_cast<int>(ell), stream));
    }

    const MinimizeResult res = minimize_breakpoints(assemble_mlmc_sample_set(batches),
                                                    CvarCost(problem.theta()), problem.domain());

    SolveReport report;
    report.argmin = res.argmin;
    report.value = res.value;
    report.h_used = plan.h;
    report.cost = simulation_cost(plan.N_levels, ladder, config.eta_bar);
    report.plan = std::move(plan);
    report.seed = seed;
    report.wall_time_s = seconds_since(t0);
    return report;
}

double optimal_gap_mc(double x_cand, const WeightedSampleSet& samples, const CvarCost& cost,
                      const Interval& domain) {
    if (!domain.contains(x_cand))
        throw std::domain_error("optimal_gap_mc: candidate outside the decision interval");
    for (double w : samples.weights)
        if (w != samples.weights.front())
            throw std::invalid_argument("optimal_gap_mc: weights must be uniform");
    const double at_candidate = objective_eval(x_cand, samples, cost);
    const double minimum = minimize_breakpoints(samples, cost, domain).value;
    const double gap = at_candidate - minimum;
    return gap < 0.0 ? 0.0 : gap;  // roundoff guard; the exact gap is >= 0
}

double optimal_gap_mlmc(double x_cand, const std::vector<LevelBatch>& level_batches,
                        const CvarCost& cost, const Interval& domain) {
    if (!domain.contains(x_cand))
        throw std::domain_error("optimal_gap_mlmc: candidate outside the decision interval");
    const WeightedSampleSet set = assemble_mlmc_sample_set(level_batches);
    const double at_candidate = objective_eval(x_cand, set, cost);
    const double minimum = minimize_breakpoints(set, cost, domain).value;
    const double gap = at_candidate - minimum;
    return gap < 0.0 ? 0.0 : gap;
}

double theoretical_mc_size(double eps, const TheoryConstants& tc, const RateContract& rc,
                           double h, const Interval& domain) {
    tc.validate();
    if (!(eps > 0) || !(h > 0) || !(rc.c1 > 0))
        throw std::invalid_argument("theoretical_mc_size: eps, h, c1 must be positive");
    const double prefactor =
        (tc.delta + 2.0) * tc.sigma2 / (rc.c1 * rc.c1 * std::pow(h, 2.0 * rc.alpha));
    const double log_terms =
        tc.dim * std::log(8.0 * tc.lipschitz * domain.diameter() / eps) +
        tc.gamma * std::log(1.0 / eps);
    return prefactor * log_terms + 1.0;
}

std::vector<double> theoretical_mlmc_level_sizes(double eps, const TheoryConstants& tc,
                                                 const RateContract& rc, const BiasLadder& ladder,
                                                 const Interval& domain, bool* r_clamped) {
    tc.validate();
    if (!(eps > 0) || !(rc.c2 > 0))
        throw std::invalid_argument("theoretical_mlmc_level_sizes: eps and c2 must be positive");

    const double log_m = std::log(static_cast<double>(ladder.m));
    double r;
    if (rc.beta == 1.0)
        r = std::log(2.0) / (2.0 * log_m);
    else if (rc.beta > 1.0)
        r = 0.5 * (rc.beta - 1.0) - std::log(2.0) / log_m;
    else
        r = 0.5 * (1.0 - rc.beta) - std::log(2.0) / log_m;
    bool clamped = false;
    if (r <= 0.0) {  // only possible for m < 4 in the beta != 1 cases
        r = tc.r;
        clamped = true;
    }
    if (r_clamped) *r_clamped = clamped;

    const int level_count = ladder.levels;
    const double cover = std::pow(
        8.0 * (2.0 * level_count + 1.0) * tc.lipschitz * domain.diameter() / eps, tc.dim);
    const double log_term = std::log(cover * (level_count + 1)) + tc.gamma * std::log(1.0 / eps);
    const double m_r = std::pow(static_cast<double>(ladder.m), r);
    const double prefactor = 64.0 * m_r * m_r * (tc.delta + 2.0) * rc.c2 /
                             (eps * eps * (m_r - 1.0) * (m_r - 1.0));

    std::vector<double> sizes(static_cast<std::size_t>(level_count) + 1);
    for (int ell = 0; ell <= level_count; ++ell) {
        const double h_ell = level_bias(ladder, ell);
        sizes[ell] = std::ceil(prefactor * std::pow(m_r, 2.0 * ell) *
                               std::pow(h_ell, rc.beta) * log_term);
    }
    return sizes;
}

std::vector<double> conservative_rmse_level_sizes(double eps, const RateContract& rc,
                                                  const BiasLadder& ladder) {
    if (!(eps > 0) || !(rc.c2 > 0))
        throw std::invalid_argument("conservative_rmse_level_sizes: eps and c2 must be positive");
    const double beta_bar = rc.beta_bar();
    double series = 0.0;
    for (int ell = 0; ell <= ladder.levels; ++ell)
        series += std::pow(level_bias(ladder, ell), (beta_bar - 1.0) / 3.0);

    std::vector<double> sizes(static_cast<std::size_t>(ladder.levels) + 1);
    const double prefactor = 16.0 / (eps * eps) * rc.c2 * rc.c2 * series * series;
    for (int ell = 0; ell <= ladder.levels; ++ell)
        sizes[ell] =
            std::ceil(prefactor * std::pow(level_bias(ladder, ell), (beta_bar + 2.0) / 3.0));
    return sizes;
}

RegimeReport complexity_regime(const RateContract& rc, bool use_beta_bar, int m) {
    if (m < 2) throw std::invalid_argument("complexity_regime: m must be >= 2");
    const double b = use_beta_bar ? rc.beta_bar() : rc.beta;
    RegimeReport report;
    if (b > 1.0) {
        report.regime = CostRegime::quadratic;
        report.exponent = 2.0;
        report.log_factor = !use_beta_bar;
    } else if (b == 1.0) {
        report.regime = CostRegime::quadratic_log;
        report.exponent =
            use_beta_bar ? 2.0 : 2.0 + std::log(2.0) / (rc.alpha * std::log(static_cast<double>(m)));
        report.log_factor = true;
    } else {
        report.regime = CostRegime::degraded;
        report.exponent = 2.0 + (1.0 - b) / rc.alpha;
        report.log_factor = !use_beta_bar;
    }
    return report;
}

}  // namespace mlmc_saa
