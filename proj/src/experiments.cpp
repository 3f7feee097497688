#include "mlmc_saa/experiments.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mlmc_saa/rng.hpp"
#include "mlmc_saa/stats.hpp"

namespace mlmc_saa {

std::vector<SolveReport> run_replications(const Problem& problem, SolverKind solver, double eps,
                                          int replications, const SolverConfig& config,
                                          std::uint64_t master_seed, int threads) {
    if (replications < 1)
        throw std::invalid_argument("run_replications: need at least one replication");
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    if (threads > replications) threads = replications;

    std::vector<SolveReport> reports(static_cast<std::size_t>(replications));
    const auto solve_one = [&](int rep) {
        const SeedSpec seed{master_seed, static_cast<std::uint32_t>(rep), 0, StreamRole::pilot};
        reports[static_cast<std::size_t>(rep)] = solver == SolverKind::mc
                                                     ? mc_saa_solve(problem, eps, config, seed)
                                                     : mlmc_saa_solve(problem, eps, config, seed);
    };

    if (threads == 1) {
        for (int rep = 0; rep < replications; ++rep) solve_one(rep);
        return reports;
    }

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= replications) return;
            try {
                solve_one(rep);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return reports;
}

ExperimentSummary summarize(const std::vector<SolveReport>& reports, double p_star, double eps) {
    if (reports.size() < 2) throw std::invalid_argument("summarize: need at least two reports");

    std::vector<double> values(reports.size());
    double cost_sum = 0.0;
    int tail_count = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        values[i] = reports[i].value;
        cost_sum += reports[i].cost.total;
        if (std::abs(values[i] - p_star) > eps) ++tail_count;
    }

    ExperimentSummary summary;
    summary.eps = eps;
    summary.h0 = reports.front().h_used;
    summary.replications = static_cast<int>(reports.size());
    summary.mean_value = mean(values);
    summary.bias = std::abs(summary.mean_value - p_star);
    summary.variance = sample_variance(values);
    summary.rmse = std::sqrt(summary.bias * summary.bias + summary.variance);
    summary.tail_prob = static_cast<double>(tail_count) / static_cast<double>(reports.size());
    summary.mean_cost = cost_sum / static_cast<double>(reports.size());
    return summary;
}

RateEstimate estimate_rates(const Problem& problem, double x_probe, const BiasLadder& ladder,
                            int samples_per_level, std::uint64_t master_seed) {
    if (ladder.levels < 3)
        throw std::invalid_argument("estimate_rates: ladder must have at least 3 levels");
    if (samples_per_level < 2)
        throw std::invalid_argument("estimate_rates: need at least two samples per level");

    const double theta = problem.theta();
    RateEstimate est;
    est.level_means.reserve(static_cast<std::size_t>(ladder.levels));
    est.level_vars.reserve(static_cast<std::size_t>(ladder.levels));
    for (int ell = 1; ell <= ladder.levels; ++ell) {
        RandomStream stream(
            SeedSpec{master_seed, 0, static_cast<std::uint32_t>(ell), StreamRole::level_sampling});
        RunningMoments moments;
        for (int k = 0; k < samples_per_level; ++k) {
            const CoupledDraw pair = problem.sample_pair(ladder, ell, stream);
            moments.add(cvar_cost_eval(x_probe, pair.fine, theta) -
                        cvar_cost_eval(x_probe, pair.coarse, theta));
        }
        est.level_means.push_back(moments.mean);
        est.level_vars.push_back(moments.variance());
    }

    const double log_m = std::log(static_cast<double>(ladder.m));
    std::vector<double> xs_alpha, ys_alpha, xs_beta, ys_beta;
    for (int ell = 1; ell <= ladder.levels; ++ell) {
        const double mean_abs = std::abs(est.level_means[static_cast<std::size_t>(ell - 1)]);
        const double var = est.level_vars[static_cast<std::size_t>(ell - 1)];
        if (mean_abs > 0.0) {
            xs_alpha.push_back(ell);
            ys_alpha.push_back(std::log(mean_abs) / log_m);
        } else {
            est.excluded_levels.push_back(ell);
        }
        if (var > 0.0) {
            xs_beta.push_back(ell);
            ys_beta.push_back(std::log(var) / log_m);
        }
    }
    if (xs_alpha.size() < 2 || xs_beta.size() < 2)
        throw std::runtime_error("estimate_rates: too many degenerate levels for a regression");
    est.alpha_hat = -regression_slope(xs_alpha, ys_alpha);
    est.beta_hat = -regression_slope(xs_beta, ys_beta);
    return est;
}

std::vector<ExperimentSummary> reproduce_table(const Problem& problem, SolverKind solver,
                                               const std::vector<double>& eps_list,
                                               int replications, double p_star,
                                               const SolverConfig& config,
                                               std::uint64_t master_seed, int threads) {
    if (eps_list.empty()) throw std::invalid_argument("reproduce_table: empty eps list");
    std::vector<ExperimentSummary> table;
    table.reserve(eps_list.size());
    for (std::size_t row = 0; row < eps_list.size(); ++row) {
        // Per-row master seed, so rows are independent of each other.
        const std::uint64_t row_seed =
            detail::splitmix64(master_seed + 0x9E3779B97F4A7C15ull * (row + 1));
        const auto reports = run_replications(problem, solver, eps_list[row], replications,
                                              config, row_seed, threads);
        table.push_back(summarize(reports, p_star, eps_list[row]));
    }
    return table;
}

}  // namespace mlmc_saa
