#pragma once

#include <cstdint>
#include <vector>

#include "mlmc_saa/samplers.hpp"
#include "mlmc_saa/solvers.hpp"

namespace mlmc_saa {

enum class SolverKind { mc, mlmc };

inline const char* to_string(SolverKind kind) { return kind == SolverKind::mc ? "mc" : "mlmc"; }

// One table row: replication statistics of the optimal value against the
// reference p*.
struct ExperimentSummary {
    double eps = 0.0;
    double h0 = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double rmse = 0.0;
    double tail_prob = 0.0;  // fraction of runs with |value - p*| > eps
    double mean_cost = 0.0;
    double mean_value = 0.0;
    int replications = 0;
};

// Empirical weak/strong rates from per-level coupled cost differences at a
// fixed probe point.
struct RateEstimate {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    std::vector<double> level_means;  // signed mean of f-difference, levels 1..L
    std::vector<double> level_vars;
    std::vector<int> excluded_levels;  // levels dropped from the alpha fit (zero mean)
};

// R independent solves; replication k uses streams derived from
// (master_seed, k), so results are identical for any thread count.
// threads <= 0 picks hardware concurrency.
std::vector<SolveReport> run_replications(const Problem& problem, SolverKind solver, double eps,
                                          int replications, const SolverConfig& config,
                                          std::uint64_t master_seed, int threads = 0);

ExperimentSummary summarize(const std::vector<SolveReport>& reports, double p_star, double eps);

RateEstimate estimate_rates(const Problem& problem, double x_probe, const BiasLadder& ladder,
                            int samples_per_level, std::uint64_t master_seed);

// One summary per epsilon; each row gets its own derived master seed.
std::vector<ExperimentSummary> reproduce_table(const Problem& problem, SolverKind solver,
                                               const std::vector<double>& eps_list,
                                               int replications, double p_star,
                                               const SolverConfig& config,
                                               std::uint64_t master_seed, int threads = 0);

// Desk-scale defaults run in minutes; the full-scale preset reproduces the
// benchmark tables in full.
inline std::vector<double> desk_scale_eps() { return {0.5, 0.25, 0.125, 0.0625}; }
inline std::vector<double> full_scale_eps() { return {0.5, 0.25, 0.125, 0.0625, 0.03125}; }
inline constexpr int desk_scale_replications = 20;
inline constexpr int full_scale_replications = 100;

}  // namespace mlmc_saa
