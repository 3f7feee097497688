#pragma once

#include <optional>
#include <vector>

#include "mlmc_saa/core.hpp"
#include "mlmc_saa/objective.hpp"
#include "mlmc_saa/samplers.hpp"

namespace mlmc_saa {

// Statistics extracted from the pilot phase at bias h0: rough optimizer,
// per-sample variance there, and (for MLMC) the level-1 coupled-difference
// statistics feeding the calibration table.
struct PilotReport {
    double x_hat = 0.0;
    double var_h = 0.0;       // V_h(x_hat)
    double var_diff = 0.0;    // variance of f(x_hat, zeta_1) - f(x_hat, zeta_0)
    double c1_hat = 0.0;      // Richardson-extracted bias constant
    double lambda_hat = 0.0;  // V_1(x_hat) / V_h(x_hat)
    int pilot_n = 0;
    bool degenerate_variance = false;  // var_h == 0; plan falls back to pilot size
};

// Calibrated MLMC execution plan (level count, adjusted coarsest bias,
// allocation fractions, sample counts).
struct MlmcPlan {
    int L = 1;
    double h = 0.0;
    int m = 2;
    std::vector<double> q;
    std::int64_t N_total = 1;
    std::vector<std::int64_t> N_levels;

    BiasLadder ladder() const {
        return BiasLadder(h, m, static_cast<int>(q.size()) - 1);
    }
};

struct SolveReport {
    double argmin = 0.0;
    double value = 0.0;  // p_hat
    std::int64_t mc_samples = 0;              // N for the MC solver; 0 for MLMC
    double h_used = 0.0;              // coarsest bias actually sampled
    std::optional<MlmcPlan> plan;     // present for the MLMC solver
    CostAccount cost;
    SeedSpec seed;
    double wall_time_s = 0.0;  // informational; excluded from determinism
};

struct SolverConfig {
    RateContract rates;      // alpha/beta/a; c1, c2 are estimated by the pilot
    int m = 4;               // ladder refinement factor
    double h0 = 1.0;         // MLMC coarsest bias
    double mc_h_ref = 0.5;   // MC bias pinning: h = mc_h_ref * (eps/mc_eps_ref)^(1/alpha)
    double mc_eps_ref = 0.5;
    int pilot_n = 2000;
    double eta_bar = 1.0;
};

// --- Algorithm "Monte Carlo SAA" ---

double mc_bias_parameter(double eps, double alpha, double h_ref, double eps_ref);

// N = ceil((1 + 1/(2 alpha)) var_h / eps^2), at least 1.
std::int64_t mc_sample_size(double var_h, double eps, double alpha);

// Draws pilot_n losses at bias h0, minimizes the pilot objective and returns
// x_hat plus the per-sample variance of f(x_hat, .). When out_draws is given
// the raw pilot losses are exported for reuse by the main phase.
PilotReport mc_pilot(const Problem& problem, double h0, int pilot_n, RandomStream& stream,
                     std::vector<double>* out_draws = nullptr);

// mc_pilot plus pilot_n coupled pairs at level 1, filling var_diff, c1_hat
// and lambda_hat for the calibration table.
PilotReport mlmc_pilot(const Problem& problem, double h0, int m, const RateContract& rates,
                       int pilot_n, RandomStream& stream, std::vector<double>* out_draws = nullptr);

SolveReport mc_saa_solve(const Problem& problem, double eps, const SolverConfig& config,
                         const SeedSpec& seed);

// --- Algorithm "MLMC SAA" and its parameter table ---

// L = 1 + ceil(log((1+2a)^(1/2a) (c1/eps)^(1/a) h0) / log m), clamped at 1.
int mlmc_level_count(double eps, const RateContract& rates, int m, double h0);

MlmcPlan mlmc_plan(double eps, const PilotReport& pilot, const RateContract& rates, int m,
                   double h0);

SolveReport mlmc_saa_solve(const Problem& problem, double eps, const SolverConfig& config,
                           const SeedSpec& seed);

// Coupled draws generated at one ladder level.
struct LevelBatch {
    std::vector<CoupledDraw> draws;
};

// Telescoped signed sample set: +1/N_l per fine draw, -1/N_l per coarse
// partner (level 0 contributes fine draws only).
WeightedSampleSet assemble_mlmc_sample_set(const std::vector<LevelBatch>& batches);

// --- Optimal-gap estimators (same sample set in both terms) ---

double optimal_gap_mc(double x_cand, const WeightedSampleSet& samples, const CvarCost& cost,
                      const Interval& domain);

double optimal_gap_mlmc(double x_cand, const std::vector<LevelBatch>& level_batches,
                        const CvarCost& cost, const Interval& domain);

// --- Theoretical-complexity diagnostics (every unnamed constant set to 1; ---
// --- never consumed by the solvers)                                       ---

double theoretical_mc_size(double eps, const TheoryConstants& tc, const RateContract& rc,
                           double h, const Interval& domain);

// Per-level sizes from the large-deviation bound; r is picked per variance
// regime and clamped to tc.r (with *r_clamped set) when the case formula
// degenerates to r <= 0.
std::vector<double> theoretical_mlmc_level_sizes(double eps, const TheoryConstants& tc,
                                                 const RateContract& rc, const BiasLadder& ladder,
                                                 const Interval& domain,
                                                 bool* r_clamped = nullptr);

// Alternative allocation from the RMSE analysis; deliberately conservative,
// kept for side-by-side comparison only.
std::vector<double> conservative_rmse_level_sizes(double eps, const RateContract& rc,
                                                  const BiasLadder& ladder);

enum class CostRegime { quadratic, quadratic_log, degraded };

struct RegimeReport {
    CostRegime regime = CostRegime::quadratic;
    double exponent = 2.0;   // predicted cost exponent in 1/eps
    bool log_factor = false; // multiplicative log(1/eps) factor present
};

// Classifies beta (or beta_bar) against 1 and reports the predicted cost
// growth; m enters only through the beta = 1 exponent.
RegimeReport complexity_regime(const RateContract& rc, bool use_beta_bar, int m);

}  // namespace mlmc_saa
