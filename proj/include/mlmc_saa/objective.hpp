#pragma once

#include <functional>
#include <vector>

#include "mlmc_saa/core.hpp"

namespace mlmc_saa {

// Rockafellar-Uryasev CVaR cost f(x, zeta) = x + (zeta - x)_+ / (1 - theta).
struct CvarCost {
    double theta;

    explicit CvarCost(double theta_) : theta(theta_) {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::invalid_argument("CvarCost: theta must lie in (0,1)");
    }
};

inline double cvar_cost_eval(double x, double zeta, double theta) {
    const double excess = zeta - x;
    return x + (excess > 0.0 ? excess / (1.0 - theta) : 0.0);
}

// Loss draws with signed per-draw weights. Uniform 1/N weights give the
// single-level objective; MLMC sets carry +1/N_l for a fine draw and -1/N_l
// for its coarse partner, so the total weight is 1 either way.
struct WeightedSampleSet {
    std::vector<double> values;
    std::vector<double> weights;

    static WeightedSampleSet uniform(std::vector<double> draws);
    void validate() const;
};

struct MinimizeResult {
    double argmin = 0.0;
    double value = 0.0;
    long evaluations = 0;
};

// Weighted empirical objective sum_k w_k f(x, zeta_k).
double objective_eval(double x, const WeightedSampleSet& s, const CvarCost& cost);

// Exact minimizer of the piecewise-linear empirical CVaR objective: the
// minimum over [lo,hi] sits at a sample value or an endpoint. Candidates are
// scored in O(1) each via suffix sums; ties break toward the smallest argmin.
MinimizeResult minimize_breakpoints(const WeightedSampleSet& s, const CvarCost& cost,
                                    const Interval& domain);

// Golden-section fallback for user-supplied costs; only guaranteed for
// unimodal evaluators.
MinimizeResult minimize_golden(const std::function<double(double)>& evaluator,
                               const Interval& domain, double tol);

}  // namespace mlmc_saa
