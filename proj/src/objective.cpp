#include "mlmc_saa/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlmc_saa {

WeightedSampleSet WeightedSampleSet::uniform(std::vector<double> draws) {
    if (draws.empty()) throw std::invalid_argument("WeightedSampleSet: empty sample");
    WeightedSampleSet s;
    const double w = 1.0 / static_cast<double>(draws.size());
    s.weights.assign(draws.size(), w);
    s.values = std::move(draws);
    return s;
}

void WeightedSampleSet::validate() const {
    if (values.size() != weights.size())
        throw std::invalid_argument("WeightedSampleSet: values/weights size mismatch");
    if (values.empty()) throw std::invalid_argument("WeightedSampleSet: empty sample");
    // Compensated sum: naive accumulation over millions of 1/N weights drifts
    // past the 1e-10 contract.
    double total = 0.0, carry = 0.0;
    for (double w : weights) {
        const double t = total + w;
        carry += std::abs(total) >= std::abs(w) ? (total - t) + w : (w - t) + total;
        total = t;
    }
    total += carry;
    if (std::abs(total - 1.0) > 1e-10)
        throw std::invalid_argument("WeightedSampleSet: weights must sum to 1");
}

double objective_eval(double x, const WeightedSampleSet& s, const CvarCost& cost) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k)
        acc += s.weights[k] * cvar_cost_eval(x, s.values[k], cost.theta);
    return acc;
}

MinimizeResult minimize_breakpoints(const WeightedSampleSet& s, const CvarCost& cost,
                                    const Interval& domain) {
    s.validate();
    const std::size_t n = s.values.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });

    std::vector<double> sorted_values(n);
    std::vector<double> suffix_weight(n + 1, 0.0);
    std::vector<double> suffix_weighted_value(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) sorted_values[i] = s.values[order[i]];
    for (std::size_t i = n; i-- > 0;) {
        const double w = s.weights[order[i]];
        suffix_weight[i] = suffix_weight[i + 1] + w;
        suffix_weighted_value[i] = suffix_weighted_value[i + 1] + w * sorted_values[i];
    }

    // F(x) = x + (T_j - x W_j)/(1-theta), j = first sorted index with zeta > x.
    const double tail_scale = 1.0 / (1.0 - cost.theta);
    const auto score = [&](double x) {
        const std::size_t j = static_cast<std::size_t>(
            std::upper_bound(sorted_values.begin(), sorted_values.end(), x) -
            sorted_values.begin());
        return x + (suffix_weighted_value[j] - x * suffix_weight[j]) * tail_scale;
    };

    MinimizeResult best;
    best.argmin = domain.lo;
    best.value = score(domain.lo);
    best.evaluations = 1;
    // Candidates visited in ascending order; strict improvement keeps the
    // smallest argmin on ties.
    for (double v : sorted_values) {
        if (v <= domain.lo || v >= domain.hi) continue;
        const double f = score(v);
        ++best.evaluations;
        if (f < best.value) {
            best.value = f;
            best.argmin = v;
        }
    }
    if (domain.hi > domain.lo) {
        const double f = score(domain.hi);
        ++best.evaluations;
        if (f < best.value) {
            best.value = f;
            best.argmin = domain.hi;
        }
    }
    // Report the direct weighted sum at the winner so the returned value and
    // objective_eval agree to roundoff.
    best.value = objective_eval(best.argmin, s, cost);
    return best;
}

MinimizeResult minimize_golden(const std::function<double(double)>& evaluator,
                               const Interval& domain, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("minimize_golden: tol must be > 0");
    const double inv_phi = 0.6180339887498948482;

    MinimizeResult res;
    const auto eval = [&](double x) {
        const double f = evaluator(x);
        ++res.evaluations;
        if (!std::isfinite(f))
            throw std::runtime_error("minimize_golden: evaluator returned a non-finite value");
        return f;
    };

    double lo = domain.lo, hi = domain.hi;
    // Fixed iteration count reaching bracket width <= tol; immune to tol
    // below floating-point granularity.
    const int iterations =
        hi - lo <= tol ? 0
                       : static_cast<int>(std::ceil(std::log((hi - lo) / tol) /
                                                    std::log(1.0 / inv_phi)));
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    for (int it = 0; it < iterations; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    res.argmin = 0.5 * (lo + hi);
    res.value = eval(res.argmin);
    return res;
}

}  // namespace mlmc_saa
