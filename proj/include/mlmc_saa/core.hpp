#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlmc_saa {

// Compact decision interval [lo, hi]; all shipped problems are 1-d.
struct Interval {
    double lo;
    double hi;

    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("Interval: bounds must be finite");
        if (lo > hi)
            throw std::domain_error("Interval: lo > hi");
    }

    double diameter() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

// Geometric family of bias parameters h_l = h0 * m^-l, l = 0..levels.
struct BiasLadder {
    double h0;   // coarsest bias
    int m;       // refinement factor
    int levels;  // index of the finest level L

    BiasLadder(double h0_, int m_, int levels_) : h0(h0_), m(m_), levels(levels_) {
        if (!(h0 > 0.0) || !std::isfinite(h0))
            throw std::invalid_argument("BiasLadder: h0 must be positive and finite");
        if (m < 2) throw std::invalid_argument("BiasLadder: m must be >= 2");
        if (levels < 0) throw std::invalid_argument("BiasLadder: levels must be >= 0");
    }
};

// h_l = h0 * m^-l. The power is accumulated in exact integer-valued doubles
// so ladders built from dyadic h0 stay exactly representable.
inline double level_bias(const BiasLadder& ladder, int ell) {
    if (ell < 0 || ell > ladder.levels)
        throw std::domain_error("level_bias: level index out of range");
    double p = 1.0;
    for (int i = 0; i < ell; ++i) p *= static_cast<double>(ladder.m);
    return ladder.h0 / p;
}

// Weak/strong rate contract (Assumption-style constants).
struct RateContract {
    double alpha;  // weak (bias) rate
    double beta;   // strong (variance) rate
    double a;      // RMSE exponent slack, beta_bar = beta/(1+a)
    double c1;     // bias constant, >= 0
    double c2;     // variance constant, >= 0

    RateContract(double alpha_, double beta_, double a_, double c1_ = 0.0, double c2_ = 0.0)
        : alpha(alpha_), beta(beta_), a(a_), c1(c1_), c2(c2_) {
        if (!(alpha > 0.0)) throw std::invalid_argument("RateContract: alpha must be > 0");
        if (!(beta > 0.0)) throw std::invalid_argument("RateContract: beta must be > 0");
        if (!(a > 0.0)) throw std::invalid_argument("RateContract: a must be > 0");
        if (c1 < 0.0 || c2 < 0.0)
            throw std::invalid_argument("RateContract: c1, c2 must be >= 0");
    }

    double beta_bar() const { return beta / (1.0 + a); }
};

// Constants consumed only by the diagnostic complexity calculators.
struct TheoryConstants {
    double lipschitz = 1.0;  // L_f
    double gamma = 1.0;      // confidence exponent
    double delta = 1.0;      // large-deviation slack
    int dim = 1;             // decision dimension d
    double sigma2 = 1.0;     // uniform second moment bound
    double eta_bar = 1.0;    // per-sample cost constant
    double r = 0.25;         // fallback level-weight exponent when case selection degenerates

    void validate() const {
        if (!(lipschitz > 0) || !(gamma > 0) || !(delta > 0) || dim < 1 || !(sigma2 > 0) ||
            !(eta_bar > 0) || !(r > 0))
            throw std::invalid_argument("TheoryConstants: all fields must be strictly positive");
    }
};

// Simulation cost split by level, total = sum(per_level).
struct CostAccount {
    double total = 0.0;
    std::vector<double> per_level;
};

// Cost model: eta_bar * N_l / h_l per level.
inline CostAccount simulation_cost(const std::vector<std::int64_t>& samples_per_level,
                                   const BiasLadder& ladder, double eta_bar) {
    if (static_cast<int>(samples_per_level.size()) != ladder.levels + 1)
        throw std::invalid_argument("simulation_cost: need one sample count per level");
    CostAccount acct;
    acct.per_level.reserve(samples_per_level.size());
    for (int ell = 0; ell <= ladder.levels; ++ell) {
        const auto n = samples_per_level[static_cast<std::size_t>(ell)];
        if (n < 0) throw std::invalid_argument("simulation_cost: negative sample count");
        acct.per_level.push_back(eta_bar * static_cast<double>(n) / level_bias(ladder, ell));
    }
    acct.total = std::accumulate(acct.per_level.begin(), acct.per_level.end(), 0.0);
    return acct;
}

enum class StreamRole : std::uint32_t {
    pilot = 0,
    level_sampling = 1,
    minimizer_probe = 2,
};

inline const char* to_string(StreamRole role) {
    switch (role) {
        case StreamRole::pilot: return "pilot";
        case StreamRole::level_sampling: return "level_sampling";
        case StreamRole::minimizer_probe: return "minimizer_probe";
    }
    return "?";
}

// Identifies one random stream. Distinct (replication, level, role) triples
// map to disjoint counter blocks of the same keyed generator, so results do
// not depend on scheduling or thread count.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint32_t replication_index = 0;
    std::uint32_t level_index = 0;
    StreamRole stream_role = StreamRole::pilot;

    SeedSpec with_replication(std::uint32_t rep) const {
        SeedSpec s = *this;
        s.replication_index = rep;
        return s;
    }
    SeedSpec with_stream(StreamRole role, std::uint32_t level = 0) const {
        SeedSpec s = *this;
        s.stream_role = role;
        s.level_index = level;
        return s;
    }
};

}  // namespace mlmc_saa
