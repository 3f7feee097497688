#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>

#include "mlmc_saa/core.hpp"
#include "mlmc_saa/rng.hpp"

namespace mlmc_saa {

// Short put position on a GBM asset: loss is (K - X_T)_+ - e^{rT} P0.
struct GbmParams {
    double x0 = 100.0;   // initial price
    double r = 0.05;     // risk-free rate
    double sigma = 0.2;  // volatility
    double T = 1.0;      // horizon
    double K = 110.0;    // strike
    double P0 = 10.7;    // premium collected at t = 0

    void validate() const {
        if (!(x0 > 0) || !(sigma >= 0) || !(T > 0) || !(K > 0) || P0 < 0)
            throw std::invalid_argument("GbmParams: need x0,K,T > 0, sigma >= 0, P0 >= 0");
    }
};

enum class GbmScheme { euler, milstein };

// Nested-expectation loss zeta = -1 - E[phi(Y,Z) | Y], which is tau*(Y^2 - 1).
struct NestedParams {
    double tau = 0.5;

    void validate() const {
        if (!(tau > 0.0 && tau < 1.0))
            throw std::invalid_argument("NestedParams: tau must lie in (0,1)");
    }
};

// One coupled sample (zeta_l, zeta_{l-1}) driven by shared randomness.
// coarse is NaN at level 0, where only the fine draw exists.
struct CoupledDraw {
    double fine = 0.0;
    double coarse = std::numeric_limits<double>::quiet_NaN();
};

// Terminal price from the Euler-Maruyama recursion
//   X_{n+1} = X_n + r X_n h + sigma X_n dW_n,  h = T / n_steps.
// increments must contain n_steps Brownian increments for step size h.
double gbm_euler_terminal(const GbmParams& p, int n_steps, std::span<const double> increments);

// Milstein adds the (1/2) sigma^2 X_n ((dW_n)^2 - ... ) correction written as
//   X_{n+1} = X_n + (r - sigma^2/2) h X_n + sigma X_n dW_n + (1/2) sigma^2 X_n (dW_n)^2.
double gbm_milstein_terminal(const GbmParams& p, int n_steps, std::span<const double> increments);

double put_loss(double x_T, const GbmParams& p);

// Coupled put-loss pair at the given ladder level. Fine and coarse paths share
// one Brownian path: each coarse increment is the sum of m consecutive fine
// increments. At level 0 only the fine draw is produced.
CoupledDraw gbm_coupled_pair(const GbmParams& p, GbmScheme scheme, const BiasLadder& ladder,
                             int ell, RandomStream& stream);

// phi(y,z) = -tau y^2 - 2 sqrt(tau(1-tau)) y z - (1-tau) z^2.
double phi(double y, double z, double tau);

// Biased loss draw E_M(y) = -1 - (1/M) sum_j phi(y, z_j), bias parameter 1/M.
double nested_inner_estimate(double y, int inner_count, std::span<const double> inner_draws,
                             double tau);

// Coupled nested pair: shared outer y, fine uses M_l = round(1/h_l) inner
// draws, coarse reuses the first M_{l-1} of them.
CoupledDraw nested_coupled_pair(double y, const BiasLadder& ladder, int ell, RandomStream& stream,
                                double tau);

// Closed-form CVaR_theta of the GBM put loss with X_T exactly lognormal.
// Independent of every simulation code path; serves as the reference p*.
double cvar_reference_gbm(const GbmParams& p, double theta);

// Closed-form CVaR_theta of tau*(Y^2 - 1), the exact nested loss.
double cvar_reference_nested(double tau, double theta);

// A problem bundles the coupled level-sampler with its decision interval,
// CVaR confidence level and reference optimum.
class Problem {
public:
    virtual ~Problem() = default;
    virtual CoupledDraw sample_pair(const BiasLadder& ladder, int ell, RandomStream& stream) const = 0;
    virtual Interval domain() const = 0;
    virtual double theta() const = 0;
    virtual double reference_value() const = 0;
    virtual std::string name() const = 0;
};

class GbmProblem final : public Problem {
public:
    GbmProblem(GbmParams params, GbmScheme scheme, double theta = 0.95,
               Interval domain = Interval(23.0, 25.0))
        : params_(params), scheme_(scheme), theta_(theta), domain_(domain) {
        params_.validate();
        if (!(theta_ > 0.0 && theta_ < 1.0))
            throw std::invalid_argument("GbmProblem: theta must lie in (0,1)");
    }

    CoupledDraw sample_pair(const BiasLadder& ladder, int ell, RandomStream& stream) const override {
        return gbm_coupled_pair(params_, scheme_, ladder, ell, stream);
    }
    Interval domain() const override { return domain_; }
    double theta() const override { return theta_; }
    double reference_value() const override { return cvar_reference_gbm(params_, theta_); }
    std::string name() const override {
        return scheme_ == GbmScheme::euler ? "gbm_euler" : "gbm_milstein";
    }
    const GbmParams& params() const { return params_; }
    GbmScheme scheme() const { return scheme_; }

private:
    GbmParams params_;
    GbmScheme scheme_;
    double theta_;
    Interval domain_;
};

class NestedProblem final : public Problem {
public:
    explicit NestedProblem(NestedParams params, double theta = 0.975,
                           Interval domain = Interval(1.0, 4.0))
        : params_(params), theta_(theta), domain_(domain) {
        params_.validate();
        if (!(theta_ > 0.0 && theta_ < 1.0))
            throw std::invalid_argument("NestedProblem: theta must lie in (0,1)");
    }

    CoupledDraw sample_pair(const BiasLadder& ladder, int ell, RandomStream& stream) const override {
        const double y = stream.next_normal();
        return nested_coupled_pair(y, ladder, ell, stream, params_.tau);
    }
    Interval domain() const override { return domain_; }
    double theta() const override { return theta_; }
    double reference_value() const override { return cvar_reference_nested(params_.tau, theta_); }
    std::string name() const override { return "nested"; }
    const NestedParams& params() const { return params_; }

private:
    NestedParams params_;
    double theta_;
    Interval domain_;
};

}  // namespace mlmc_saa
