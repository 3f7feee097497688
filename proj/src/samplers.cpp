#include "mlmc_saa/samplers.hpp"

#include <algorithm>
#include <cmath>

#include "mlmc_saa/stats.hpp"

namespace mlmc_saa {

namespace {

inline double euler_step(double x, double h, double dw, const GbmParams& p) {
    return x + p.r * x * h + p.sigma * x * dw;
}

inline double milstein_step(double x, double h, double dw, const GbmParams& p) {
    return x + (p.r - 0.5 * p.sigma * p.sigma) * h * x + p.sigma * x * dw +
           0.5 * p.sigma * p.sigma * x * dw * dw;
}

inline double scheme_step(GbmScheme scheme, double x, double h, double dw, const GbmParams& p) {
    return scheme == GbmScheme::euler ? euler_step(x, h, dw, p) : milstein_step(x, h, dw, p);
}

// ceil with a tolerance so that T/h lands on the intended integer when h is
// not exactly representable (e.g. h = 0.1).
inline int step_count(double T, double h) {
    return static_cast<int>(std::ceil(T / h - 1e-9));
}

}  // namespace

double gbm_euler_terminal(const GbmParams& p, int n_steps, std::span<const double> increments) {
    if (n_steps < 1) throw std::domain_error("gbm_euler_terminal: n_steps must be >= 1");
    if (static_cast<int>(increments.size()) != n_steps)
        throw std::invalid_argument("gbm_euler_terminal: increments size != n_steps");
    const double h = p.T / n_steps;
    double x = p.x0;
    for (double dw : increments) x = euler_step(x, h, dw, p);
    return x;
}

double gbm_milstein_terminal(const GbmParams& p, int n_steps, std::span<const double> increments) {
    if (n_steps < 1) throw std::domain_error("gbm_milstein_terminal: n_steps must be >= 1");
    if (static_cast<int>(increments.size()) != n_steps)
        throw std::invalid_argument("gbm_milstein_terminal: increments size != n_steps");
    const double h = p.T / n_steps;
    double x = p.x0;
    for (double dw : increments) x = milstein_step(x, h, dw, p);
    return x;
}

double put_loss(double x_T, const GbmParams& p) {
    return std::max(p.K - x_T, 0.0) - std::exp(p.r * p.T) * p.P0;
}

CoupledDraw gbm_coupled_pair(const GbmParams& p, GbmScheme scheme, const BiasLadder& ladder,
                             int ell, RandomStream& stream) {
    const double h_ell = level_bias(ladder, ell);
    int n_fine = step_count(p.T, h_ell);
    if (ell > 0 && n_fine % ladder.m != 0)
        n_fine += ladder.m - n_fine % ladder.m;  // coarse path needs n_fine divisible by m
    const double dt_fine = p.T / n_fine;
    const double sqrt_dt = std::sqrt(dt_fine);

    if (ell == 0) {
        double x = p.x0;
        for (int i = 0; i < n_fine; ++i)
            x = scheme_step(scheme, x, dt_fine, sqrt_dt * stream.next_normal(), p);
        return CoupledDraw{put_loss(x, p), std::numeric_limits<double>::quiet_NaN()};
    }

    const int n_coarse = n_fine / ladder.m;
    const double dt_coarse = p.T / n_coarse;
    double x_fine = p.x0;
    double x_coarse = p.x0;
    double dw_acc = 0.0;
    for (int i = 0; i < n_fine; ++i) {
        const double dw = sqrt_dt * stream.next_normal();
        x_fine = scheme_step(scheme, x_fine, dt_fine, dw, p);
        dw_acc += dw;
        if ((i + 1) % ladder.m == 0) {
            x_coarse = scheme_step(scheme, x_coarse, dt_coarse, dw_acc, p);
            dw_acc = 0.0;
        }
    }
    return CoupledDraw{put_loss(x_fine, p), put_loss(x_coarse, p)};
}

double phi(double y, double z, double tau) {
    return -tau * y * y - 2.0 * std::sqrt(tau * (1.0 - tau)) * y * z - (1.0 - tau) * z * z;
}

double nested_inner_estimate(double y, int inner_count, std::span<const double> inner_draws,
                             double tau) {
    if (inner_count < 1) throw std::domain_error("nested_inner_estimate: M must be >= 1");
    if (static_cast<int>(inner_draws.size()) != inner_count)
        throw std::invalid_argument("nested_inner_estimate: draws size != M");
    double sum = 0.0;
    for (double z : inner_draws) sum += phi(y, z, tau);
    return -1.0 - sum / inner_count;
}

CoupledDraw nested_coupled_pair(double y, const BiasLadder& ladder, int ell, RandomStream& stream,
                                double tau) {
    const long m_fine = std::llround(1.0 / level_bias(ladder, ell));
    if (m_fine < 1) throw std::domain_error("nested_coupled_pair: 1/h_l rounds below 1");

    if (ell == 0) {
        double sum = 0.0;
        for (long j = 0; j < m_fine; ++j) sum += phi(y, stream.next_normal(), tau);
        return CoupledDraw{-1.0 - sum / static_cast<double>(m_fine),
                           std::numeric_limits<double>::quiet_NaN()};
    }

    // Coarse estimate reuses the first M_{l-1} of the fine draws.
    const long m_coarse = std::llround(1.0 / level_bias(ladder, ell - 1));
    double sum = 0.0;
    for (long j = 0; j < m_coarse; ++j) sum += phi(y, stream.next_normal(), tau);
    const double coarse = -1.0 - sum / static_cast<double>(m_coarse);
    for (long j = m_coarse; j < m_fine; ++j) sum += phi(y, stream.next_normal(), tau);
    return CoupledDraw{-1.0 - sum / static_cast<double>(m_fine), coarse};
}

double cvar_reference_gbm(const GbmParams& p, double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("cvar_reference_gbm: theta must lie in (0,1)");
    const double discounted_premium = std::exp(p.r * p.T) * p.P0;
    if (p.sigma == 0.0) {
        const double x_T = p.x0 * std::exp(p.r * p.T);
        return std::max(p.K - x_T, 0.0) - discounted_premium;
    }

    // zeta is decreasing in X_T, so the worst (1-theta) tail of the loss is
    // {X_T <= q_{1-theta}(X_T)}. The truncated put payoff over that event has
    // a lognormal partial expectation in closed form.
    const double vol = p.sigma * std::sqrt(p.T);
    const double drift = (p.r - 0.5 * p.sigma * p.sigma) * p.T;
    const double x_tail = p.x0 * std::exp(drift + vol * normal_quantile(1.0 - theta));
    const double b = std::min(x_tail, p.K);
    const double z_b = (std::log(b / p.x0) - drift) / vol;
    const double partial = p.K * normal_cdf(z_b) -
                           p.x0 * std::exp(p.r * p.T) * normal_cdf(z_b - vol);
    return partial / (1.0 - theta) - discounted_premium;
}

double cvar_reference_nested(double tau, double theta) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::domain_error("cvar_reference_nested: tau must lie in (0,1)");
    if (!(theta > 0.0 && theta < 1.0))
        throw std::domain_error("cvar_reference_nested: theta must lie in (0,1)");
    // zeta = tau*(Y^2 - 1); the theta-quantile of Y^2 ~ chi^2(1) is a^2 with
    // a = Phi^{-1}((1+theta)/2), and E[Y^2 1{|Y|>a}] = 2(a phi(a) + 1 - Phi(a)).
    const double a = normal_quantile(0.5 * (1.0 + theta));
    const double tail_second_moment = 2.0 * (a * normal_pdf(a) + 1.0 - normal_cdf(a));
    return tau * (tail_second_moment / (1.0 - theta) - 1.0);
}

}  // namespace mlmc_saa
