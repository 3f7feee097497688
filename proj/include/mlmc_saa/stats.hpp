#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace mlmc_saa {

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / 2.506628274631000502415765284811;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

// Acklam's rational approximation refined with one Halley step; accurate to
// ~1e-15 over (0,1).
double normal_quantile(double p);

double mean(std::span<const double> xs);
// Unbiased sample variance (n-1 denominator); requires n >= 2.
double sample_variance(std::span<const double> xs);

// Least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

struct RunningMoments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const {
        if (n < 2) throw std::domain_error("RunningMoments: variance needs n >= 2");
        return m2 / static_cast<double>(n - 1);
    }
};

}  // namespace mlmc_saa
