#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hjlab/errors.hpp"

namespace hjlab {

// Small statistics toolbox shared by the estimators and the test suites.

inline double mean_of(std::span<const double> v) {
    if (v.empty()) throw ConfigError("mean_of: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Unbiased sample variance.
inline double variance_of(std::span<const double> v) {
    if (v.size() < 2) throw ConfigError("variance_of: need >= 2 samples");
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double stderr_of_mean(std::span<const double> v) {
    return std::sqrt(variance_of(v) / static_cast<double>(v.size()));
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw ConfigError("median_of: empty sample");
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + mid);
    return 0.5 * (lo + hi);
}

inline double logsumexp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
    size_t n = 0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_line: need >= 2 paired points");
    size_t n = x.size();
    double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw ConfigError("fit_line: degenerate abscissae");
    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    f.slope_se = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

struct QuadFit {
    // y = c0 + c1 x + c2 x^2, with standard errors from the residuals.
    double c0 = 0, c1 = 0, c2 = 0;
    double c0_se = 0, c1_se = 0, c2_se = 0;
    double r2 = 0.0;
};

/// Least-squares quadratic through normal equations (3x3 solve).
QuadFit fit_quadratic(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Distribution tests
// ---------------------------------------------------------------------------

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample KS statistic against a CDF.
template <typename Cdf>
double ks_against_cdf(std::vector<double> a, Cdf cdf) {
    if (a.empty()) throw ConfigError("ks_against_cdf: empty sample");
    std::sort(a.begin(), a.end());
    double d = 0.0;
    size_t n = a.size();
    for (size_t i = 0; i < n; ++i) {
        double f = cdf(a[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with k dof.
inline double chi2_sf(double stat, double dof) { return gamma_q(0.5 * dof, 0.5 * stat); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Geometry helpers
// ---------------------------------------------------------------------------

/// Indices of the lower convex hull of (x, y) with x strictly increasing.
std::vector<size_t> lower_convex_hull(std::span<const double> x, std::span<const double> y);

}  // namespace hjlab
