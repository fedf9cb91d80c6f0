#include "hjlab/stats.hpp"

#include <array>

namespace hjlab {

QuadFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw ConfigError("fit_quadratic: need >= 3 points");
    size_t n = x.size();
    // Normal equations A c = b for basis {1, x, x^2}.
    std::array<std::array<double, 3>, 3> a{};
    std::array<double, 3> b{};
    for (size_t i = 0; i < n; ++i) {
        std::array<double, 3> phi = {1.0, x[i], x[i] * x[i]};
        for (int r = 0; r < 3; ++r) {
            b[r] += phi[r] * y[i];
            for (int c = 0; c < 3; ++c) a[r][c] += phi[r] * phi[c];
        }
    }
    // Gaussian elimination with partial pivoting; keep the inverse diagonal for SEs.
    std::array<std::array<double, 3>, 3> inv = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    std::array<std::array<double, 3>, 3> m = a;
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        std::swap(inv[col], inv[piv]);
        if (std::fabs(m[col][col]) < 1e-300) throw ConfigError("fit_quadratic: singular design");
        double d = m[col][col];
        for (int c = 0; c < 3; ++c) {
            m[col][c] /= d;
            inv[col][c] /= d;
        }
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double f = m[r][col];
            for (int c = 0; c < 3; ++c) {
                m[r][c] -= f * m[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    std::array<double, 3> c{};
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) c[r] += inv[r][k] * b[k];

    QuadFit f;
    f.c0 = c[0];
    f.c1 = c[1];
    f.c2 = c[2];
    double ss_res = 0.0, ss_tot = 0.0, my = mean_of(y);
    for (size_t i = 0; i < n; ++i) {
        double pred = c[0] + c[1] * x[i] + c[2] * x[i] * x[i];
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    double sigma2 = n > 3 ? ss_res / static_cast<double>(n - 3) : 0.0;
    f.c0_se = std::sqrt(sigma2 * inv[0][0]);
    f.c1_se = std::sqrt(sigma2 * inv[1][1]);
    f.c2_se = std::sqrt(sigma2 * inv[2][2]);
    return f;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0.0;
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

namespace {

// Series and continued-fraction pieces of the regularized incomplete gamma.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw ConfigError("gamma_q: domain");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

std::vector<size_t> lower_convex_hull(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ConfigError("lower_convex_hull: need >= 2 points");
    std::vector<size_t> hull;
    for (size_t i = 0; i < x.size(); ++i) {
        if (i > 0 && x[i] <= x[i - 1]) throw ConfigError("lower_convex_hull: x must increase");
        while (hull.size() >= 2) {
            size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
            double cross = (x[b] - x[a]) * (y[i] - y[a]) - (x[i] - x[a]) * (y[b] - y[a]);
            if (cross <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    return hull;
}

}  // namespace hjlab
