#include "hjlab/hamiltonian.hpp"

#include <algorithm>
#include <memory>

namespace hjlab {

HamiltonianSpec HamiltonianSpec::from_table(std::vector<double> v, std::vector<double> lv) {
    if (v.size() != lv.size() || v.size() < 3)
        throw ConfigError("hamiltonian: tabulation needs >= 3 points");
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] <= v[i - 1]) throw ConfigError("hamiltonian: tabulation abscissae must increase");
    // Convexity of the chord slopes.
    for (size_t i = 2; i < v.size(); ++i) {
        double s0 = (lv[i - 1] - lv[i - 2]) / (v[i - 1] - v[i - 2]);
        double s1 = (lv[i] - lv[i - 1]) / (v[i] - v[i - 1]);
        if (s1 + 1e-12 < s0) throw ConfigError("hamiltonian: tabulated L is not convex");
    }
    auto vs = std::make_shared<std::vector<double>>(std::move(v));
    auto ls = std::make_shared<std::vector<double>>(std::move(lv));

    HamiltonianSpec h;
    h.lagrangian = [vs, ls](double x) {
        const auto& vv = *vs;
        const auto& ll = *ls;
        if (x <= vv.front()) {  // linear extension at the table's end slopes
            double s = (ll[1] - ll[0]) / (vv[1] - vv[0]);
            return ll.front() + s * (x - vv.front());
        }
        if (x >= vv.back()) {
            size_t n = vv.size();
            double s = (ll[n - 1] - ll[n - 2]) / (vv[n - 1] - vv[n - 2]);
            return ll.back() + s * (x - vv.back());
        }
        auto it = std::upper_bound(vv.begin(), vv.end(), x);
        size_t i = static_cast<size_t>(it - vv.begin());
        double t = (x - vv[i - 1]) / (vv[i] - vv[i - 1]);
        return (1.0 - t) * ll[i - 1] + t * ll[i];
    };
    h.hamiltonian = [vs, ls](double p) {
        const auto& vv = *vs;
        const auto& ll = *ls;
        double best = -1e300;
        for (size_t i = 0; i < vv.size(); ++i) best = std::max(best, p * vv[i] - ll[i]);
        return best;
    };
    h.velocity = [vs, ls](double p) {
        const auto& vv = *vs;
        const auto& ll = *ls;
        double best = -1e300, arg = vv.front();
        for (size_t i = 0; i < vv.size(); ++i) {
            double val = p * vv[i] - ll[i];
            if (val > best) {
                best = val;
                arg = vv[i];
            }
        }
        return arg;
    };
    h.quadratic = false;
    return h;
}

void HamiltonianSpec::validate(double vmin, double vmax, int n) const {
    if (!(vmin < vmax) || n < 8) throw ConfigError("hamiltonian: bad validation range");
    double h = (vmax - vmin) / (n - 1);
    double prev_slope = -1e300;
    for (int i = 1; i < n; ++i) {
        double a = vmin + (i - 1) * h, b = vmin + i * h;
        double s = (lagrangian(b) - lagrangian(a)) / h;
        if (s + 1e-9 * (1.0 + std::fabs(s)) < prev_slope)
            throw ConfigError("hamiltonian: L fails convexity on the checked range");
        prev_slope = s;
    }
    // Superlinearity proxy: end slope must exceed the starting slope.
    double se = (lagrangian(vmax) - lagrangian(vmax - h)) / h;
    double s0 = (lagrangian(vmin + h) - lagrangian(vmin)) / h;
    if (!(se > s0)) throw ConfigError("hamiltonian: L shows no growth on the checked range");
}

double HamiltonianSpec::duality_gap(double pmin, double pmax, double vmin, double vmax, int n) const {
    double gap = 0.0;
    for (int i = 0; i < n; ++i) {
        double p = pmin + (pmax - pmin) * i / (n - 1);
        double best = -1e300;
        for (int j = 0; j < 4 * n; ++j) {
            double v = vmin + (vmax - vmin) * j / (4 * n - 1);
            best = std::max(best, p * v - lagrangian(v));
        }
        gap = std::max(gap, std::fabs(best - hamiltonian(p)));
    }
    return gap;
}

}  // namespace hjlab
