#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hjlab/errors.hpp"

namespace hjlab {

/// Convex Lagrangian/Hamiltonian pair (p, v dual variables).
/// Quadratic closed form is the workhorse; general convex pairs are supplied
/// as callables or built from a tabulation.
struct HamiltonianSpec {
    std::function<double(double)> lagrangian;  // L(v)
    std::function<double(double)> hamiltonian; // H(p) = sup_v (p v - L(v))
    std::function<double(double)> velocity;    // grad H(p) = argmax_v
    bool quadratic = false;

    static HamiltonianSpec make_quadratic() {
        HamiltonianSpec h;
        h.lagrangian = [](double v) { return 0.5 * v * v; };
        h.hamiltonian = [](double p) { return 0.5 * p * p; };
        h.velocity = [](double p) { return p; };
        h.quadratic = true;
        return h;
    }

    /// L(v) = |v|^q / q with q > 1; H(p) = |p|^r / r, 1/q + 1/r = 1.
    static HamiltonianSpec make_power(double q) {
        if (q <= 1.0) throw ConfigError("hamiltonian: power exponent must be > 1");
        double r = q / (q - 1.0);
        HamiltonianSpec h;
        h.lagrangian = [q](double v) { return std::pow(std::fabs(v), q) / q; };
        h.hamiltonian = [r](double p) { return std::pow(std::fabs(p), r) / r; };
        h.velocity = [r](double p) {
            return (p >= 0 ? 1.0 : -1.0) * std::pow(std::fabs(p), r - 1.0);
        };
        h.quadratic = (q == 2.0);
        return h;
    }

    /// Piecewise-linear interpolated Lagrangian from a tabulation. Throws on a
    /// non-convex table. H and grad H come from the discrete Legendre transform.
    static HamiltonianSpec from_table(std::vector<double> v, std::vector<double> lv);

    /// Spot-check convexity and superlinearity of L on [vmin, vmax].
    void validate(double vmin, double vmax, int n = 64) const;

    /// Spot-check H(p) = sup_v (p v - L(v)) on tabulated v against H callable.
    double duality_gap(double pmin, double pmax, double vmin, double vmax, int n = 128) const;
};

}  // namespace hjlab
