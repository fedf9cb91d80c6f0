#pragma once

#include <cmath>
#include <cstdint>

#include "hjlab/errors.hpp"

namespace hjlab {

/// Uniform periodic grid: nodes x_i = i*h, i in [0, n), circumference n*h.
struct Grid {
    int n = 0;
    double h = 0.0;

    Grid() = default;
    Grid(int n_, double h_) : n(n_), h(h_) {
        if (n <= 0 || h <= 0.0) throw ConfigError("grid: need n > 0 and h > 0");
    }
    static Grid with_period(int n_, double period) { return Grid(n_, period / n_); }

    double period() const { return n * h; }
    double x(int i) const { return i * h; }

    int wrap(int64_t i) const {
        int64_t r = i % n;
        return static_cast<int>(r < 0 ? r + n : r);
    }
    double wrap_pos(double x) const {
        double p = period();
        double r = std::fmod(x, p);
        return r < 0 ? r + p : r;
    }
    /// Circle distance between two positions.
    double dist(double a, double b) const {
        double p = period();
        double d = std::fabs(wrap_pos(a) - wrap_pos(b));
        return std::min(d, p - d);
    }
    int nearest_node(double x) const { return wrap(static_cast<int64_t>(std::llround(x / h))); }

    bool same_as(const Grid& o) const { return n == o.n && std::fabs(h - o.h) <= 1e-12 * h; }
};

}  // namespace hjlab
