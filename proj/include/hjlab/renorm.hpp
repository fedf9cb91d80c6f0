#pragma once

#include <utility>
#include <vector>

#include "hjlab/geometry.hpp"

namespace hjlab {

// Geometric renormalisation on strip pairs: compose the strip [t0, t1] with
// [t1, t2], eliminating crosses and dots per the interlacing rules, and
// recompute the connector. All point data is positional; surviving points are
// never moved.

struct StripStack {
    std::vector<StripConfig> strips;
};

enum class SweepMode { doubling, incremental };

/// Compose two adjacent strips. upper.dots and lower.crosses describe the same
/// time level; periods must agree. Rescaling is NOT applied here.
StripConfig renorm_pair(const StripConfig& upper, const StripConfig& lower);

struct SweepResult {
    StripStack stack;
    // (n, cross density in raw units) after each pair application; n counts
    // unit strips absorbed so far.
    std::vector<std::pair<int, double>> density_by_n;
};

/// doubling: compose adjacent pairs (even count required), then rescale each
/// output to unit density. incremental: left-fold the whole stack into one
/// accumulated strip, recording the raw density after each addition;
/// rescaling is applied once at the end.
SweepResult renorm_sweep(const StripStack& stack, SweepMode mode);

struct AlphaEstimate {
    double alpha = 0.0;
    double stderr_alpha = 0.0;
    double r2 = 0.0;
};

/// Least-squares slope of log density vs log n: density ~ n^{-alpha}.
AlphaEstimate estimate_alpha(const std::vector<std::pair<int, double>>& densities);

}  // namespace hjlab
