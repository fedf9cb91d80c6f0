#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hjlab/errors.hpp"

namespace hjlab {

// Renormalisation map on gridded translation-invariant surrogate fields:
//   B(x,y)   = min_z [A(x,z) + A'(z,y) + (x-z)^2 + (z-y)^2] - (x-y)^2/2
//   R(A)(x,y)= (B(mu x, mu y) - C)/delta,   mu = sqrt(2 delta),
// with C, delta fitted so the first two moments of R(A)(0,0) hit the targets.
// z runs over the half-step refinement of the grid (sheets linearly
// interpolated there), which makes B == 0 exact for zero fields.

/// Square grid over [-extent, extent]^2 with 2*half+1 nodes per axis.
struct SheetGrid {
    int half = 16;        // nodes per side = 2*half + 1
    double extent = 2.0;  // coordinate of the outermost node

    int side() const { return 2 * half + 1; }
    double spacing() const { return extent / half; }
    double coord(int i) const { return (i - half) * spacing(); }
    size_t cells() const { return static_cast<size_t>(side()) * side(); }
};

/// One realization A(x, y) on a SheetGrid, row-major [x index][y index].
struct SheetField {
    SheetGrid grid;
    std::vector<double> values;
    uint64_t seed = 0;

    double at(int ix, int iy) const { return values[static_cast<size_t>(ix) * grid.side() + iy]; }
    double& at(int ix, int iy) { return values[static_cast<size_t>(ix) * grid.side() + iy]; }
    /// Linear interpolation along x at half-step index (ix2 in half-steps).
    double at_halfx(int ix2, int iy) const {
        if (ix2 % 2 == 0) return at(ix2 / 2, iy);
        return 0.5 * (at(ix2 / 2, iy) + at(ix2 / 2 + 1, iy));
    }
    double at_halfy(int ix, int iy2) const {
        if (iy2 % 2 == 0) return at(ix, iy2 / 2);
        return 0.5 * (at(ix, iy2 / 2) + at(ix, iy2 / 2 + 1));
    }
    /// Bilinear value at half-step indices along both axes.
    double at_half2(int ix2, int iy2) const {
        if (ix2 % 2 == 0) return at_halfy(ix2 / 2, iy2);
        return 0.5 * (at_halfy(ix2 / 2, iy2) + at_halfy(ix2 / 2 + 1, iy2));
    }
};

struct SurrogateParams {
    double variance = 1.0;
    double corr_length = 1.0;  // squared-exponential covariance scale
    int n_features = 64;       // random-feature count (Gaussian by CLT)
};

struct StationaryFieldEnsemble {
    SheetGrid grid;
    std::vector<SheetField> fields;
    double target_mean = 0.0;     // m*
    double target_variance = 1.0; // v*
    SurrogateParams generator;
};

/// Draw n independent stationary surrogate realizations (random-feature
/// construction: sums of random-phase plane waves, squared-exponential
/// covariance, jointly stationary in (x, y)).
StationaryFieldEnsemble make_surrogate_ensemble(uint64_t master_seed, int n_realizations,
                                                const SheetGrid& grid, const SurrogateParams& par,
                                                double target_mean = 0.0,
                                                double target_variance = 1.0);

struct GlueResult {
    // B on the margin-shrunk window (same spacing as the input grid); z is
    // minimized over the full input range, so interior argmins have headroom.
    SheetField b;
    std::vector<uint8_t> mask;  // 1 = argmin hit the z boundary, value unusable
    double masked_fraction = 0.0;
};

/// Min-glue two independent realizations. The output window drops
/// margin_fraction of the extent on each side; throws NumericError when more
/// than max_masked_fraction of the remaining (x, y) nodes minimize on the z
/// boundary.
GlueResult glue_min(const SheetField& a, const SheetField& a_prime,
                    double max_masked_fraction = 0.05, double margin_fraction = 0.3);

struct RenormConstants {
    double c = 0.0;
    double delta = 1.0;
    double mu = 1.4142135623730951;  // sqrt(2 delta), exact by construction
};

/// Moment matching: delta = sqrt(Var(B00)/v*), C = mean(B00) - delta * m*.
RenormConstants fit_constants(std::span<const double> b00_samples, double target_mean,
                              double target_variance);

struct ApplyResult {
    StationaryFieldEnsemble ensemble;  // R(A) realizations (pairs consumed)
    RenormConstants constants;
    double masked_fraction = 0.0;
};

/// One application of R to the ensemble: glue disjoint pairs, fit constants
/// from the B(0,0) samples, evaluate (B(mu x, mu y) - C)/delta on a shrunken
/// grid by bicubic interpolation.
ApplyResult apply_renormalisation(const StationaryFieldEnsemble& input);

/// Ensemble stationarity diagnostic: max drift of the per-node mean (and
/// variance) across translations, relative to the pooled values.
struct StationarityDrift {
    double mean_drift = 0.0;
    double variance_drift = 0.0;
};
StationarityDrift stationarity_drift(const StationaryFieldEnsemble& e);

/// Catmull-Rom bicubic interpolation on a SheetField (clamped at the borders).
double interpolate_bicubic(const SheetField& f, double x, double y);

}  // namespace hjlab
