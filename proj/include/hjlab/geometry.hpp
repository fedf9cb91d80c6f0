#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hjlab/grid.hpp"
#include "hjlab/hj_inviscid.hpp"

namespace hjlab {

// Dots (minimiser concentration points), crosses (separating shocks) and the
// connector for one time strip. Crosses live at the strip top (later time),
// dots at the bottom; interval j between crosses maps to dot (xi + j) mod n
// under the labeling convention: interval labels increase rightward with
// interval 0 containing the origin, dot 0 is the dot nearest the origin
// (ties toward the right).

struct StripConfig {
    double t_top = 0.0;
    double t_bottom = 0.0;
    double period = 0.0;
    std::vector<double> crosses;  // sorted, in [0, period)
    std::vector<double> dots;     // sorted, in [0, period)
    int xi = 0;

    int count() const { return static_cast<int>(crosses.size()); }
    void validate() const;

    /// Shift s of the sorted-order map: sorted interval k -> sorted dot
    /// (k + s) mod n. Derived from xi and the labeling convention.
    int sorted_shift() const;
    /// Rebuild xi from a sorted shift (inverse of sorted_shift()).
    static int xi_from_sorted_shift(const StripConfig& cfg, int shift);

    std::string to_json() const;
    static StripConfig from_json(const std::string& text);
};

/// Index (into the sorted array) of the cyclic interval containing position x:
/// points[k] <= x < points[k+1] with wrap; x below points[0] belongs to the
/// wrap interval n-1. Points on a boundary go to the interval on the right.
int interval_of(std::span<const double> sorted_points, double x, double period);

/// Index of the point nearest to x on the circle, ties toward the right.
int nearest_point(std::span<const double> sorted_points, double x, double period);

struct ExtractOptions {
    double cluster_tol = 0.0;  // 0 = default 4h
};

struct ExtractResult {
    StripConfig strip;
    bool resolution_warning = false;  // some cluster diameter exceeded the tol
    double max_cluster_diameter = 0.0;
};

/// Backtrace every grid endpoint at fields[top_idx] down to fields[bottom_idx]
/// through stored backpointers; cluster the arrival points into dots, put
/// crosses at basin boundaries, derive the connector. Throws NumericError if
/// no basin boundary separates anything (no concentration without forcing).
ExtractResult extract_strip(std::span<const SolutionField> fields, size_t top_idx,
                            size_t bottom_idx, const ExtractOptions& opt = {});

struct PointFieldStats {
    double density = 0.0;
    std::vector<double> gaps;        // cyclic nearest-neighbor gaps (cross field)
    std::vector<double> gap_bin_lo;  // histogram of the gaps
    std::vector<int> gap_count;
    std::vector<double> corr_r;      // two-point correlation estimate g(r)
    std::vector<double> corr_g;
};

PointFieldStats field_stats(const StripConfig& cfg, int gap_bins = 24, int corr_bins = 32);

/// Multiply positions by the cross-field density so the result has unit cross
/// density; the connector is unchanged.
StripConfig rescale_to_unit_density(const StripConfig& cfg);

}  // namespace hjlab
