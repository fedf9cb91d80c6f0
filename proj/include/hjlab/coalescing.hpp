#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hjlab/geometry.hpp"

namespace hjlab {

// Coalescing simple random walks on the circle, diffusively calibrated
// (dt = dx^2, unit variance per unit time): the Donsker proxy for coalescing
// Brownian motion. Walkers start on every lattice site; walkers that meet or
// cross within a step merge (midpoint), labels union toward the leftmost
// initial site, so coalescence events are never missed.

struct WalkerSnapshot {
    double time = 0.0;
    std::vector<double> positions;   // sorted survivor positions in [0, period)
    std::vector<int> basin_first;    // first initial-site index of each basin
    std::vector<int> basin_last;     // last (inclusive, cyclic arc)
};

struct CoalescingRun {
    double dx = 0.0;
    double dt = 0.0;
    double period = 0.0;
    double horizon_t = 0.0;
    int n_sites = 0;
    std::map<double, WalkerSnapshot> snapshots;
};

CoalescingRun run_coalescing(uint64_t seed, double dx, double horizon_t, double period,
                             std::span<const double> snapshot_times);

/// Displacement of one free walk after time t (calibration: variance ~ t).
double single_walk_displacement(uint64_t seed, double dx, double t);

/// Whether two independent walkers started `gap` apart meet or cross by time t
/// (the two-walker oracle behind kernel_G).
bool two_walkers_meet(uint64_t seed, double dx, double t, double gap);

/// Strip from a snapshot: dots = survivor positions at time t, crosses = basin
/// boundaries at time 0 (midpoints between adjacent initial sites of different
/// basins), connector from the basin containing the origin. Rescaled to unit
/// cross density; pass common_density > 0 to rescale by a shared ensemble
/// density instead (stacked strips must agree on the period).
StripConfig strip_from_coalescence(const CoalescingRun& run, double t,
                                   double common_density = 0.0);

/// G(x) = 1 - (4 pi t)^{-1/2} int_{-x}^{x} exp(-y^2/(4t)) dy = erfc(x/(2 sqrt t)):
/// the probability that two independent unit Brownian motions started x apart
/// meet by time t.
double kernel_G(double x, double t);

/// Antisymmetric matrix with exact a(i,i) = 0, a(j,i) = -a(i,j).
class SkewMatrix {
  public:
    explicit SkewMatrix(int dim);
    int dim() const { return dim_; }
    double at(int i, int j) const;
    void set(int i, int j, double value);  // i < j sets a(i,j); mirror implied

  private:
    int dim_;
    std::vector<double> upper_;  // row-major strict upper triangle
};

/// Pfaffian by recursive expansion along the first row (dim <= 12).
double pfaffian(const SkewMatrix& m);

struct EmptyIntervalResult {
    double mc_probability = 0.0;
    double mc_se = 0.0;
    double pfaffian_prediction = 0.0;
    int replicas = 0;
};

/// Monte Carlo probability that all given disjoint intervals carry no cross at
/// time 0 (coalescence horizon t), against the Pfaffian of G(x_j - x_i).
EmptyIntervalResult empty_interval_test(uint64_t seed, double dx, double t, double period,
                                        std::span<const std::pair<double, double>> intervals,
                                        int replicas, int workers = 1);

}  // namespace hjlab
