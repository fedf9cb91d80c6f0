#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hjlab/forcing.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/hj_inviscid.hpp"
#include "hjlab/stats.hpp"

namespace hjlab {

// Estimators for the quantitative structure: shape function and effective
// Hamiltonian, wandering/fluctuation exponents xi and chi, the diffusive
// constant sigma, shock-age tails, and the Lyapunov contraction. Every
// estimator carries a standard error from replica scatter; simulation
// drivers and pure fitting routines are kept separate so the fits can be
// calibrated on synthetic data with known ground truth.

struct ExponentEstimate {
    std::string name;
    double value = 0.0;
    double se = 0.0;
    double fit_lo = 0.0;  // abscissa range actually used by the fit
    double fit_hi = 0.0;
    double r2 = 0.0;
    int n_points = 0;
};

/// Contiguous log-log window maximizing R^2 among windows with >= min_points
/// points spanning >= min_span_ratio in x. Guards against silent cherry-picking
/// by reporting the chosen range.
ExponentEstimate scan_loglog_fit(std::span<const double> x, std::span<const double> y,
                                 size_t min_points, double min_span_ratio,
                                 const std::string& name);

// ---------------------------------------------------------------------------
// Shape function and effective Hamiltonian
// ---------------------------------------------------------------------------

struct ShapeFunctionEstimate {
    std::vector<double> slopes;
    std::vector<double> s_hat;
    std::vector<double> s_se;
    double nu = 0.0;
    double s0 = 0.0;         // fitted S(0)
    double curvature = 0.0;  // kappa in S(a) ~ s0 + kappa a^2/2
    double curvature_se = 0.0;
    double fit_r2 = 0.0;
};

struct ShapeParams {
    PotentialField::Params forcing;
    Grid grid;
    int T = 100;
    int replicas = 20;
    double nu = 0.0;  // 0 = inviscid action route, > 0 = -2 nu log Z route
    int workers = 1;
};

/// Point-to-point action (or log-partition) growth rate per slope:
/// A(a, T)/T averaged over replicas, with the quadratic fit of the result.
ShapeFunctionEstimate estimate_shape(const ShapeParams& par, const HamiltonianSpec& ham,
                                     std::span<const double> a_grid);

struct LegendreResult {
    std::vector<double> b_grid;
    std::vector<double> h_eff;
    std::vector<double> a_of_b;  // argmax map
    bool hull_adjusted = false;  // input was convexified beyond 3 SE somewhere
};

/// Discrete Legendre transform H_eff(b) = max_a [a b - S(a)] after convexifying
/// S by its lower hull. s_se (optional) feeds the 3-sigma hull flag.
LegendreResult legendre_transform(std::span<const double> a_grid, std::span<const double> s_values,
                                  std::span<const double> s_se, std::span<const double> b_grid);

// ---------------------------------------------------------------------------
// Scaling survey: one forced run family feeding xi and chi
// ---------------------------------------------------------------------------

struct ScalingSurveyParams {
    PotentialField::Params forcing;
    Grid grid;
    std::vector<int> t_list;  // ascending depths
    int replicas = 50;
    int endpoint_stride = 8;  // endpoints sampled every stride nodes
    int workers = 1;
};

struct ScalingSurvey {
    std::vector<int> t_list;
    // [t][replica] median |gamma(-T) - gamma(0)| over sampled endpoints.
    std::vector<std::vector<double>> median_disp;
    // [t][replica] point-to-line action Phi_T(0) (flat start).
    std::vector<std::vector<double>> action_at_origin;
    // [t][replica] dot-field density at depth T (crosses per unit length).
    std::vector<std::vector<double>> dot_density;
    double period = 0.0;
};

ScalingSurvey run_scaling_survey(const ScalingSurveyParams& par, const HamiltonianSpec& ham);

struct XiEstimate {
    ExponentEstimate displacement_route;
    ExponentEstimate density_route;  // value reported as +xi (   -slope of density)
    bool routes_consistent = false;  // within 2 joint SEs
};

XiEstimate estimate_xi(const ScalingSurvey& survey);

/// chi from Var(action) ~ T^{2 chi}: slope/2 of log variance vs log T.
ExponentEstimate estimate_chi(const ScalingSurvey& survey);

// ---------------------------------------------------------------------------
// Diffusive-increment constant sigma
// ---------------------------------------------------------------------------

struct SigmaEstimate {
    ExponentEstimate fit;  // value = sigma_hat
    double linear_r2 = 0.0;
    double ks_gaussian = 0.0;  // increment KS statistic at the largest window
};

/// Var(Phi(0, x + w) - Phi(0, x)) ~ sigma^2 w across windows; profiles are
/// replica rows of a pullback-converged Phi(0, .) on the given grid.
SigmaEstimate estimate_sigma(const std::vector<std::vector<double>>& phi_profiles,
                             const Grid& grid, std::span<const double> windows);

// ---------------------------------------------------------------------------
// Shock ages
// ---------------------------------------------------------------------------

struct AgeSurveyParams {
    PotentialField::Params forcing;
    Grid grid;
    int horizon = 2048;
    int burn_in = 256;
    int obs_stride = 16;       // steps between age snapshots
    double merge_radius = 0.0; // 0 = default 8h
    double jump_threshold_cells = 3.0;
    int replicas = 2;
    int workers = 1;
    bool censor_half_horizon = false;  // compact case: drop the topological shock
};

struct AgeSurvey {
    std::vector<double> ages;  // pooled stationary-age samples
    double birth_rate = 0.0;   // births per step after burn-in
    double death_rate = 0.0;   // net disappearances per step
    int horizon = 0;
};

AgeSurvey run_age_survey(const AgeSurveyParams& par, const HamiltonianSpec& ham);

struct AgeTailResult {
    ExponentEstimate tail;     // log-log histogram slope (negative for decay)
    double curvature_p = 1.0;  // quadratic-term significance (two-sided)
    bool power_law_rejected = false;  // curvature significant at 5%
    int n_tail_events = 0;
};

/// Log-binned histogram tail fit over an automated window scan; requires at
/// least 100 events beyond min_age. min_span_ratio controls the scanned
/// window (exponential tails never span a decade, so compact-case callers
/// lower it; the curvature test always runs on the full binned range).
AgeTailResult age_tail_fit(std::span<const double> ages, double min_age, int bins = 16,
                           double min_span_ratio = 4.0);

// ---------------------------------------------------------------------------
// Lyapunov contraction of minimiser pairs
// ---------------------------------------------------------------------------

struct LyapunovParams {
    PotentialField::Params forcing;
    Grid grid;
    int depth = 512;
    std::vector<double> separations;  // initial pair separations L
    int pairs_per_l = 16;
    int replicas = 4;
    int workers = 1;
};

struct LyapunovResult {
    ExponentEstimate lambda;          // contraction rate from the post-onset regime
    ExponentEstimate onset_exponent;  // T(L) ~ L^theta fit (expected ~3/2)
    int n_pairs = 0;
};

LyapunovResult estimate_lyapunov(const LyapunovParams& par, const HamiltonianSpec& ham);

}  // namespace hjlab
