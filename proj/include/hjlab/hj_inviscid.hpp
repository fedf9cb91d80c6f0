#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hjlab/forcing.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

// Inviscid forced Hamilton-Jacobi solver: one-kick Hopf-Lax recursion
//   Phi_{n+1}(x) = min_y [ Phi_n(y) + dt L((x-y)/dt) ] - F_n(x),
// with monotone backpointers recorded per step. Phi(x) = b x + psi(x) with
// psi periodic; only psi is stored.

struct SolutionField {
    Grid grid;
    int64_t time_index = 0;
    double slope_b = 0.0;
    std::vector<double> psi;
    // Lifted argmin node per grid node: y*(x_i) = backptr[i] * h on the
    // universal cover (may lie outside [0, n)). Nondecreasing with
    // backptr[n-1] <= backptr[0] + n (degree-1 circle map lift).
    std::vector<int32_t> backptr;
    bool has_backptr = false;

    SolutionField() = default;
    SolutionField(const Grid& g, double b, int64_t t = 0)
        : grid(g), time_index(t), slope_b(b), psi(g.n, 0.0) {}

    double phi(int i) const { return slope_b * grid.x(i) + psi[i]; }
    /// Incoming minimiser velocity (x - y*)/dt; requires backpointers.
    double velocity(int i, double dt) const {
        return (grid.x(i) - static_cast<double>(backptr[i]) * grid.h) / dt;
    }
};

struct StepOptions {
    double dt = 1.0;
    // Post-step guard: argmin displacement from the drift center must stay
    // within half a period, else the wrap is ambiguous (dt too large).
    bool check_resolution = true;
};

/// One Lax-Oleinik step. `kick` is F_n sampled on state.grid (subtracted).
SolutionField lax_oleinik_step(const SolutionField& state, std::span<const double> kick,
                               const HamiltonianSpec& ham, const StepOptions& opt = {});

/// O(N^2) reference step over the same lifted-displacement kernel. Test oracle.
SolutionField lax_oleinik_step_dense(const SolutionField& state, std::span<const double> kick,
                                     const HamiltonianSpec& ham, const StepOptions& opt = {});

// ---------------------------------------------------------------------------
// Minimiser tracing
// ---------------------------------------------------------------------------

struct MinimiserPath {
    double endpoint_x = 0.0;
    int64_t endpoint_time = 0;
    std::vector<double> positions;  // lifted positions, newest first (index 0 = endpoint)
    double action = 0.0;            // Phi_end(x) - Phi_start(y0) on the lift
};

struct MinimiserTrace {
    MinimiserPath path;
    bool ambiguous = false;
    std::optional<MinimiserPath> secondary;  // populated when the endpoint ties
};

/// Chain stored backpointers from the last field down to the first.
/// `fields` are consecutive in time, fields[k] produced from fields[k-1];
/// fields[0] needs no backpointers. eps_tie flags near-degenerate endpoints.
MinimiserTrace trace_minimiser(std::span<const SolutionField> fields, double endpoint_x,
                               const HamiltonianSpec& ham, double dt = 1.0,
                               double eps_tie = 1e-9);

// ---------------------------------------------------------------------------
// Shocks
// ---------------------------------------------------------------------------

struct ShockRecord {
    double position = 0.0;
    int64_t birth_time = 0;
    int64_t current_time = 0;
    double left_u = 0.0;
    double right_u = 0.0;
    int64_t age() const { return current_time - birth_time; }
};

/// Backpointer jumps larger than jump_threshold_cells grid cells become shocks,
/// positioned at the midpoint of the bracketing cell.
std::vector<ShockRecord> detect_shocks(const SolutionField& state, double dt = 1.0,
                                       double jump_threshold_cells = 3.0);

/// Propagate birth times from prev to next (consecutive kick times). Each prev
/// shock feeds its nearest next shock within merge_radius; oldest birth wins.
std::vector<ShockRecord> track_shocks(const std::vector<ShockRecord>& prev,
                                      std::vector<ShockRecord> next, double merge_radius,
                                      const Grid& grid);

// ---------------------------------------------------------------------------
// Pullback (1F1S diagnostic)
// ---------------------------------------------------------------------------

struct PullbackResult {
    SolutionField final_a;
    SolutionField final_b;
    double grad_distance = 0.0;  // sup-norm over nodes of the velocity gap
};

/// Evolve two initial conditions (same slope b) from time -T to 0 under the
/// same forcing realization (kick_index = absolute arrival time). Returns the
/// sup distance between the two velocity fields at time 0.
PullbackResult pullback_solve(const PotentialField& field, const HamiltonianSpec& ham, int T,
                              const SolutionField& init_a, const SolutionField& init_b,
                              const StepOptions& opt = {});

}  // namespace hjlab
