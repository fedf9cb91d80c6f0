#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hjlab/forcing.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/hj_viscous.hpp"
#include "hjlab/rng.hpp"

namespace hjlab {

// Polymer measures three ways: exact lattice Gibbs via transfer matrices,
// the controlled (drifted) Markov chain mirroring the stochastic-control
// construction, and an Euler-Maruyama path sampler. All share one lattice:
// N periodic sites, n_steps steps of the wrapped-Gaussian free kernel of
// variance 2 nu dt. Paths run in reverse time from the endpoint (T, x) down
// to time 0; kicks are collected at integer times with the arrival
// convention, and the terminal term is Phi_0 at the path's time-0 point.

struct LatticePathSpace {
    Grid grid;
    int n_steps = 0;
    double nu = 0.5;
    double dt = 1.0;
    std::vector<double> log_step_kernel;  // log k(r), circular, row-normalized

    static LatticePathSpace make(const Grid& grid, int n_steps, double nu, double dt);
    int steps_per_kick() const;  // 1/dt rounded; kicks live at integer times
};

/// E(gamma) pieces: step_potential[s] is the forcing collected at the node
/// occupied at physical step-time s+1 (arrival convention; empty row = no
/// kick there), phi0 is the terminal potential at time 0. Both enter the
/// Boltzmann weight divided by 2 nu:
///   E(gamma) = (phi0(y_0) - sum_s pot[s](y_{s+1})) / (2 nu).
struct EnergyFunctional {
    std::vector<std::vector<double>> step_potential;  // [n_steps][N]; empty rows = 0
    std::vector<double> phi0;                         // terminal potential at time 0
    double nu = 0.5;

    /// Energy of a lattice path given in physical order (y_0 at time 0,
    /// y_{n_steps} = endpoint).
    double energy(std::span<const int> path_nodes, const Grid& grid) const;
};

struct PathMeasure {
    std::vector<std::vector<double>> marginals;  // [time 0..n_steps][N], physical order
    std::vector<std::vector<double>> pair_marginals;  // optional, [step][N*N]
    double log_normalizer = 0.0;
    bool has_pairs = false;
};

/// Exact Gibbs marginals by forward/backward transfer sweeps in log domain.
PathMeasure gibbs_exact(const LatticePathSpace& space, const EnergyFunctional& energy,
                        int endpoint_node, bool want_pairs = false);

/// Drifted chain: free kernel reweighted by the Girsanov factor of the drift
/// -u (reverse time), row-renormalized. u_fields[j] is the velocity field at
/// physical step-time j, j = 0..n_steps.
PathMeasure controlled_chain(const LatticePathSpace& space,
                             const std::vector<VelocityField>& u_fields, int endpoint_node);

struct SampledPaths {
    std::vector<std::vector<double>> positions;  // [sample][time 0..n_steps], physical order
    std::vector<uint8_t> flagged;                // left the drift trust region
    int n_flagged = 0;
};

/// Euler-Maruyama in reverse time with linear interpolation of u in space.
SampledPaths sample_polymer_sde(const LatticePathSpace& space,
                                const std::vector<VelocityField>& u_fields, double endpoint_x,
                                int n_samples, uint64_t seed);

struct FreeEnergyReport {
    double average_energy = 0.0;  // I(p)
    double entropy = 0.0;         // h(p)
    double free_energy = 0.0;     // G(p) = I - h
    double minus_log_z = 0.0;     // reference -ln Z
};

/// Exhaustive free-energy functionals for an explicit density table p over
/// the path space (indexed like enumerate_paths). Path count must stay small.
FreeEnergyReport free_energy_report(std::span<const double> density,
                                    const LatticePathSpace& space,
                                    const EnergyFunctional& energy, int endpoint_node);

/// All lattice paths ending at endpoint_node; path count N^n_steps. Paths are
/// stored in physical order (path.back() = endpoint). Companion free-measure
/// log weights and energies, indexed like the density tables.
struct PathEnumeration {
    std::vector<std::vector<int>> paths;
    std::vector<double> log_free_weight;  // log of the free chain measure
    std::vector<double> energies;
};
PathEnumeration enumerate_paths(const LatticePathSpace& space, const EnergyFunctional& energy,
                                int endpoint_node);

/// Shared-lattice bundle: one forcing realization turned into the lattice
/// space, the energy functional, the hj_viscous partition trace, and the
/// velocity fields at every step time (what controlled_chain consumes).
struct PolymerInstance {
    LatticePathSpace space;
    EnergyFunctional energy;
    std::vector<VelocityField> u_fields;       // [0..n_steps]
    std::vector<PartitionField> z_trace;       // [0..n_steps]
    ViscousConfig viscous;
};
PolymerInstance make_polymer_instance(const PotentialField& forcing, const Grid& grid, double nu,
                                      double dt, int n_kicks,
                                      std::span<const double> phi0 = {});

struct LocalizationRow {
    double horizon_t = 0.0;
    double amplitude = 0.0;
    double max_unit_interval_mass = 0.0;
    double endpoint_variance = 0.0;
    double free_variance = 0.0;  // 2 nu T
};

/// Endpoint localization table over (T, amplitude) pairs; exact chain route.
std::vector<LocalizationRow> localization_scan(const PotentialField::Params& forcing,
                                               const Grid& grid, double nu,
                                               std::span<const double> horizons,
                                               std::span<const double> amplitudes);

/// Total-variation distance between two distributions on the same support.
double total_variation(std::span<const double> a, std::span<const double> b);

}  // namespace hjlab
