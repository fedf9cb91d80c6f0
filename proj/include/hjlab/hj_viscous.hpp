#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hjlab/grid.hpp"

namespace hjlab {

// Viscous solver via Hopf-Cole: Phi = -2 nu ln Z, with the heat semigroup
// between kicks and a multiplicative kick factor exp(F_n/(2 nu)). Operator
// splitting is exact for kicked forcing.

enum class HeatKernelMode {
    // Circular convolution with the grid-sampled wrapped Gaussian of variance
    // 2 nu dt, row-normalized; identical to polymer's lattice step kernel.
    lattice,
    // Exact heat multiplier exp(-nu dt k^2) in Fourier space (power-of-two grids).
    spectral,
};

enum class GradientMethod { spectral, centered };

struct ViscousConfig {
    double nu = 0.5;
    Grid grid;
    double dt = 1.0;
    HeatKernelMode kernel_mode = HeatKernelMode::lattice;
    GradientMethod gradient = GradientMethod::centered;
    double slope_b = 0.0;  // Z = exp(-(b x + psi)/(2 nu)); periodic part stored

    void validate() const;
    /// Mean kernel displacement per step for the slope-b tilt (quadratic case).
    double velocity_drift() const { return slope_b * dt; }
    /// Resolution adequacy: heat-kernel bandwidth sqrt(2 nu dt) >= 2h.
    bool bandwidth_adequate() const { return std::sqrt(2.0 * nu * dt) >= 2.0 * grid.h; }
    std::string kernel_mode_name() const {
        return kernel_mode == HeatKernelMode::lattice ? "lattice" : "spectral";
    }
    std::string gradient_name() const {
        return gradient == GradientMethod::spectral ? "spectral" : "centered";
    }
};

struct PartitionField {
    int64_t time_index = 0;
    std::vector<double> log_z;  // periodic part, gauge-tracked
    double gauge = 0.0;         // total log Z = log_z + gauge (+ slope lift)
    Grid grid;

    PartitionField() = default;
    PartitionField(const Grid& g, int64_t t = 0) : time_index(t), log_z(g.n, 0.0), grid(g) {}

    /// Full log-partition value at node i (gauge restored).
    double total_log_z(int i) const { return log_z[i] + gauge; }
    /// Phi = -2 nu ln Z.
    double phi(int i, double nu, double slope_b = 0.0) const {
        return slope_b * grid.x(i) - 2.0 * nu * total_log_z(i);
    }
};

struct VelocityField {
    int64_t time_index = 0;
    std::vector<double> u;
    Grid grid;
};

/// Start field from an initial potential Phi_0: log Z = -Phi_0/(2 nu).
PartitionField partition_from_phi(std::span<const double> phi0, const ViscousConfig& cfg);

/// Free flight: convolution with the periodic heat kernel of variance 2 nu dt.
/// Log-domain stabilized; the additive gauge constant is tracked exactly.
PartitionField heat_step(const PartitionField& z, const ViscousConfig& cfg);

/// Dense O(N^2) reference for the lattice kernel. Test oracle.
PartitionField heat_step_dense(const PartitionField& z, const ViscousConfig& cfg);

/// Kick: log Z += F_n/(2 nu), pointwise; gauge renormalized (max -> 0).
PartitionField kick_step(const PartitionField& z, std::span<const double> kick,
                         const ViscousConfig& cfg);

/// u = grad Phi = -2 nu grad log Z (+ slope b), quadratic Hamiltonian.
VelocityField velocity_from_z(const PartitionField& z, const ViscousConfig& cfg);

/// Log of the row-normalized wrapped-Gaussian step kernel over displacements
/// r = 0..n-1 (circular). Shared with the polymer lattice.
std::vector<double> lattice_log_kernel(const Grid& grid, double nu, double dt,
                                       double drift = 0.0);

}  // namespace hjlab
