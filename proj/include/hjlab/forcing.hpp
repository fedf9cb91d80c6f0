#pragma once

#include <cstdint>
#include <vector>

#include "hjlab/errors.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/rng.hpp"

namespace hjlab {

enum class ForcingMode { fourier, bumps };

/// Kicked random potential F_n(x): one independent P-periodic realization per
/// kick index, reproducible from (master_seed, kick_index, replica) substreams.
///
/// Two synthesis modes:
///  - fourier: random trigonometric polynomial, n_modes independent Gaussian
///    coefficient pairs with a flat spectrum, pointwise variance amplitude^2.
///    Shear-invariant in distribution.
///  - bumps: Gaussian bumps of fixed width at Poisson centers (local
///    correlation), mean bump_count per period.
class PotentialField {
  public:
    struct Params {
        uint64_t master_seed = 1;
        double period = 1.0;
        ForcingMode mode = ForcingMode::fourier;
        int n_modes = 8;
        double bump_count = 16.0;  // Poisson mean per period
        double bump_width = 0.05;
        double amplitude = 1.0;
        bool shear_mode = true;  // drawn from a shear-invariant ensemble
        int replica = 0;
        double dt = 1.0;  // kick spacing, used by the shear map x + a*n*dt
    };

    explicit PotentialField(const Params& p);

    const Params& params() const { return p_; }
    double period() const { return p_.period; }
    double shear() const { return shear_; }

    /// F_n at the grid nodes, grid-mean subtracted. Pure in (seed, kick, grid).
    std::vector<double> sample_kick(int64_t kick_index, const Grid& grid) const;

    /// dF_n/dx at the grid nodes, mode-wise/analytic differentiation.
    std::vector<double> sample_gradient(int64_t kick_index, const Grid& grid) const;

    /// Field evaluating F_n(x + a*n*dt); distributionally identical ensemble.
    PotentialField make_shear_pair(double a) const;

  private:
    void check_grid(const Grid& grid) const;
    uint64_t kick_key(int64_t kick_index) const;

    struct FourierCoeffs {
        std::vector<double> a, b;  // cos / sin amplitudes per mode 1..K
    };
    FourierCoeffs draw_fourier(int64_t kick_index) const;

    struct BumpSet {
        std::vector<double> center;
    };
    BumpSet draw_bumps(int64_t kick_index) const;

    Params p_;
    double shear_ = 0.0;
};

}  // namespace hjlab
