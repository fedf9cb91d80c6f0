#include "hjlab/hj_viscous.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "hjlab/errors.hpp"
#include "hjlab/fft.hpp"
#include "hjlab/stats.hpp"

namespace hjlab {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;

void check_field(const PartitionField& z, const ViscousConfig& cfg) {
    if (!z.grid.same_as(cfg.grid)) throw ConfigError("viscous: field grid does not match config");
    for (double v : z.log_z)
        if (!std::isfinite(v)) throw NumericError("viscous: non-finite log_z entry");
}

void renormalize(PartitionField& z) {
    double m = *std::max_element(z.log_z.begin(), z.log_z.end());
    for (double& v : z.log_z) v -= m;
    z.gauge += m;
}

}  // namespace

void ViscousConfig::validate() const {
    if (nu <= 0.0) throw ConfigError("viscous: nu must be positive");
    if (dt <= 0.0) throw ConfigError("viscous: dt must be positive");
    if (grid.n <= 0) throw ConfigError("viscous: grid not set");
    if (kernel_mode == HeatKernelMode::spectral && !is_pow2(static_cast<size_t>(grid.n)))
        throw ConfigError("viscous: spectral kernel requires a power-of-two grid");
}

std::vector<double> lattice_log_kernel(const Grid& grid, double nu, double dt, double drift) {
    const int n = grid.n;
    const double p = grid.period();
    const double var = 2.0 * nu * dt;
    // Wrapped Gaussian: sum over periodic images, then row-normalize. The
    // number of images covers 45 standard deviations plus the drift.
    int images = static_cast<int>(std::ceil((45.0 * std::sqrt(var) + std::fabs(drift)) / p)) + 1;
    std::vector<double> logk(n);
    std::vector<double> terms;
    for (int r = 0; r < n; ++r) {
        terms.clear();
        for (int m = -images; m <= images; ++m) {
            double d = r * grid.h + m * p - drift;
            terms.push_back(-d * d / (2.0 * var));
        }
        logk[r] = logsumexp(terms);
    }
    double norm = logsumexp(logk);
    for (double& v : logk) v -= norm;
    return logk;
}

PartitionField partition_from_phi(std::span<const double> phi0, const ViscousConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(phi0.size()) != cfg.grid.n)
        throw ConfigError("viscous: phi0 size does not match the grid");
    PartitionField z(cfg.grid, 0);
    for (int i = 0; i < cfg.grid.n; ++i) z.log_z[i] = -phi0[i] / (2.0 * cfg.nu);
    renormalize(z);
    return z;
}

PartitionField heat_step(const PartitionField& z, const ViscousConfig& cfg) {
    cfg.validate();
    check_field(z, cfg);
    const int n = cfg.grid.n;
    PartitionField out(cfg.grid, z.time_index + 1);
    out.gauge = z.gauge;

    if (cfg.kernel_mode == HeatKernelMode::spectral) {
        // Multiplier exp(-nu dt k^2) on the centered part; drift enters as a
        // phase shift. Moderate dynamic range only: the FFT works on exp().
        double m = *std::max_element(z.log_z.begin(), z.log_z.end());
        std::vector<std::complex<double>> w(n);
        for (int i = 0; i < n; ++i) w[i] = std::exp(z.log_z[i] - m);
        fft_pow2(w, false);
        double drift = cfg.velocity_drift();
        for (int k = 0; k < n; ++k) {
            int f = k <= n / 2 ? k : k - n;
            double kappa = two_pi * f / cfg.grid.period();
            std::complex<double> mult =
                std::exp(std::complex<double>(-cfg.nu * cfg.dt * kappa * kappa, -kappa * drift));
            w[k] *= mult;
        }
        fft_pow2(w, true);
        for (int i = 0; i < n; ++i) {
            double v = w[i].real();
            if (!(v > 0.0))
                throw NumericError(
                    "heat_step: spectral convolution underflowed (dynamic range too large; "
                    "use the lattice kernel)");
            out.log_z[i] = std::log(v) + m;
        }
        renormalize(out);
        return out;
    }

    // Lattice kernel: windowed per-node log-sum-exp convolution. The window is
    // wide enough that dropped terms are at least e^-40 below the kept maximum
    // even when log_z spans its full observed range.
    std::vector<double> logk = lattice_log_kernel(cfg.grid, cfg.nu, cfg.dt, cfg.velocity_drift());
    double lo = *std::min_element(z.log_z.begin(), z.log_z.end());
    double hi = *std::max_element(z.log_z.begin(), z.log_z.end());
    double range = hi - lo;
    double sigma = std::sqrt(2.0 * cfg.nu * cfg.dt);
    double width = sigma * std::max(45.0, std::sqrt(2.0 * (range + 40.0)));
    width += std::fabs(cfg.velocity_drift());
    int w = static_cast<int>(std::ceil(width / cfg.grid.h));
    std::vector<double> terms;
    int drift_nodes = static_cast<int>(std::llround(cfg.velocity_drift() / cfg.grid.h));
    for (int i = 0; i < n; ++i) {
        terms.clear();
        if (2 * w + 1 >= n) {
            for (int j = 0; j < n; ++j)
                terms.push_back(logk[cfg.grid.wrap(i - j)] + z.log_z[j]);
        } else {
            for (int d = -w; d <= w; ++d) {
                int j = cfg.grid.wrap(static_cast<int64_t>(i) - drift_nodes - d);
                terms.push_back(logk[cfg.grid.wrap(static_cast<int64_t>(i) - j)] + z.log_z[j]);
            }
        }
        out.log_z[i] = logsumexp(terms);
    }
    renormalize(out);
    return out;
}

PartitionField heat_step_dense(const PartitionField& z, const ViscousConfig& cfg) {
    cfg.validate();
    check_field(z, cfg);
    const int n = cfg.grid.n;
    std::vector<double> logk = lattice_log_kernel(cfg.grid, cfg.nu, cfg.dt, cfg.velocity_drift());
    PartitionField out(cfg.grid, z.time_index + 1);
    out.gauge = z.gauge;
    std::vector<double> terms(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) terms[j] = logk[cfg.grid.wrap(i - j)] + z.log_z[j];
        out.log_z[i] = logsumexp(terms);
    }
    renormalize(out);
    return out;
}

PartitionField kick_step(const PartitionField& z, std::span<const double> kick,
                         const ViscousConfig& cfg) {
    cfg.validate();
    check_field(z, cfg);
    if (static_cast<int>(kick.size()) != cfg.grid.n)
        throw ConfigError("kick_step: kick array does not match the grid");
    PartitionField out = z;
    for (int i = 0; i < cfg.grid.n; ++i) out.log_z[i] += kick[i] / (2.0 * cfg.nu);
    renormalize(out);
    return out;
}

VelocityField velocity_from_z(const PartitionField& z, const ViscousConfig& cfg) {
    cfg.validate();
    check_field(z, cfg);
    const int n = cfg.grid.n;
    VelocityField vf;
    vf.time_index = z.time_index;
    vf.grid = cfg.grid;
    vf.u.resize(n);
    if (cfg.gradient == GradientMethod::spectral) {
        if (!is_pow2(static_cast<size_t>(n)))
            throw ConfigError("velocity_from_z: spectral gradient requires power-of-two grid");
        std::vector<std::complex<double>> w(n);
        for (int i = 0; i < n; ++i) w[i] = z.log_z[i];
        fft_pow2(w, false);
        for (int k = 0; k < n; ++k) {
            int f = k <= n / 2 ? k : k - n;
            if (2 * k == n) f = 0;  // drop the unpaired Nyquist mode
            double kappa = two_pi * f / cfg.grid.period();
            w[k] *= std::complex<double>(0.0, kappa);
        }
        fft_pow2(w, true);
        for (int i = 0; i < n; ++i) vf.u[i] = cfg.slope_b - 2.0 * cfg.nu * w[i].real();
    } else {
        for (int i = 0; i < n; ++i) {
            double dlog = z.log_z[(i + 1) % n] - z.log_z[(i - 1 + n) % n];
            vf.u[i] = cfg.slope_b - 2.0 * cfg.nu * dlog / (2.0 * cfg.grid.h);
        }
    }
    return vf;
}

}  // namespace hjlab
