#include "hjlab/forcing.hpp"

#include <cmath>

namespace hjlab {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;

double grid_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}
}  // namespace

PotentialField::PotentialField(const Params& p) : p_(p) {
    if (p_.period <= 0.0) throw ConfigError("forcing: period must be positive");
    if (p_.mode == ForcingMode::fourier && p_.n_modes < 1)
        throw ConfigError("forcing: n_modes must be >= 1");
    if (p_.mode == ForcingMode::bumps) {
        if (p_.bump_width <= 0.0) throw ConfigError("forcing: bump_width must be positive");
        if (p_.bump_width * 8.0 > p_.period)
            throw ConfigError("forcing: bump_width too large for the period");
    }
    if (p_.amplitude < 0.0) throw ConfigError("forcing: amplitude must be >= 0");
}

void PotentialField::check_grid(const Grid& grid) const {
    if (std::fabs(grid.period() - p_.period) > 1e-9 * p_.period)
        throw ConfigError("forcing: grid period does not match the field period");
}

uint64_t PotentialField::kick_key(int64_t kick_index) const {
    uint64_t k = substream(p_.master_seed, 0x466f726365ULL);  // module tag
    k = substream(k, zigzag(kick_index));
    k = substream(k, static_cast<uint64_t>(p_.replica));
    return k;
}

PotentialField::FourierCoeffs PotentialField::draw_fourier(int64_t kick_index) const {
    Rng rng(kick_key(kick_index));
    FourierCoeffs c;
    c.a.resize(p_.n_modes);
    c.b.resize(p_.n_modes);
    // Flat spectrum: Var F(x) = amplitude^2. Draw order is part of the contract:
    // (a_k, b_k) pairs for k = 1..n_modes.
    double sigma = p_.amplitude / std::sqrt(static_cast<double>(p_.n_modes));
    for (int k = 0; k < p_.n_modes; ++k) {
        c.a[k] = sigma * rng.next_normal();
        c.b[k] = sigma * rng.next_normal();
    }
    return c;
}

PotentialField::BumpSet PotentialField::draw_bumps(int64_t kick_index) const {
    Rng rng(kick_key(kick_index));
    BumpSet s;
    int count = rng.next_poisson(p_.bump_count);
    s.center.resize(count);
    for (int i = 0; i < count; ++i) s.center[i] = rng.next_uniform(0.0, p_.period);
    return s;
}

std::vector<double> PotentialField::sample_kick(int64_t kick_index, const Grid& grid) const {
    check_grid(grid);
    std::vector<double> f(grid.n, 0.0);
    if (p_.amplitude == 0.0) return f;

    double shift = shear_ * static_cast<double>(kick_index) * p_.dt;

    if (p_.mode == ForcingMode::fourier) {
        FourierCoeffs c = draw_fourier(kick_index);
        if (shift == 0.0) {
            // cos(2*pi*k*i/n) table; index (k*i) mod n makes the sum exact and cheap.
            std::vector<double> ct(grid.n), st(grid.n);
            for (int m = 0; m < grid.n; ++m) {
                double a = two_pi * m / grid.n;
                ct[m] = std::cos(a);
                st[m] = std::sin(a);
            }
            for (int k = 1; k <= p_.n_modes; ++k) {
                double ak = c.a[k - 1], bk = c.b[k - 1];
                for (int i = 0; i < grid.n; ++i) {
                    int m = static_cast<int>((static_cast<int64_t>(k) * i) % grid.n);
                    f[i] += ak * ct[m] + bk * st[m];
                }
            }
        } else {
            double w = two_pi / p_.period;
            for (int i = 0; i < grid.n; ++i) {
                double x = grid.x(i) + shift;
                double acc = 0.0;
                for (int k = 1; k <= p_.n_modes; ++k)
                    acc += c.a[k - 1] * std::cos(w * k * x) + c.b[k - 1] * std::sin(w * k * x);
                f[i] = acc;
            }
        }
    } else {
        BumpSet s = draw_bumps(kick_index);
        double inv2w2 = 1.0 / (2.0 * p_.bump_width * p_.bump_width);
        for (int i = 0; i < grid.n; ++i) {
            double x = grid.x(i);
            double acc = 0.0;
            for (double cpos : s.center) {
                // Minimal-image distance; bumps are narrow relative to the period.
                double d = x - cpos;
                d -= p_.period * std::round(d / p_.period);
                acc += std::exp(-d * d * inv2w2);
            }
            f[i] = p_.amplitude * acc;
        }
    }

    double m = grid_mean(f);
    for (double& v : f) v -= m;
    return f;
}

std::vector<double> PotentialField::sample_gradient(int64_t kick_index, const Grid& grid) const {
    check_grid(grid);
    std::vector<double> g(grid.n, 0.0);
    if (p_.amplitude == 0.0) return g;

    double shift = shear_ * static_cast<double>(kick_index) * p_.dt;

    if (p_.mode == ForcingMode::fourier) {
        FourierCoeffs c = draw_fourier(kick_index);
        double w = two_pi / p_.period;
        for (int i = 0; i < grid.n; ++i) {
            double x = grid.x(i) + shift;
            double acc = 0.0;
            for (int k = 1; k <= p_.n_modes; ++k) {
                double wk = w * k;
                acc += wk * (-c.a[k - 1] * std::sin(wk * x) + c.b[k - 1] * std::cos(wk * x));
            }
            g[i] = acc;
        }
    } else {
        BumpSet s = draw_bumps(kick_index);
        double w2 = p_.bump_width * p_.bump_width;
        double inv2w2 = 1.0 / (2.0 * w2);
        for (int i = 0; i < grid.n; ++i) {
            double x = grid.x(i);
            double acc = 0.0;
            for (double cpos : s.center) {
                double d = x - cpos;
                d -= p_.period * std::round(d / p_.period);
                acc += -(d / w2) * std::exp(-d * d * inv2w2);
            }
            g[i] = p_.amplitude * acc;
        }
    }
    return g;
}

PotentialField PotentialField::make_shear_pair(double a) const {
    if (p_.mode != ForcingMode::fourier)
        throw ConfigError("make_shear_pair: bump mode has no periodic shear wrap; use fourier");
    PotentialField out(p_);
    out.shear_ = shear_ + a;
    return out;
}

}  // namespace hjlab
