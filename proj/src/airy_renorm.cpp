#include "hjlab/airy_renorm.hpp"

#include <algorithm>
#include <cmath>

#include "hjlab/rng.hpp"
#include "hjlab/stats.hpp"

namespace hjlab {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;

double catmull_rom(double pm1, double p0, double p1, double p2, double t) {
    return 0.5 * ((2.0 * p0) + (-pm1 + p1) * t + (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2) * t * t +
                  (-pm1 + 3.0 * p0 - 3.0 * p1 + p2) * t * t * t);
}
}  // namespace

StationaryFieldEnsemble make_surrogate_ensemble(uint64_t master_seed, int n_realizations,
                                                const SheetGrid& grid, const SurrogateParams& par,
                                                double target_mean, double target_variance) {
    if (n_realizations < 2) throw ConfigError("surrogate ensemble: need >= 2 realizations");
    if (par.n_features < 1 || par.corr_length <= 0.0 || par.variance < 0.0)
        throw ConfigError("surrogate ensemble: bad generator parameters");
    StationaryFieldEnsemble e;
    e.grid = grid;
    e.target_mean = target_mean;
    e.target_variance = target_variance;
    e.generator = par;
    e.fields.reserve(n_realizations);
    const int s = grid.side();
    double amp = std::sqrt(2.0 * par.variance / par.n_features);
    for (int r = 0; r < n_realizations; ++r) {
        SheetField f;
        f.grid = grid;
        f.seed = substream(master_seed, static_cast<uint64_t>(r));
        f.values.assign(grid.cells(), 0.0);
        Rng rng(f.seed);
        // Random plane waves: wavevectors N(0, 1/l^2), phases uniform. The sum
        // is stationary in (x, y) with squared-exponential covariance.
        for (int j = 0; j < par.n_features; ++j) {
            double kx = rng.next_normal() / par.corr_length;
            double ky = rng.next_normal() / par.corr_length;
            double phase = rng.next_uniform(0.0, two_pi);
            for (int ix = 0; ix < s; ++ix) {
                double px = kx * grid.coord(ix) + phase;
                for (int iy = 0; iy < s; ++iy)
                    f.at(ix, iy) += amp * std::cos(px + ky * grid.coord(iy));
            }
        }
        e.fields.push_back(std::move(f));
    }
    return e;
}

GlueResult glue_min(const SheetField& a, const SheetField& a_prime, double max_masked_fraction,
                    double margin_fraction) {
    if (a.grid.side() != a_prime.grid.side() ||
        std::fabs(a.grid.extent - a_prime.grid.extent) > 1e-12)
        throw ConfigError("glue_min: realizations must share the grid");
    if (margin_fraction < 0.0 || margin_fraction >= 1.0)
        throw ConfigError("glue_min: margin_fraction must lie in [0, 1)");
    const SheetGrid& g = a.grid;
    const int s = g.side();
    const int zmax2 = 2 * (s - 1);  // half-step z index range
    const double hs = 0.5 * g.spacing();

    // Output window: same spacing, margin dropped on each side so interior
    // minima keep headroom before the z range ends.
    SheetGrid out;
    out.half = std::max(1, static_cast<int>(std::floor(g.half * (1.0 - margin_fraction))));
    out.extent = out.half * g.spacing();
    const int off = g.half - out.half;  // input index of the window's first node
    const int so = out.side();

    GlueResult res;
    res.b.grid = out;
    res.b.seed = a.seed;
    res.b.values.assign(out.cells(), 0.0);
    res.mask.assign(out.cells(), 0);

    // Penalties from integer half-index differences times hs: the zero-field
    // identity B == 0 then holds exactly for any grid spacing (the analytic
    // midpoint z = (x+y)/2 is a half-grid node and the roundings cancel).
    size_t masked = 0;
    for (int ox = 0; ox < so; ++ox) {
        int ix2 = 2 * (ox + off);  // half-index of x
        for (int oy = 0; oy < so; ++oy) {
            int iy2 = 2 * (oy + off);
            double best = std::numeric_limits<double>::infinity();
            int argz = 0;
            for (int z2 = 0; z2 <= zmax2; ++z2) {
                double dxz = hs * (ix2 - z2);
                double dzy = hs * (z2 - iy2);
                double val =
                    a.at_halfy(ox + off, z2) + a_prime.at_halfx(z2, oy + off) + dxz * dxz + dzy * dzy;
                if (val < best) {
                    best = val;
                    argz = z2;
                }
            }
            double dxy = hs * (ix2 - iy2);
            res.b.at(ox, oy) = best - 0.5 * dxy * dxy;
            if (argz == 0 || argz == zmax2) {
                res.mask[static_cast<size_t>(ox) * so + oy] = 1;
                ++masked;
            }
        }
    }
    res.masked_fraction = static_cast<double>(masked) / static_cast<double>(out.cells());
    if (res.masked_fraction > max_masked_fraction)
        throw NumericError("glue_min: z-argmin hits the boundary too often (domain too small)");
    return res;
}

RenormConstants fit_constants(std::span<const double> b00_samples, double target_mean,
                              double target_variance) {
    if (b00_samples.size() < 100) throw ConfigError("fit_constants: need >= 100 samples");
    if (target_variance <= 0.0) throw ConfigError("fit_constants: target variance must be > 0");
    double m = mean_of(b00_samples);
    double v = variance_of(b00_samples);
    if (v <= 0.0) throw NumericError("fit_constants: degenerate (zero-variance) samples");
    RenormConstants c;
    c.delta = std::sqrt(v / target_variance);
    c.c = m - c.delta * target_mean;
    c.mu = std::sqrt(2.0 * c.delta);
    return c;
}

double interpolate_bicubic(const SheetField& f, double x, double y) {
    const SheetGrid& g = f.grid;
    const int s = g.side();
    double fx = (x + g.extent) / g.spacing();
    double fy = (y + g.extent) / g.spacing();
    const double slack = 1e-9 * s;  // absorb edge rounding
    if (fx < -slack || fx > s - 1 + slack || fy < -slack || fy > s - 1 + slack)
        throw ConfigError("interpolate_bicubic: point outside the grid");
    fx = std::clamp(fx, 0.0, static_cast<double>(s - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(s - 1));
    int ix = std::min(static_cast<int>(fx), s - 2);
    int iy = std::min(static_cast<int>(fy), s - 2);
    double tx = fx - ix;
    double ty = fy - iy;
    auto clampi = [&](int i) { return std::clamp(i, 0, s - 1); };
    double col[4];
    for (int dy = -1; dy <= 2; ++dy) {
        double row[4];
        for (int dx = -1; dx <= 2; ++dx) row[dx + 1] = f.at(clampi(ix + dx), clampi(iy + dy));
        col[dy + 1] = catmull_rom(row[0], row[1], row[2], row[3], tx);
    }
    return catmull_rom(col[0], col[1], col[2], col[3], ty);
}

ApplyResult apply_renormalisation(const StationaryFieldEnsemble& input) {
    if (input.fields.size() < 2)
        throw ConfigError("apply_renormalisation: need >= 2 realizations to pair");
    const size_t pairs = input.fields.size() / 2;

    std::vector<GlueResult> glued;
    glued.reserve(pairs);
    std::vector<double> b00;
    b00.reserve(pairs);
    double masked = 0.0;
    for (size_t p = 0; p < pairs; ++p) {
        glued.push_back(glue_min(input.fields[2 * p], input.fields[2 * p + 1]));
        masked += glued.back().masked_fraction;
        const SheetGrid& bg = glued.back().b.grid;
        int center = bg.half;
        if (!glued.back().mask[static_cast<size_t>(center) * bg.side() + center])
            b00.push_back(glued.back().b.at(center, center));
    }
    RenormConstants k = fit_constants(b00, input.target_mean, input.target_variance);

    // Output grid: same node count as the input, extent shrunk so the
    // mu-rescaled evaluation stays inside the glued window.
    const double b_extent = glued.front().b.grid.extent;
    SheetGrid out_grid = input.grid;
    out_grid.extent = b_extent / std::max(k.mu, 1.0);
    if (k.mu * out_grid.extent > b_extent + 1e-12)
        throw NumericError("apply_renormalisation: mu-rescaled evaluation leaves the B domain");

    ApplyResult res;
    res.constants = k;
    res.masked_fraction = masked / static_cast<double>(pairs);
    res.ensemble.grid = out_grid;
    res.ensemble.target_mean = input.target_mean;
    res.ensemble.target_variance = input.target_variance;
    res.ensemble.generator = input.generator;
    const int s = out_grid.side();
    for (size_t p = 0; p < pairs; ++p) {
        SheetField f;
        f.grid = out_grid;
        f.seed = glued[p].b.seed;
        f.values.assign(out_grid.cells(), 0.0);
        for (int ix = 0; ix < s; ++ix)
            for (int iy = 0; iy < s; ++iy) {
                double x = out_grid.coord(ix), y = out_grid.coord(iy);
                // Clamp away the one-ulp overshoot at the window edge.
                double ex = std::clamp(k.mu * x, -b_extent, b_extent);
                double ey = std::clamp(k.mu * y, -b_extent, b_extent);
                double bval = interpolate_bicubic(glued[p].b, ex, ey);
                f.at(ix, iy) = (bval - k.c) / k.delta;
            }
        res.ensemble.fields.push_back(std::move(f));
    }
    return res;
}

StationarityDrift stationarity_drift(const StationaryFieldEnsemble& e) {
    if (e.fields.size() < 2) throw ConfigError("stationarity_drift: need >= 2 realizations");
    const size_t cells = e.grid.cells();
    const double n = static_cast<double>(e.fields.size());
    std::vector<double> m1(cells, 0.0), m2(cells, 0.0);
    for (const auto& f : e.fields)
        for (size_t i = 0; i < cells; ++i) {
            m1[i] += f.values[i];
            m2[i] += f.values[i] * f.values[i];
        }
    double pooled_mean = 0.0, pooled_var = 0.0;
    for (size_t i = 0; i < cells; ++i) {
        m1[i] /= n;
        m2[i] = m2[i] / n - m1[i] * m1[i];
        pooled_mean += m1[i];
        pooled_var += m2[i];
    }
    pooled_mean /= static_cast<double>(cells);
    pooled_var /= static_cast<double>(cells);
    StationarityDrift d;
    double sd = std::sqrt(std::max(pooled_var, 1e-300));
    for (size_t i = 0; i < cells; ++i) {
        d.mean_drift = std::max(d.mean_drift, std::fabs(m1[i] - pooled_mean) / sd);
        d.variance_drift = std::max(d.variance_drift, std::fabs(m2[i] - pooled_var) / pooled_var);
    }
    return d;
}

}  // namespace hjlab
