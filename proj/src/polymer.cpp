#include "hjlab/polymer.hpp"

#include <algorithm>
#include <cmath>

#include "hjlab/errors.hpp"
#include "hjlab/stats.hpp"

namespace hjlab {

namespace {

/// Minimal-image displacement of node difference r on the circle, in length units.
double minimal_image(const Grid& g, int64_t diff) {
    int r = g.wrap(diff);
    double d = r * g.h;
    if (d > 0.5 * g.period()) d -= g.period();
    return d;
}

double interp_periodic(const VelocityField& f, double x) {
    const Grid& g = f.grid;
    double xp = g.wrap_pos(x);
    double t = xp / g.h;
    int i = static_cast<int>(t);
    double frac = t - i;
    int j = (i + 1) % g.n;
    return (1.0 - frac) * f.u[i] + frac * f.u[j];
}

/// out(y) = logsumexp_z [ logk(y - z) + in(z) ], dense circular log-matvec.
void log_matvec(const Grid& g, const std::vector<double>& logk, const std::vector<double>& in,
                std::vector<double>& out, std::vector<double>& scratch) {
    const int n = g.n;
    out.resize(n);
    scratch.resize(n);
    for (int y = 0; y < n; ++y) {
        for (int z = 0; z < n; ++z) scratch[z] = logk[g.wrap(y - z)] + in[z];
        out[y] = logsumexp(scratch);
    }
}

}  // namespace

LatticePathSpace LatticePathSpace::make(const Grid& grid, int n_steps, double nu, double dt) {
    if (n_steps < 1) throw ConfigError("polymer: need n_steps >= 1");
    if (nu <= 0.0 || dt <= 0.0) throw ConfigError("polymer: nu and dt must be positive");
    if (grid.n > 512 || n_steps > 1000)
        throw ConfigError("polymer: lattice too large for dense transfer sweeps");
    LatticePathSpace s;
    s.grid = grid;
    s.n_steps = n_steps;
    s.nu = nu;
    s.dt = dt;
    s.log_step_kernel = lattice_log_kernel(grid, nu, dt, 0.0);
    return s;
}

int LatticePathSpace::steps_per_kick() const {
    int m = static_cast<int>(std::llround(1.0 / dt));
    if (std::fabs(m * dt - 1.0) > 1e-9)
        throw ConfigError("polymer: dt must divide the unit kick spacing");
    return m;
}

double EnergyFunctional::energy(std::span<const int> path_nodes, const Grid& grid) const {
    (void)grid;
    if (path_nodes.size() != step_potential.size() + 1)
        throw ConfigError("energy: path length does not match the step count");
    double acc = phi0.empty() ? 0.0 : phi0[path_nodes[0]];
    for (size_t s = 0; s < step_potential.size(); ++s)
        if (!step_potential[s].empty()) acc -= step_potential[s][path_nodes[s + 1]];
    return acc / (2.0 * nu);
}

PathMeasure gibbs_exact(const LatticePathSpace& space, const EnergyFunctional& energy,
                        int endpoint_node, bool want_pairs) {
    const Grid& g = space.grid;
    const int n = g.n;
    const int T = space.n_steps;
    if (static_cast<int>(energy.step_potential.size()) != T)
        throw ConfigError("gibbs_exact: energy step count does not match the space");
    const double inv2nu = 1.0 / (2.0 * space.nu);

    // Forward sweep: f_j = log partial partition from time 0 up to j.
    std::vector<std::vector<double>> f(T + 1);
    f[0].assign(n, 0.0);
    if (!energy.phi0.empty())
        for (int i = 0; i < n; ++i) f[0][i] = -energy.phi0[i] * inv2nu;
    std::vector<double> scratch;
    for (int j = 0; j < T; ++j) {
        log_matvec(g, space.log_step_kernel, f[j], f[j + 1], scratch);
        if (!energy.step_potential[j].empty())
            for (int i = 0; i < n; ++i) f[j + 1][i] += energy.step_potential[j][i] * inv2nu;
    }

    // Backward sweep from the pinned endpoint.
    std::vector<std::vector<double>> b(T + 1);
    b[T].assign(n, -std::numeric_limits<double>::infinity());
    b[T][endpoint_node] = 0.0;
    for (int j = T; j-- > 0;) {
        std::vector<double> carry = b[j + 1];
        if (!energy.step_potential[j].empty())
            for (int i = 0; i < n; ++i) carry[i] += energy.step_potential[j][i] * inv2nu;
        b[j].resize(n);
        scratch.resize(n);
        for (int z = 0; z < n; ++z) {
            for (int y = 0; y < n; ++y)
                scratch[y] = space.log_step_kernel[g.wrap(y - z)] + carry[y];
            b[j][z] = logsumexp(scratch);
        }
    }

    PathMeasure pm;
    pm.log_normalizer = f[T][endpoint_node];
    pm.marginals.resize(T + 1);
    for (int j = 0; j <= T; ++j) {
        pm.marginals[j].resize(n);
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) m = std::max(m, f[j][i] + b[j][i]);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            double w = std::exp(f[j][i] + b[j][i] - m);
            pm.marginals[j][i] = w;
            sum += w;
        }
        for (int i = 0; i < n; ++i) pm.marginals[j][i] /= sum;
    }
    if (want_pairs) {
        pm.has_pairs = true;
        pm.pair_marginals.resize(T);
        for (int j = 0; j < T; ++j) {
            std::vector<double> carry = b[j + 1];
            if (!energy.step_potential[j].empty())
                for (int i = 0; i < n; ++i) carry[i] += energy.step_potential[j][i] * inv2nu;
            auto& pj = pm.pair_marginals[j];
            pj.assign(static_cast<size_t>(n) * n, 0.0);
            double m = -std::numeric_limits<double>::infinity();
            for (int z = 0; z < n; ++z)
                for (int y = 0; y < n; ++y)
                    m = std::max(m, f[j][z] + space.log_step_kernel[g.wrap(y - z)] + carry[y]);
            double sum = 0.0;
            for (int z = 0; z < n; ++z)
                for (int y = 0; y < n; ++y) {
                    double w = std::exp(f[j][z] + space.log_step_kernel[g.wrap(y - z)] +
                                        carry[y] - m);
                    pj[static_cast<size_t>(z) * n + y] = w;
                    sum += w;
                }
            for (auto& w : pj) w /= sum;
        }
    }
    return pm;
}

PathMeasure controlled_chain(const LatticePathSpace& space,
                             const std::vector<VelocityField>& u_fields, int endpoint_node) {
    const Grid& g = space.grid;
    const int n = g.n;
    const int T = space.n_steps;
    if (static_cast<int>(u_fields.size()) != T + 1)
        throw ConfigError("controlled_chain: need one velocity field per step time (0..n_steps)");
    double sigma = std::sqrt(2.0 * space.nu * space.dt);
    for (const auto& uf : u_fields) {
        double umax = 0.0;
        for (double u : uf.u) umax = std::max(umax, std::fabs(u));
        if (umax * space.dt > 4.0 * sigma)
            throw NumericError("controlled_chain: drift*dt exceeds the kernel bandwidth");
    }
    const double inv2nu = 1.0 / (2.0 * space.nu);

    PathMeasure pm;
    pm.marginals.assign(T + 1, std::vector<double>(n, 0.0));
    pm.marginals[T][endpoint_node] = 1.0;

    // March the reverse-time chain from (T, x) down to 0. The step kernel is
    // the free kernel tilted by the Girsanov factor of the drift -u, with u
    // read at the landing time level and at the spatial midpoint of the jump.
    // Each periodic image carries its own displacement and midpoint, so a
    // constant drift is an exact lattice translation.
    double umax = 0.0;
    for (const auto& uf : u_fields)
        for (double u : uf.u) umax = std::max(umax, std::fabs(u));
    int images =
        static_cast<int>(std::ceil((45.0 * sigma + umax * space.dt) / g.period())) + 1;
    const double inv_var = 1.0 / (4.0 * space.nu * space.dt);

    std::vector<double> logrow(n), row(n);
    for (int j = T; j-- > 0;) {
        const VelocityField& uf = u_fields[j];
        auto& src = pm.marginals[j + 1];
        auto& dst = pm.marginals[j];
        for (int z = 0; z < n; ++z) {
            if (src[z] == 0.0) continue;
            for (int y = 0; y < n; ++y) {
                double d0 = minimal_image(g, y - z);
                double acc = -std::numeric_limits<double>::infinity();
                for (int m = -images; m <= images; ++m) {
                    double d = d0 + m * g.period();
                    double umid = interp_periodic(uf, g.x(z) + 0.5 * d);
                    double t = -d * d * inv_var - umid * d * inv2nu;
                    acc = acc > t ? acc + std::log1p(std::exp(t - acc))
                                  : t + std::log1p(std::exp(acc - t));
                }
                logrow[y] = acc;
            }
            double m = *std::max_element(logrow.begin(), logrow.end());
            double sum = 0.0;
            for (int y = 0; y < n; ++y) {
                row[y] = std::exp(logrow[y] - m);
                sum += row[y];
            }
            double w = src[z] / sum;
            for (int y = 0; y < n; ++y) dst[y] += row[y] * w;
        }
    }
    return pm;
}

SampledPaths sample_polymer_sde(const LatticePathSpace& space,
                                const std::vector<VelocityField>& u_fields, double endpoint_x,
                                int n_samples, uint64_t seed) {
    const int T = space.n_steps;
    if (static_cast<int>(u_fields.size()) != T + 1)
        throw ConfigError("sample_polymer_sde: need one velocity field per step time");
    double dt = space.dt;
    double sigma = std::sqrt(2.0 * space.nu * dt);
    double trust = 4.0 * sigma;

    SampledPaths out;
    out.positions.assign(n_samples, std::vector<double>(T + 1, 0.0));
    out.flagged.assign(n_samples, 0);
    for (int s = 0; s < n_samples; ++s) {
        Rng rng(substream(seed, static_cast<uint64_t>(s)));
        auto& path = out.positions[s];
        double x = endpoint_x;
        path[T] = x;
        bool flag = false;
        for (int j = T; j-- > 0;) {
            double noise = sigma * rng.next_normal();
            // Heun-style midpoint: predict with u at the current level, then
            // re-evaluate the drift at the spatial midpoint, landing level.
            double upred = interp_periodic(u_fields[j + 1], x);
            double xpred = x - upred * dt + noise;
            double umid = interp_periodic(u_fields[j], 0.5 * (x + xpred));
            if (std::fabs(umid) * dt > trust) flag = true;
            x = x - umid * dt + noise;
            path[j] = x;
        }
        if (flag) {
            out.flagged[s] = 1;
            ++out.n_flagged;
        }
    }
    return out;
}

PathEnumeration enumerate_paths(const LatticePathSpace& space, const EnergyFunctional& energy,
                                int endpoint_node) {
    const Grid& g = space.grid;
    const int n = g.n;
    const int T = space.n_steps;
    double count = std::pow(static_cast<double>(n), T);
    if (count > 1e6) throw ConfigError("enumerate_paths: path space exceeds 1e6 paths");
    PathEnumeration e;
    size_t total = static_cast<size_t>(count);
    e.paths.reserve(total);
    e.log_free_weight.reserve(total);
    e.energies.reserve(total);

    std::vector<int> nodes(T + 1, 0);
    nodes[T] = endpoint_node;
    // Odometer over the free positions y_0..y_{T-1}.
    for (size_t idx = 0; idx < total; ++idx) {
        size_t rem = idx;
        for (int j = 0; j < T; ++j) {
            nodes[j] = static_cast<int>(rem % n);
            rem /= n;
        }
        double logw = 0.0;
        for (int j = 0; j < T; ++j)
            logw += space.log_step_kernel[g.wrap(nodes[j + 1] - nodes[j])];
        e.paths.push_back(nodes);
        e.log_free_weight.push_back(logw);
        e.energies.push_back(energy.energy(nodes, g));
    }
    return e;
}

FreeEnergyReport free_energy_report(std::span<const double> density,
                                    const LatticePathSpace& space,
                                    const EnergyFunctional& energy, int endpoint_node) {
    PathEnumeration e = enumerate_paths(space, energy, endpoint_node);
    if (density.size() != e.paths.size())
        throw ConfigError("free_energy_report: density table size does not match the path space");
    double norm = 0.0;
    for (size_t i = 0; i < density.size(); ++i) {
        if (density[i] < 0.0) throw ConfigError("free_energy_report: negative density");
        norm += std::exp(e.log_free_weight[i]) * density[i];
    }
    if (std::fabs(norm - 1.0) > 1e-9)
        throw ConfigError("free_energy_report: density is not normalized under the free measure");

    FreeEnergyReport r;
    std::vector<double> lz(e.paths.size());
    for (size_t i = 0; i < e.paths.size(); ++i) {
        double mu = std::exp(e.log_free_weight[i]);
        double p = density[i];
        r.average_energy += mu * p * e.energies[i];
        if (p > 0.0) r.entropy -= mu * p * std::log(p);
        lz[i] = e.log_free_weight[i] - e.energies[i];
    }
    r.free_energy = r.average_energy - r.entropy;
    r.minus_log_z = -logsumexp(lz);
    return r;
}

PolymerInstance make_polymer_instance(const PotentialField& forcing, const Grid& grid,
                                      double nu, double dt, int n_kicks,
                                      std::span<const double> phi0) {
    PolymerInstance inst;
    int m = static_cast<int>(std::llround(1.0 / dt));
    if (std::fabs(m * dt - 1.0) > 1e-9)
        throw ConfigError("make_polymer_instance: dt must divide the kick spacing");
    int T = n_kicks * m;
    inst.space = LatticePathSpace::make(grid, T, nu, dt);

    inst.viscous.nu = nu;
    inst.viscous.dt = dt;
    inst.viscous.grid = grid;
    inst.viscous.kernel_mode = HeatKernelMode::lattice;
    inst.viscous.gradient = GradientMethod::centered;

    inst.energy.nu = nu;
    inst.energy.step_potential.assign(T, {});
    if (!phi0.empty()) inst.energy.phi0.assign(phi0.begin(), phi0.end());

    PartitionField z = phi0.empty() ? PartitionField(grid, 0)
                                    : partition_from_phi(phi0, inst.viscous);
    inst.z_trace.push_back(z);
    inst.u_fields.push_back(velocity_from_z(z, inst.viscous));
    for (int s = 1; s <= T; ++s) {
        z = heat_step(z, inst.viscous);
        if (s % m == 0) {
            int64_t kick_index = s / m;
            std::vector<double> kick = forcing.sample_kick(kick_index, grid);
            z = kick_step(z, kick, inst.viscous);
            inst.energy.step_potential[s - 1] = std::move(kick);
        }
        inst.z_trace.push_back(z);
        inst.u_fields.push_back(velocity_from_z(z, inst.viscous));
    }
    return inst;
}

std::vector<LocalizationRow> localization_scan(const PotentialField::Params& forcing,
                                               const Grid& grid, double nu,
                                               std::span<const double> horizons,
                                               std::span<const double> amplitudes) {
    std::vector<LocalizationRow> rows;
    int window_nodes = std::max(1, static_cast<int>(std::llround(1.0 / grid.h)));
    for (double amp : amplitudes) {
        PotentialField::Params p = forcing;
        p.amplitude = amp;
        PotentialField field(p);
        for (double t : horizons) {
            int n_kicks = static_cast<int>(std::llround(t));
            PolymerInstance inst = make_polymer_instance(field, grid, nu, 1.0, n_kicks);
            PathMeasure pm = controlled_chain(inst.space, inst.u_fields, 0);
            const auto& endpoint = pm.marginals[0];

            LocalizationRow row;
            row.horizon_t = t;
            row.amplitude = amp;
            row.free_variance = 2.0 * nu * t;
            // Max probability mass in any unit interval (circular sliding window).
            double best = 0.0;
            for (int start = 0; start < grid.n; ++start) {
                double mass = 0.0;
                for (int k = 0; k < window_nodes; ++k) mass += endpoint[(start + k) % grid.n];
                best = std::max(best, mass);
            }
            row.max_unit_interval_mass = best;
            // Endpoint variance with minimal-image displacement from the endpoint.
            double m1 = 0.0, m2 = 0.0;
            for (int i = 0; i < grid.n; ++i) {
                double d = minimal_image(grid, i - 0);
                m1 += endpoint[i] * d;
                m2 += endpoint[i] * d * d;
            }
            row.endpoint_variance = m2 - m1 * m1;
            rows.push_back(row);
        }
    }
    return rows;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("total_variation: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return 0.5 * s;
}

}  // namespace hjlab
