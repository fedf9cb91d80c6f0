#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hjlab/polymer.hpp"
#include "hjlab/stats.hpp"

using namespace hjlab;

namespace {

EnergyFunctional zero_energy(int n_steps, double nu) {
    EnergyFunctional e;
    e.nu = nu;
    e.step_potential.assign(n_steps, {});
    return e;
}

PotentialField::Params forcing_params(double period, uint64_t seed, double amp = 1.0) {
    PotentialField::Params fp;
    fp.master_seed = seed;
    fp.period = period;
    fp.n_modes = 2;
    fp.amplitude = amp;
    return fp;
}

}  // namespace

TEST_CASE("free Gibbs marginals are the bridge-to-line kernel powers") {
    Grid g(12, 6.0 / 12);
    auto space = LatticePathSpace::make(g, 3, 0.5, 1.0);
    auto energy = zero_energy(3, 0.5);
    PathMeasure pm = gibbs_exact(space, energy, 4);

    // Oracle: with flat Phi_0 and no kicks the time-j marginal is the (T-j)-step
    // kernel power row from the endpoint (the forward factor sums to one).
    const int n = g.n;
    std::vector<double> row(n, 0.0);
    row[4] = 1.0;
    std::vector<double> kern(n);
    for (int r = 0; r < n; ++r) kern[r] = std::exp(space.log_step_kernel[r]);
    for (int j = 3; j-- > 0;) {
        std::vector<double> next(n, 0.0);
        for (int z = 0; z < n; ++z)
            for (int y = 0; y < n; ++y) next[y] += row[z] * kern[g.wrap(y - z)];
        row = next;
        for (int y = 0; y < n; ++y) CHECK(pm.marginals[j][y] == doctest::Approx(row[y]).epsilon(1e-12));
    }
}

TEST_CASE("seeded two-step marginals match exhaustive enumeration") {
    Grid g(8, 4.0 / 8);
    double nu = 0.5;
    auto space = LatticePathSpace::make(g, 2, nu, 1.0);
    PotentialField field(forcing_params(g.period(), 77));
    EnergyFunctional e = zero_energy(2, nu);
    e.step_potential[0] = field.sample_kick(1, g);
    e.step_potential[1] = field.sample_kick(2, g);

    const int endpoint = 3;
    PathMeasure pm = gibbs_exact(space, e, endpoint, true);
    PathEnumeration en = enumerate_paths(space, e, endpoint);

    std::vector<std::vector<double>> marg(3, std::vector<double>(g.n, 0.0));
    double zsum = 0.0;
    for (size_t p = 0; p < en.paths.size(); ++p) {
        double w = std::exp(en.log_free_weight[p] - en.energies[p]);
        zsum += w;
        for (int j = 0; j < 3; ++j) marg[j][en.paths[p][j]] += w;
    }
    for (int j = 0; j < 3; ++j)
        for (int y = 0; y < g.n; ++y)
            CHECK(pm.marginals[j][y] == doctest::Approx(marg[j][y] / zsum).epsilon(1e-12));
    CHECK(pm.log_normalizer == doctest::Approx(std::log(zsum)).epsilon(1e-12));

    // Marginals sum to one; pair marginals are chain-consistent.
    for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (double v : pm.marginals[j]) s += v;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int j = 0; j < 2; ++j)
        for (int y = 0; y < g.n; ++y) {
            double s = 0.0;
            for (int z = 0; z < g.n; ++z) s += pm.pair_marginals[j][static_cast<size_t>(z) * g.n + y];
            CHECK(s == doctest::Approx(pm.marginals[j + 1][y]).epsilon(1e-12));
        }
}

TEST_CASE("gibbs log-normalizer equals the hj_viscous partition at the endpoint") {
    Grid g(16, 8.0 / 16);
    PotentialField field(forcing_params(g.period(), 123));
    PolymerInstance inst = make_polymer_instance(field, g, 0.5, 1.0, 4);
    for (int x : {0, 5, 11}) {
        PathMeasure pm = gibbs_exact(inst.space, inst.energy, x);
        CHECK(pm.log_normalizer ==
              doctest::Approx(inst.z_trace.back().total_log_z(x)).epsilon(1e-10));
    }
}

TEST_CASE("controlled chain with zero drift is the free chain") {
    Grid g(10, 5.0 / 10);
    auto space = LatticePathSpace::make(g, 3, 0.5, 1.0);
    std::vector<VelocityField> u(4);
    for (auto& f : u) {
        f.grid = g;
        f.u.assign(g.n, 0.0);
    }
    PathMeasure chain = controlled_chain(space, u, 2);
    PathMeasure gibbs = gibbs_exact(space, zero_energy(3, 0.5), 2);
    for (int j = 0; j <= 3; ++j)
        for (int y = 0; y < g.n; ++y)
            CHECK(chain.marginals[j][y] == doctest::Approx(gibbs.marginals[j][y]).epsilon(1e-12));
}

TEST_CASE("constant drift translates the free marginals") {
    Grid g(16, 8.0 / 16);
    double nu = 0.5, dt = 1.0;
    auto space = LatticePathSpace::make(g, 2, nu, dt);
    double c = 2.0 * g.h / dt;  // drift lands on nodes
    std::vector<VelocityField> u(3), u0(3);
    for (auto& f : u) {
        f.grid = g;
        f.u.assign(g.n, c);
    }
    for (auto& f : u0) {
        f.grid = g;
        f.u.assign(g.n, 0.0);
    }
    PathMeasure drifted = controlled_chain(space, u, 5);
    PathMeasure still = controlled_chain(space, u0, 5);
    // Reverse-time drift is -u: marginal at depth d translates by -c d.
    for (int j = 0; j <= 2; ++j) {
        int depth = 2 - j;
        int shift = static_cast<int>(std::llround(c * dt * depth / g.h));
        for (int y = 0; y < g.n; ++y)
            CHECK(drifted.marginals[j][g.wrap(y - shift)] ==
                  doctest::Approx(still.marginals[j][y]).epsilon(1e-9));
    }
}

TEST_CASE("appendix equivalence: chain vs gibbs TV shrinks under refinement") {
    double nu = 0.5;
    double period = 8.0;
    std::vector<double> tvs;
    for (int level = 0; level < 3; ++level) {
        int n = 32 << level;
        double dt = 1.0 / (1 << level);
        Grid g(n, period / n);
        PotentialField field(forcing_params(period, 2024, 0.6));
        PolymerInstance inst = make_polymer_instance(field, g, nu, dt, 3);
        int endpoint = n / 4;
        PathMeasure gb = gibbs_exact(inst.space, inst.energy, endpoint);
        PathMeasure ch = controlled_chain(inst.space, inst.u_fields, endpoint);
        double worst = 0.0;
        for (size_t j = 0; j < gb.marginals.size(); ++j)
            worst = std::max(worst, total_variation(gb.marginals[j], ch.marginals[j]));
        tvs.push_back(worst);
    }
    CHECK(tvs[0] < 0.05);
    CHECK(tvs[1] < tvs[0]);
    CHECK(tvs[2] < tvs[1]);
}

TEST_CASE("SDE sampler: free diffusion variance and chain agreement") {
    Grid g(64, 32.0 / 64);
    double nu = 0.5, dt = 0.5;
    auto space = LatticePathSpace::make(g, 8, nu, dt);
    std::vector<VelocityField> u0(9);
    for (auto& f : u0) {
        f.grid = g;
        f.u.assign(g.n, 0.0);
    }
    SampledPaths sp = sample_polymer_sde(space, u0, g.x(32), 2000, 99);
    CHECK(sp.n_flagged == 0);
    std::vector<double> endpoints;
    for (const auto& path : sp.positions) endpoints.push_back(path[0] - g.x(32));
    double var = variance_of(endpoints);
    double expect = 2.0 * nu * space.n_steps * dt;
    double se = expect * std::sqrt(2.0 / (endpoints.size() - 1));
    CHECK(std::fabs(var - expect) < 3.0 * se);
}

TEST_CASE("SDE sampler matches the controlled chain by chi-square") {
    Grid g(32, 16.0 / 32);
    double nu = 0.5, dt = 0.5;
    PotentialField field(forcing_params(g.period(), 555, 0.5));
    PolymerInstance inst = make_polymer_instance(field, g, nu, dt, 2);
    int endpoint = 8;
    PathMeasure chain = controlled_chain(inst.space, inst.u_fields, endpoint);
    SampledPaths sp = sample_polymer_sde(inst.space, inst.u_fields, g.x(endpoint), 10000, 7);

    // Bin endpoints (time 0) onto the lattice and compare against the chain.
    std::vector<double> counts(g.n, 0.0);
    for (const auto& path : sp.positions) ++counts[g.nearest_node(path[0])];
    const auto& expect = chain.marginals[0];
    double stat = 0.0;
    int dof = 0;
    double n = static_cast<double>(sp.positions.size());
    for (int i = 0; i < g.n; ++i) {
        double e = expect[i] * n;
        if (e < 5.0) continue;  // fold sparse cells out of the statistic
        stat += (counts[i] - e) * (counts[i] - e) / e;
        ++dof;
    }
    REQUIRE(dof >= 5);
    double p = chi2_sf(stat, dof - 1);
    CHECK(p > 0.01);
}

TEST_CASE("free energy: Gibbs attains -ln Z, free measure has zero entropy") {
    Grid g(6, 3.0 / 6);
    double nu = 0.4;
    auto space = LatticePathSpace::make(g, 3, nu, 1.0);
    PotentialField field(forcing_params(g.period(), 31));
    EnergyFunctional e = zero_energy(3, nu);
    e.step_potential[0] = field.sample_kick(1, g);
    e.step_potential[2] = field.sample_kick(3, g);
    e.phi0 = field.sample_kick(4, g);
    const int endpoint = 2;

    PathEnumeration en = enumerate_paths(space, e, endpoint);
    std::vector<double> lz(en.paths.size());
    for (size_t i = 0; i < lz.size(); ++i) lz[i] = en.log_free_weight[i] - en.energies[i];
    double log_z = logsumexp(lz);

    // Gibbs density table.
    std::vector<double> gibbs(en.paths.size());
    for (size_t i = 0; i < gibbs.size(); ++i) gibbs[i] = std::exp(-en.energies[i] - log_z);
    FreeEnergyReport rg = free_energy_report(gibbs, space, e, endpoint);
    CHECK(rg.free_energy == doctest::Approx(-log_z).epsilon(1e-12));
    CHECK(rg.free_energy == doctest::Approx(rg.minus_log_z).epsilon(1e-12));

    // Free measure: density 1, zero entropy, G = I.
    std::vector<double> flat(en.paths.size(), 1.0);
    FreeEnergyReport rf = free_energy_report(flat, space, e, endpoint);
    CHECK(rf.entropy == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rf.free_energy == doctest::Approx(rf.average_energy).epsilon(1e-12));

    // Random perturbed densities never beat the Gibbs free energy.
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(en.paths.size());
        double norm = 0.0;
        for (size_t i = 0; i < p.size(); ++i) {
            p[i] = gibbs[i] * std::exp(0.5 * rng.next_normal());
            norm += std::exp(en.log_free_weight[i]) * p[i];
        }
        for (auto& v : p) v /= norm;
        FreeEnergyReport r = free_energy_report(p, space, e, endpoint);
        CHECK(r.free_energy >= -log_z - 1e-10);
    }
}

TEST_CASE("localization: free row matches the exact window mass, trend in amplitude") {
    Grid g(64, 32.0 / 64);
    double nu = 0.5;
    PotentialField::Params fp = forcing_params(g.period(), 404, 0.0);
    std::vector<double> horizons{6.0};
    std::vector<double> amplitudes{0.0, 1.0, 2.0};
    auto rows = localization_scan(fp, g, nu, horizons, amplitudes);
    REQUIRE(rows.size() == 3);

    // Free case: sliding unit window over the wrapped Gaussian of variance 2 nu T.
    const auto& free_row = rows[0];
    std::vector<double> logk = lattice_log_kernel(g, nu, free_row.horizon_t, 0.0);
    std::vector<double> mass(g.n);
    for (int i = 0; i < g.n; ++i) mass[i] = std::exp(logk[i]);
    int wn = static_cast<int>(std::llround(1.0 / g.h));
    double best = 0.0;
    for (int s = 0; s < g.n; ++s) {
        double acc = 0.0;
        for (int k = 0; k < wn; ++k) acc += mass[(s + k) % g.n];
        best = std::max(best, acc);
    }
    CHECK(free_row.max_unit_interval_mass == doctest::Approx(best).epsilon(1e-6));
    CHECK(free_row.endpoint_variance == doctest::Approx(2 * nu * free_row.horizon_t).epsilon(0.05));

    // Localization mass grows with the forcing amplitude on this family.
    CHECK(rows[1].max_unit_interval_mass > rows[0].max_unit_interval_mass);
    CHECK(rows[2].max_unit_interval_mass > rows[1].max_unit_interval_mass);
}

TEST_CASE("guards: drift beyond the bandwidth and oversized enumerations") {
    Grid g(16, 8.0 / 16);
    auto space = LatticePathSpace::make(g, 2, 0.01, 1.0);
    std::vector<VelocityField> u(3);
    for (auto& f : u) {
        f.grid = g;
        f.u.assign(g.n, 5.0);
    }
    CHECK_THROWS_AS(controlled_chain(space, u, 0), NumericError);

    auto big = LatticePathSpace::make(Grid(32, 0.25), 5, 0.5, 1.0);
    CHECK_THROWS_AS(enumerate_paths(big, zero_energy(5, 0.5), 0), ConfigError);

    auto small = LatticePathSpace::make(Grid(4, 0.5), 2, 0.5, 1.0);
    std::vector<double> bad(16, 1e6);
    CHECK_THROWS_AS(free_energy_report(bad, small, zero_energy(2, 0.5), 0), ConfigError);
}
