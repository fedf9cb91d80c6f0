#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hjlab/estimators.hpp"
#include "hjlab/rng.hpp"

using namespace hjlab;

namespace {
const HamiltonianSpec kQuad = HamiltonianSpec::make_quadratic();

PotentialField::Params forcing(double period, uint64_t seed, double amp, int modes) {
    PotentialField::Params fp;
    fp.master_seed = seed;
    fp.period = period;
    fp.n_modes = modes;
    fp.amplitude = amp;
    return fp;
}
}  // namespace

TEST_CASE("window-scan fit recovers an exact power law and reports the range") {
    std::vector<double> x, y;
    for (int n = 2; n <= 64; ++n) {
        x.push_back(n);
        y.push_back(5.0 * std::pow(n, -0.75));
    }
    ExponentEstimate e = scan_loglog_fit(x, y, 4, 10.0, "demo");
    CHECK(e.value == doctest::Approx(-0.75).epsilon(1e-10));
    CHECK(e.fit_hi >= 10.0 * e.fit_lo);
}

TEST_CASE("free shape function is exactly quadratic: S(a) = a^2/2") {
    ShapeParams par;
    par.grid = Grid(256, 64.0 / 256);
    par.forcing = forcing(par.grid.period(), 1, 0.0, 2);
    par.T = 16;
    par.replicas = 2;
    std::vector<double> a_grid;
    for (double a = -1.0; a <= 1.001; a += 0.25) a_grid.push_back(a);
    ShapeFunctionEstimate est = estimate_shape(par, kQuad, a_grid);
    for (size_t i = 0; i < a_grid.size(); ++i)
        CHECK(est.s_hat[i] == doctest::Approx(0.5 * a_grid[i] * a_grid[i]).epsilon(1e-10));
    CHECK(est.curvature == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(est.s0 == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("viscous free shape function adds only a slope-free constant") {
    ShapeParams par;
    par.grid = Grid(128, 32.0 / 128);
    par.forcing = forcing(par.grid.period(), 2, 0.0, 2);
    par.T = 8;
    par.replicas = 2;
    par.nu = 0.5;
    std::vector<double> a_grid{-0.5, 0.0, 0.5};
    ShapeFunctionEstimate est = estimate_shape(par, kQuad, a_grid);
    // Free energy of the bridge: quadratic in a with unit curvature up to
    // lattice corrections; the constant is the free entropy.
    CHECK(est.curvature == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Legendre transform: quadratic self-duality and shift anti-covariance") {
    std::vector<double> a_grid, s, s_shift;
    for (double a = -2.0; a <= 2.001; a += 0.125) {
        a_grid.push_back(a);
        s.push_back(0.5 * a * a);
        s_shift.push_back(0.5 * a * a + 0.3);
    }
    std::vector<double> b_grid{-1.5, -0.75, 0.0, 0.75, 1.5};
    LegendreResult h = legendre_transform(a_grid, s, {}, b_grid);
    LegendreResult hs = legendre_transform(a_grid, s_shift, {}, b_grid);
    for (size_t i = 0; i < b_grid.size(); ++i) {
        CHECK(h.h_eff[i] == doctest::Approx(0.5 * b_grid[i] * b_grid[i]).epsilon(1e-12));
        CHECK(h.a_of_b[i] == doctest::Approx(b_grid[i]).epsilon(1e-12));
        CHECK(hs.h_eff[i] == doctest::Approx(h.h_eff[i] - 0.3).epsilon(1e-12));
    }
    CHECK(!h.hull_adjusted);
    CHECK_THROWS_AS(legendre_transform(a_grid, s, {}, std::vector<double>{5.0}), ConfigError);

    // A point lifted above the hull is flagged and does not change H_eff;
    // the double transform therefore returns the convex hull of the input.
    std::vector<double> bumpy = s;
    bumpy[8] += 0.4;
    LegendreResult h3 = legendre_transform(a_grid, bumpy, {}, b_grid);
    CHECK(h3.hull_adjusted);
    for (size_t i = 0; i < b_grid.size(); ++i)
        CHECK(h3.h_eff[i] == doctest::Approx(h.h_eff[i]).epsilon(1e-12));
    // Oracle: recompute H_eff(b) = max_a [a b - hull(a)] directly from the
    // unperturbed convex values.
    for (size_t i = 0; i < b_grid.size(); ++i) {
        double best = -1e300;
        for (size_t k = 0; k < a_grid.size(); ++k)
            best = std::max(best, b_grid[i] * a_grid[k] - s[k]);
        CHECK(h3.h_eff[i] == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("chi calibration: iid increments give chi = 1/2") {
    ScalingSurvey sv;
    sv.t_list = {8, 16, 32, 64, 128};
    sv.period = 1e9;
    Rng rng(12);
    const int reps = 400;
    sv.median_disp.assign(sv.t_list.size(), std::vector<double>(reps));
    sv.action_at_origin.assign(sv.t_list.size(), std::vector<double>(reps));
    sv.dot_density.assign(sv.t_list.size(), std::vector<double>(reps));
    for (size_t k = 0; k < sv.t_list.size(); ++k) {
        int t = sv.t_list[k];
        for (int r = 0; r < reps; ++r) {
            double sum = 0.0;
            for (int j = 0; j < t; ++j) sum += rng.next_normal();
            sv.action_at_origin[k][r] = sum;
            sv.median_disp[k][r] = std::sqrt(static_cast<double>(t));  // diffusive proxy
            sv.dot_density[k][r] = 1.0 / std::sqrt(static_cast<double>(t));
        }
    }
    ExponentEstimate chi = estimate_chi(sv);
    CHECK(std::fabs(chi.value - 0.5) < 0.1);
    XiEstimate xi = estimate_xi(sv);
    CHECK(xi.displacement_route.value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(xi.density_route.value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(xi.routes_consistent);
}

TEST_CASE("sigma calibration on a synthetic two-sided Wiener profile") {
    Grid g(4096, 512.0 / 4096);
    const double sigma_true = 1.0;
    std::vector<std::vector<double>> profiles;
    for (int r = 0; r < 24; ++r) {
        Rng rng(substream(31, r));
        std::vector<double> prof(g.n);
        prof[0] = 0.0;
        for (int i = 1; i < g.n; ++i)
            prof[i] = prof[i - 1] + sigma_true * std::sqrt(g.h) * rng.next_normal();
        profiles.push_back(std::move(prof));
    }
    std::vector<double> windows{2.0, 4.0, 8.0, 16.0, 32.0};
    SigmaEstimate est = estimate_sigma(profiles, g, windows);
    CHECK(std::fabs(est.fit.value - sigma_true) < 0.05);
    CHECK(est.linear_r2 > 0.95);
    CHECK(est.ks_gaussian < 0.05);
}

TEST_CASE("age-tail calibration: Pareto(5/3) density versus exponential ages") {
    Rng rng(77);
    std::vector<double> pareto;
    for (int i = 0; i < 20000; ++i) pareto.push_back(std::pow(rng.next_double(), -1.5));
    AgeTailResult pr = age_tail_fit(pareto, 2.0, 24);
    CHECK(std::fabs(pr.tail.value + 5.0 / 3.0) < 0.05);
    CHECK(!pr.power_law_rejected);

    std::vector<double> expo;
    for (int i = 0; i < 20000; ++i) expo.push_back(1.0 - 8.0 * std::log(rng.next_double()));
    AgeTailResult er = age_tail_fit(expo, 2.0, 24);
    CHECK(er.power_law_rejected);

    std::vector<double> few(50, 3.0);
    CHECK_THROWS_AS(age_tail_fit(few, 1.0), InsufficientStatistics);
}

TEST_CASE("compact-case Lyapunov contraction is positive and resolved") {
    LyapunovParams par;
    par.grid = Grid(256, 4.0 / 256);
    par.forcing = forcing(par.grid.period(), 5, 1.0, 2);
    par.depth = 160;
    par.separations = {0.5, 1.0};
    par.pairs_per_l = 12;
    par.replicas = 3;
    LyapunovResult res = estimate_lyapunov(par, kQuad);
    CHECK(res.lambda.value > 0.0);
    CHECK(res.lambda.se < 0.3 * res.lambda.value);
}

TEST_CASE("scaling survey runs end to end at a small scale") {
    ScalingSurveyParams par;
    par.grid = Grid(1024, 256.0 / 1024);
    par.forcing = forcing(par.grid.period(), 8, 1.0, 48);
    par.t_list = {4, 8, 16, 32};
    par.replicas = 3;
    par.endpoint_stride = 16;
    ScalingSurvey sv = run_scaling_survey(par, kQuad);
    // Medians grow with depth; densities fall.
    for (size_t k = 1; k < sv.t_list.size(); ++k) {
        CHECK(mean_of(sv.median_disp[k]) >= mean_of(sv.median_disp[k - 1]));
        CHECK(mean_of(sv.dot_density[k]) <= mean_of(sv.dot_density[k - 1]) + 1e-12);
    }
    // Period guard trips when P is too small for the requested depths.
    ScalingSurveyParams bad = par;
    bad.grid = Grid(128, 16.0 / 128);
    bad.forcing.period = bad.grid.period();
    CHECK_THROWS_AS(run_scaling_survey(bad, kQuad), ConfigError);
}
