#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hjlab/airy_renorm.hpp"
#include "hjlab/rng.hpp"
#include "hjlab/stats.hpp"

using namespace hjlab;

namespace {
SheetField constant_field(const SheetGrid& g, double value, uint64_t seed = 0) {
    SheetField f;
    f.grid = g;
    f.seed = seed;
    f.values.assign(g.cells(), value);
    return f;
}
}  // namespace

TEST_CASE("zero sheets glue to the exact zero field") {
    SheetGrid g{8, 2.0};
    GlueResult r = glue_min(constant_field(g, 0.0), constant_field(g, 0.0));
    CHECK(r.b.grid.extent < g.extent);  // margin excluded
    for (double v : r.b.values) CHECK(v == 0.0);  // grid-exact, no tolerance
    CHECK(r.masked_fraction == 0.0);
}

TEST_CASE("constant sheets pass through: B == c1 + c2") {
    SheetGrid g{6, 1.5};
    GlueResult r = glue_min(constant_field(g, 0.7), constant_field(g, -0.2));
    for (double v : r.b.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("seeded glue matches an independent dense-scan oracle") {
    SheetGrid g{4, 1.0};
    SurrogateParams par;
    par.variance = 0.5;
    par.corr_length = 0.8;
    par.n_features = 32;
    auto ens = make_surrogate_ensemble(2024, 2, g, par);
    GlueResult r = glue_min(ens.fields[0], ens.fields[1], 1.0);

    // Oracle: direct triple loop over the half-step z grid with linear
    // interpolation, including the margin window and the mask bookkeeping.
    const int s = g.side();
    const double hs = 0.5 * g.spacing();
    const int so = r.b.grid.side();
    const int off = g.half - r.b.grid.half;
    REQUIRE(off > 0);
    for (int ox = 0; ox < so; ++ox)
        for (int oy = 0; oy < so; ++oy) {
            int ix = ox + off, iy = oy + off;
            double best = 1e300;
            int argz = -1;
            for (int z2 = 0; z2 <= 2 * (s - 1); ++z2) {
                double az = (z2 % 2 == 0)
                                ? ens.fields[0].at(ix, z2 / 2)
                                : 0.5 * (ens.fields[0].at(ix, z2 / 2) +
                                         ens.fields[0].at(ix, z2 / 2 + 1));
                double bz = (z2 % 2 == 0)
                                ? ens.fields[1].at(z2 / 2, iy)
                                : 0.5 * (ens.fields[1].at(z2 / 2, iy) +
                                         ens.fields[1].at(z2 / 2 + 1, iy));
                double z = -g.extent + z2 * hs;
                double x = g.coord(ix), y = g.coord(iy);
                double v = az + bz + (x - z) * (x - z) + (z - y) * (z - y);
                if (v < best) {
                    best = v;
                    argz = z2;
                }
            }
            double x = g.coord(ix), y = g.coord(iy);
            CHECK(r.b.at(ox, oy) == doctest::Approx(best - 0.5 * (x - y) * (x - y)).epsilon(1e-12));
            bool masked = (argz == 0 || argz == 2 * (s - 1));
            CHECK(static_cast<bool>(r.mask[static_cast<size_t>(ox) * so + oy]) == masked);
        }
}

TEST_CASE("fit_constants: targets met, affine equivariance, exact restoration") {
    Rng rng(5);
    std::vector<double> samples(400);
    for (auto& v : samples) v = rng.next_normal();
    // Force exact sample moments (0, 1).
    double m = mean_of(samples);
    double sd = std::sqrt(variance_of(samples));
    for (auto& v : samples) v = (v - m) / sd;

    RenormConstants c = fit_constants(samples, 0.0, 1.0);
    CHECK(c.c == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.delta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.mu == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    std::vector<double> affine(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) affine[i] = 2.0 * samples[i] + 3.0;
    RenormConstants ca = fit_constants(affine, 0.0, 1.0);
    CHECK(ca.delta == doctest::Approx(2.0 * c.delta).epsilon(1e-12));
    CHECK(ca.mu * ca.mu == doctest::Approx(2.0 * ca.delta).epsilon(1e-14));  // exact identity

    // Renormalized moments restored to the targets.
    std::vector<double> renorm(affine.size());
    for (size_t i = 0; i < affine.size(); ++i) renorm[i] = (affine[i] - ca.c) / ca.delta;
    CHECK(mean_of(renorm) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(variance_of(renorm) == doctest::Approx(1.0).epsilon(1e-10));

    std::vector<double> flat(200, 1.0);
    CHECK_THROWS_AS(fit_constants(flat, 0.0, 1.0), NumericError);
    std::vector<double> few(10, 1.0);
    CHECK_THROWS_AS(fit_constants(few, 0.0, 1.0), ConfigError);
}

TEST_CASE("one application of R: stationarity preserved, quadratic gauge holds") {
    SheetGrid g{10, 3.0};
    SurrogateParams par;
    par.variance = 1.0;
    par.corr_length = 1.2;
    par.n_features = 48;
    auto ens = make_surrogate_ensemble(77, 240, g, par);
    StationarityDrift din = stationarity_drift(ens);

    ApplyResult res = apply_renormalisation(ens);
    CHECK(res.constants.mu * res.constants.mu ==
          doctest::Approx(2.0 * res.constants.delta).epsilon(1e-14));
    CHECK(res.masked_fraction < 0.05);
    CHECK(res.ensemble.fields.size() == 120);

    StationarityDrift dout = stationarity_drift(res.ensemble);
    CHECK(dout.mean_drift < 2.0 * std::max(din.mean_drift, 0.15));

    // R(A)(0,0) sample moments match the targets by construction.
    const int c = res.ensemble.grid.half;
    std::vector<double> center;
    for (const auto& f : res.ensemble.fields) center.push_back(f.at(c, c));
    CHECK(std::fabs(mean_of(center)) < 0.05);
    CHECK(std::fabs(variance_of(center) - 1.0) < 0.2);

    // Unit quadratic gauge: the ensemble mean of R(A)(x, 0) + x^2 fits a
    // quadratic with coefficient 1 (the mean itself carries no x^2 term).
    const int s = res.ensemble.grid.side();
    std::vector<double> xs(s), ys(s);
    for (int ix = 0; ix < s; ++ix) {
        double x = res.ensemble.grid.coord(ix);
        double m = 0.0;
        for (const auto& f : res.ensemble.fields) m += f.at(ix, c);
        m /= static_cast<double>(res.ensemble.fields.size());
        xs[ix] = x;
        ys[ix] = m + x * x;
    }
    QuadFit qf = fit_quadratic(xs, ys);
    CHECK(std::fabs(qf.c2 - 1.0) < 0.15);
}

TEST_CASE("degenerate ensembles and domain guards") {
    SheetGrid g{6, 1.5};
    StationaryFieldEnsemble zeros;
    zeros.grid = g;
    zeros.target_mean = 0.0;
    zeros.target_variance = 1.0;
    for (int i = 0; i < 220; ++i) zeros.fields.push_back(constant_field(g, 0.0, i));
    CHECK_THROWS_AS(apply_renormalisation(zeros), NumericError);

    // Aligned strong slopes in z push every argmin to the boundary.
    SheetField tilt_a = constant_field(g, 0.0);
    SheetField tilt_b = constant_field(g, 0.0);
    const int s = g.side();
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            tilt_a.at(i, j) = -40.0 * g.coord(j);  // z is the second argument of A
            tilt_b.at(i, j) = -40.0 * g.coord(i);  // z is the first argument of A'
        }
    CHECK_THROWS_AS(glue_min(tilt_a, tilt_b, 0.05), NumericError);
}

TEST_CASE("semigroup sanity: R^2 vs one doubled glue at matched moments") {
    // Smooth enough that two R applications keep their argmins interior; the
    // mu-rescale shortens the correlation length relative to the window each
    // time, so the input starts long-ranged.
    SheetGrid g{10, 5.0};
    SurrogateParams par;
    par.variance = 0.6;
    par.corr_length = 2.2;
    par.n_features = 48;
    const int n = 2048;
    auto ens = make_surrogate_ensemble(4242, n, g, par);

    ApplyResult r1 = apply_renormalisation(ens);
    ApplyResult r2 = apply_renormalisation(r1.ensemble);
    const int c2 = r2.ensemble.grid.half;
    std::vector<double> twice;
    for (const auto& f : r2.ensemble.fields) twice.push_back(f.at(c2, c2));

    // One-shot glue of four copies at (0, 0): min over the z1, z2, z3 chain
    // with unit quadratic penalties per sub-interval. The stationary
    // compensation for the quadrupled interval vanishes at x = y = 0.
    std::vector<double> once;
    const int zmax2 = 2 * (g.side() - 1);
    const double hs = 0.5 * g.spacing();
    for (size_t q = 0; q + 3 < ens.fields.size(); q += 4) {
        const auto& a1 = ens.fields[q];
        const auto& a2 = ens.fields[q + 1];
        const auto& a3 = ens.fields[q + 2];
        const auto& a4 = ens.fields[q + 3];
        const int i0 = g.half;
        double best = 1e300;
        for (int z1 = 0; z1 <= zmax2; ++z1) {
            double c1 = -g.extent + z1 * hs;
            double s1 = a1.at_halfy(i0, z1) + c1 * c1;
            for (int z2 = 0; z2 <= zmax2; ++z2) {
                double c2v = -g.extent + z2 * hs;
                double s2 = s1 + a2.at_half2(z1, z2) + (c2v - c1) * (c2v - c1);
                for (int z3 = 0; z3 <= zmax2; ++z3) {
                    double c3 = -g.extent + z3 * hs;
                    double s3 = s2 + a3.at_half2(z2, z3) + (c3 - c2v) * (c3 - c2v) +
                                a4.at_halfx(z3, i0) + c3 * c3;
                    best = std::min(best, s3);
                }
            }
        }
        once.push_back(best);
    }
    // Normalize both samples to zero mean, unit variance and compare in law.
    auto normalize = [](std::vector<double> v) {
        double m = mean_of(v);
        double sd = std::sqrt(variance_of(v));
        for (auto& x : v) x = (x - m) / sd;
        return v;
    };
    double ks = ks_two_sample(normalize(twice), normalize(once));
    CHECK(ks < 0.1);
}
