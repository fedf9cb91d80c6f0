#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hjlab/forcing.hpp"
#include "hjlab/stats.hpp"

using namespace hjlab;

namespace {
PotentialField::Params base_params() {
    PotentialField::Params p;
    p.master_seed = 42;
    p.period = 8.0;
    p.mode = ForcingMode::fourier;
    p.n_modes = 4;
    p.amplitude = 1.0;
    return p;
}
}  // namespace

TEST_CASE("zero amplitude gives the zero field") {
    auto p = base_params();
    p.amplitude = 0.0;
    PotentialField f(p);
    Grid g(32, p.period / 32);
    for (double v : f.sample_kick(3, g)) CHECK(v == 0.0);
    for (double v : f.sample_gradient(3, g)) CHECK(v == 0.0);
}

TEST_CASE("same (seed, kick, grid) twice is bit-identical") {
    PotentialField f(base_params());
    Grid g(64, 8.0 / 64);
    auto a = f.sample_kick(7, g);
    auto b = f.sample_kick(7, g);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("single mode matches the closed-form cosine at the nodes") {
    auto p = base_params();
    p.n_modes = 1;
    PotentialField f(p);
    Grid g(8, p.period / 8);
    auto kick = f.sample_kick(5, g);
    auto grad = f.sample_gradient(5, g);

    // Oracle: re-draw the documented coefficient sequence and evaluate the
    // trigonometric polynomial directly.
    uint64_t key = substream(p.master_seed, 0x466f726365ULL);
    key = substream(key, zigzag(5));
    key = substream(key, 0);
    Rng rng(key);
    double a1 = p.amplitude * rng.next_normal();
    double b1 = p.amplitude * rng.next_normal();
    double w = 2.0 * M_PI / p.period;
    for (int i = 0; i < 8; ++i) {
        double x = g.x(i);
        CHECK(kick[i] == doctest::Approx(a1 * std::cos(w * x) + b1 * std::sin(w * x)).epsilon(1e-12));
        CHECK(grad[i] ==
              doctest::Approx(w * (-a1 * std::sin(w * x) + b1 * std::cos(w * x))).epsilon(1e-12));
    }
}

TEST_CASE("gradient integrates to zero over the period") {
    PotentialField f(base_params());
    Grid g(128, 8.0 / 128);
    auto grad = f.sample_gradient(11, g);
    double s = 0.0;
    for (double v : grad) s += v * g.h;
    CHECK(std::fabs(s) < 1e-10);
}

TEST_CASE("grid/period mismatch is a configuration error") {
    PotentialField f(base_params());
    Grid g(32, 0.33);
    CHECK_THROWS_AS(f.sample_kick(0, g), ConfigError);
}

TEST_CASE("distinct kicks are uncorrelated within 3 SE") {
    PotentialField f(base_params());
    Grid g(16, 8.0 / 16);
    const int n = 1000;
    std::vector<double> u(n), v(n);
    for (int i = 0; i < n; ++i) {
        u[i] = f.sample_kick(2 * i, g)[3];
        v[i] = f.sample_kick(2 * i + 1, g)[3];
    }
    double mu = mean_of(u), mv = mean_of(v);
    double num = 0, du = 0, dv = 0;
    for (int i = 0; i < n; ++i) {
        num += (u[i] - mu) * (v[i] - mv);
        du += (u[i] - mu) * (u[i] - mu);
        dv += (v[i] - mv) * (v[i] - mv);
    }
    double corr = num / std::sqrt(du * dv);
    CHECK(std::fabs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("spatial autocovariance is translation invariant within MC error") {
    PotentialField f(base_params());
    Grid g(32, 8.0 / 32);
    const int n = 1000;
    const int lag = 4;
    std::vector<double> c0(n), c1(n);
    for (int i = 0; i < n; ++i) {
        auto k = f.sample_kick(i, g);
        c0[i] = k[0] * k[lag];
        c1[i] = k[9] * k[(9 + lag) % g.n];
    }
    double gap = std::fabs(mean_of(c0) - mean_of(c1));
    double se = std::hypot(stderr_of_mean(c0), stderr_of_mean(c1));
    CHECK(gap < 4.0 * se);
}

TEST_CASE("shear pair: identity, inverse, and matched second moments") {
    PotentialField f(base_params());
    Grid g(32, 8.0 / 32);

    PotentialField id = f.make_shear_pair(0.0);
    auto a = f.sample_kick(4, g);
    auto b = id.sample_kick(4, g);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));

    PotentialField round_trip = f.make_shear_pair(0.7).make_shear_pair(-0.7);
    auto c = round_trip.sample_kick(4, g);
    for (size_t i = 0; i < a.size(); ++i) CHECK(c[i] == doctest::Approx(a[i]).epsilon(1e-12));

    // Ensemble second moment at a fixed node, sheared vs unsheared.
    PotentialField sheared = f.make_shear_pair(0.3);
    const int n = 1000;
    std::vector<double> m0(n), m1(n);
    for (int i = 0; i < n; ++i) {
        m0[i] = f.sample_kick(i, g)[5] * f.sample_kick(i, g)[5];
        m1[i] = sheared.sample_kick(i, g)[5] * sheared.sample_kick(i, g)[5];
    }
    double gap = std::fabs(mean_of(m0) - mean_of(m1));
    double se = std::hypot(stderr_of_mean(m0), stderr_of_mean(m1));
    CHECK(gap < 3.0 * se);
}

TEST_CASE("bump mode: zero mean, C2 on the grid, shear unsupported") {
    auto p = base_params();
    p.mode = ForcingMode::bumps;
    p.bump_count = 12.0;
    p.bump_width = 0.2;
    PotentialField f(p);
    Grid g(256, 8.0 / 256);
    auto kick = f.sample_kick(2, g);
    double mean = 0.0;
    for (double v : kick) mean += v;
    CHECK(std::fabs(mean / g.n) < 1e-12);
    // Finite second differences stay bounded by the analytic curvature scale.
    double bound = p.amplitude * p.bump_count * 3.0 / (p.bump_width * p.bump_width);
    for (int i = 0; i < g.n; ++i) {
        double d2 = (kick[(i + 1) % g.n] - 2 * kick[i] + kick[(i - 1 + g.n) % g.n]) / (g.h * g.h);
        CHECK(std::fabs(d2) < bound);
    }
    CHECK_THROWS_AS(f.make_shear_pair(0.5), ConfigError);
}
