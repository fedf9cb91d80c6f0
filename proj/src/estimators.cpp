#include "hjlab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "hjlab/geometry.hpp"
#include "hjlab/hj_viscous.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

namespace {

constexpr double kPointInitSentinel = 1e12;

std::vector<double> log_spaced_edges(double lo, double hi, int bins) {
    std::vector<double> e(bins + 1);
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i <= bins; ++i) e[i] = std::exp(llo + (lhi - llo) * i / bins);
    return e;
}

}  // namespace

ExponentEstimate scan_loglog_fit(std::span<const double> x, std::span<const double> y,
                                 size_t min_points, double min_span_ratio,
                                 const std::string& name) {
    if (x.size() != y.size() || x.size() < min_points)
        throw ConfigError("scan_loglog_fit: not enough points");
    std::vector<double> lx, ly, rx;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
        rx.push_back(x[i]);
    }
    if (lx.size() < min_points) throw InsufficientStatistics("scan_loglog_fit: too few usable points");

    ExponentEstimate best;
    best.name = name;
    double best_r2 = -1.0;
    for (size_t lo = 0; lo + min_points <= lx.size(); ++lo) {
        for (size_t hi = lo + min_points - 1; hi < lx.size(); ++hi) {
            if (rx[hi] < min_span_ratio * rx[lo]) continue;
            std::span<const double> sx(lx.data() + lo, hi - lo + 1);
            std::span<const double> sy(ly.data() + lo, hi - lo + 1);
            LineFit f = fit_line(sx, sy);
            if (f.r2 > best_r2) {
                best_r2 = f.r2;
                best.value = f.slope;
                best.se = f.slope_se;
                best.fit_lo = rx[lo];
                best.fit_hi = rx[hi];
                best.r2 = f.r2;
                best.n_points = static_cast<int>(hi - lo + 1);
            }
        }
    }
    if (best_r2 < 0.0) throw InsufficientStatistics("scan_loglog_fit: no window spans the ratio");
    return best;
}

// ---------------------------------------------------------------------------
// Shape function
// ---------------------------------------------------------------------------

namespace {

double point_to_point_inviscid(const std::vector<std::vector<double>>& kicks,
                               const HamiltonianSpec& ham, const Grid& grid, double a, int T) {
    SolutionField state(grid, 0.0, 0);
    std::fill(state.psi.begin(), state.psi.end(), kPointInitSentinel);
    int start = grid.nearest_node(grid.wrap_pos(-a * T));
    state.psi[start] = 0.0;
    StepOptions opt;
    for (int k = 1; k <= T; ++k) state = lax_oleinik_step(state, kicks[k - 1], ham, opt);
    return state.psi[0];
}

double point_to_point_viscous(const std::vector<std::vector<double>>& kicks, const Grid& grid,
                              double a, int T, double nu, double a_max) {
    ViscousConfig cfg;
    cfg.nu = nu;
    cfg.grid = grid;
    cfg.dt = 1.0;
    cfg.kernel_mode = HeatKernelMode::lattice;
    // Point initial data with a finite floor: deep enough that floored mass
    // cannot compete near the transport cone, shallow enough to keep the
    // convolution window bounded.
    double floor_log = -(static_cast<double>(T) * (a_max + 1.0) * (a_max + 1.0) / (4.0 * nu) + 300.0);
    PartitionField z(grid, 0);
    std::fill(z.log_z.begin(), z.log_z.end(), floor_log);
    int start = grid.nearest_node(grid.wrap_pos(-a * T));
    z.log_z[start] = 0.0;
    for (int k = 1; k <= T; ++k) {
        z = heat_step(z, cfg);
        z = kick_step(z, kicks[k - 1], cfg);
    }
    return -2.0 * nu * z.total_log_z(0);
}

}  // namespace

ShapeFunctionEstimate estimate_shape(const ShapeParams& par, const HamiltonianSpec& ham,
                                     std::span<const double> a_grid) {
    if (a_grid.empty()) throw ConfigError("estimate_shape: empty slope grid");
    if (par.replicas < 2) throw ConfigError("estimate_shape: need >= 2 replicas");
    double a_max = 0.0;
    for (double a : a_grid) a_max = std::max(a_max, std::fabs(a));
    if (2.0 * a_max * par.T >= par.grid.period())
        throw ConfigError("estimate_shape: period too small for the slope range (wrap)");

    const size_t na = a_grid.size();
    std::vector<std::vector<double>> samples(na, std::vector<double>(par.replicas));
    parallel_for(par.replicas, par.workers, [&](int r) {
        PotentialField::Params fp = par.forcing;
        fp.replica = r;
        PotentialField field(fp);
        // One forcing realization per replica, shared across all slopes.
        std::vector<std::vector<double>> kicks(par.T);
        for (int k = 1; k <= par.T; ++k) kicks[k - 1] = field.sample_kick(k, par.grid);
        for (size_t ia = 0; ia < na; ++ia) {
            double action = par.nu == 0.0
                                ? point_to_point_inviscid(kicks, ham, par.grid, a_grid[ia], par.T)
                                : point_to_point_viscous(kicks, par.grid, a_grid[ia], par.T,
                                                         par.nu, a_max);
            samples[ia][r] = action / par.T;
        }
    });

    ShapeFunctionEstimate est;
    est.nu = par.nu;
    est.slopes.assign(a_grid.begin(), a_grid.end());
    est.s_hat.resize(na);
    est.s_se.resize(na);
    for (size_t ia = 0; ia < na; ++ia) {
        est.s_hat[ia] = mean_of(samples[ia]);
        est.s_se[ia] = stderr_of_mean(samples[ia]);
    }
    QuadFit qf = fit_quadratic(est.slopes, est.s_hat);
    est.s0 = qf.c0;
    est.curvature = 2.0 * qf.c2;  // S ~ s0 + kappa a^2/2
    est.curvature_se = 2.0 * qf.c2_se;
    est.fit_r2 = qf.r2;
    return est;
}

LegendreResult legendre_transform(std::span<const double> a_grid, std::span<const double> s_values,
                                  std::span<const double> s_se, std::span<const double> b_grid) {
    if (a_grid.size() != s_values.size() || a_grid.size() < 2)
        throw ConfigError("legendre_transform: need matched a/S arrays with >= 2 points");
    std::vector<size_t> hull = lower_convex_hull(a_grid, s_values);

    LegendreResult res;
    // Flag points lifted above the hull by more than 3 SE.
    for (size_t i = 0; i < a_grid.size(); ++i) {
        // Hull value at a_i by linear interpolation between hull vertices.
        size_t seg = 0;
        while (seg + 1 < hull.size() && a_grid[hull[seg + 1]] < a_grid[i]) ++seg;
        double hv;
        if (seg + 1 >= hull.size()) {
            hv = s_values[hull.back()];
        } else {
            double a0 = a_grid[hull[seg]], a1 = a_grid[hull[seg + 1]];
            double t = (a_grid[i] - a0) / (a1 - a0);
            hv = (1 - t) * s_values[hull[seg]] + t * s_values[hull[seg + 1]];
        }
        double tol = s_se.empty() ? 1e-9 * (1.0 + std::fabs(s_values[i])) : 3.0 * s_se[i];
        if (s_values[i] - hv > tol) res.hull_adjusted = true;
    }

    double slope_min = (s_values[hull[1]] - s_values[hull[0]]) / (a_grid[hull[1]] - a_grid[hull[0]]);
    double slope_max = (s_values[hull[hull.size() - 1]] - s_values[hull[hull.size() - 2]]) /
                       (a_grid[hull[hull.size() - 1]] - a_grid[hull[hull.size() - 2]]);
    for (double b : b_grid) {
        if (b < slope_min - 1e-12 || b > slope_max + 1e-12)
            throw ConfigError("legendre_transform: requested b outside the covered slope range");
        double best = -std::numeric_limits<double>::infinity();
        double arg = a_grid[hull[0]];
        for (size_t k : hull) {
            double v = b * a_grid[k] - s_values[k];
            if (v > best) {
                best = v;
                arg = a_grid[k];
            }
        }
        res.b_grid.push_back(b);
        res.h_eff.push_back(best);
        res.a_of_b.push_back(arg);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Scaling survey (xi, chi)
// ---------------------------------------------------------------------------

ScalingSurvey run_scaling_survey(const ScalingSurveyParams& par, const HamiltonianSpec& ham) {
    if (par.t_list.empty() || par.replicas < 2)
        throw ConfigError("scaling survey: need depths and >= 2 replicas");
    int t_max = par.t_list.back();
    for (size_t i = 1; i < par.t_list.size(); ++i)
        if (par.t_list[i] <= par.t_list[i - 1])
            throw ConfigError("scaling survey: t_list must be ascending");
    double guard = 8.0 * std::pow(static_cast<double>(t_max), 2.0 / 3.0);
    if (par.grid.period() < guard)
        throw ConfigError("scaling survey: period below 8 T^{2/3} (enlarge P)");

    const size_t nt = par.t_list.size();
    ScalingSurvey sv;
    sv.t_list = par.t_list;
    sv.period = par.grid.period();
    sv.median_disp.assign(nt, std::vector<double>(par.replicas, 0.0));
    sv.action_at_origin.assign(nt, std::vector<double>(par.replicas, 0.0));
    sv.dot_density.assign(nt, std::vector<double>(par.replicas, 0.0));

    parallel_for(par.replicas, par.workers, [&](int r) {
        PotentialField::Params fp = par.forcing;
        fp.replica = r;
        PotentialField field(fp);
        const Grid& g = par.grid;
        SolutionField state(g, 0.0, 0);
        std::vector<SolutionField> shells(t_max + 1);
        shells[0] = state;
        StepOptions opt;
        for (int s = 1; s <= t_max; ++s) {
            std::vector<double> kick = field.sample_kick(s, g);
            state = lax_oleinik_step(state, kick, ham, opt);
            SolutionField shell;
            shell.grid = g;
            shell.time_index = s;
            shell.backptr = state.backptr;
            shell.has_backptr = true;
            shells[s] = std::move(shell);
            auto it = std::find(par.t_list.begin(), par.t_list.end(), s);
            if (it != par.t_list.end())
                sv.action_at_origin[it - par.t_list.begin()][r] = state.psi[0];
        }

        // Composed backward traces from the final time, harvested at each depth.
        std::vector<int64_t> cur(g.n);
        for (int i = 0; i < g.n; ++i) cur[i] = i;
        size_t next_t = 0;
        for (int depth = 1; depth <= t_max; ++depth) {
            int s = t_max - depth + 1;  // field whose backptr maps s -> s-1
            for (int i = 0; i < g.n; ++i) {
                int node = g.wrap(cur[i]);
                cur[i] = (cur[i] - node) + shells[s].backptr[node];
            }
            if (next_t < nt && par.t_list[next_t] == depth) {
                std::vector<double> disp;
                for (int i = 0; i < g.n; i += par.endpoint_stride) {
                    double d = std::fabs(static_cast<double>(cur[i] - i)) * g.h;
                    if (d > 0.5 * g.period())
                        throw NumericError("scaling survey: period wrap detected (enlarge P)");
                    disp.push_back(d);
                }
                sv.median_disp[next_t][r] = median_of(disp);
                ExtractResult ex = extract_strip(shells, t_max, t_max - depth);
                sv.dot_density[next_t][r] = ex.strip.count() / ex.strip.period;
                ++next_t;
            }
        }
    });
    return sv;
}

XiEstimate estimate_xi(const ScalingSurvey& survey) {
    const size_t nt = survey.t_list.size();
    std::vector<double> t(nt), med(nt), dens(nt);
    for (size_t k = 0; k < nt; ++k) {
        t[k] = survey.t_list[k];
        med[k] = mean_of(survey.median_disp[k]);
        dens[k] = mean_of(survey.dot_density[k]);
    }
    XiEstimate xi;
    xi.displacement_route = scan_loglog_fit(t, med, std::min<size_t>(nt, 4), 8.0, "xi");
    // Density decays as T^{-xi}; report +xi.
    xi.density_route = scan_loglog_fit(t, dens, std::min<size_t>(nt, 4), 8.0, "xi_density");
    xi.density_route.value = -xi.density_route.value;
    double gap = std::fabs(xi.displacement_route.value - xi.density_route.value);
    double joint = std::hypot(xi.displacement_route.se, xi.density_route.se);
    xi.routes_consistent = gap <= 2.0 * joint;
    return xi;
}

ExponentEstimate estimate_chi(const ScalingSurvey& survey) {
    const size_t nt = survey.t_list.size();
    std::vector<double> t(nt), var(nt);
    for (size_t k = 0; k < nt; ++k) {
        t[k] = survey.t_list[k];
        var[k] = variance_of(survey.action_at_origin[k]);
    }
    ExponentEstimate est = scan_loglog_fit(t, var, std::min<size_t>(nt, 4), 8.0, "chi");
    est.value *= 0.5;  // Var ~ T^{2 chi}
    est.se *= 0.5;
    est.name = "chi";
    return est;
}

// ---------------------------------------------------------------------------
// Sigma
// ---------------------------------------------------------------------------

SigmaEstimate estimate_sigma(const std::vector<std::vector<double>>& phi_profiles,
                             const Grid& grid, std::span<const double> windows) {
    if (phi_profiles.size() < 2) throw ConfigError("estimate_sigma: need >= 2 replica profiles");
    if (windows.empty()) throw ConfigError("estimate_sigma: empty window list");
    std::vector<double> w_len, var_mean;
    std::vector<double> largest_increments;
    double wmax = *std::max_element(windows.begin(), windows.end());
    for (double w : windows) {
        int wn = std::max(1, static_cast<int>(std::llround(w / grid.h)));
        if (2 * wn >= grid.n) throw ConfigError("estimate_sigma: window exceeds half the period");
        std::vector<double> per_replica;
        for (const auto& prof : phi_profiles) {
            // Non-overlapping increments within the replica.
            std::vector<double> inc;
            for (int i = 0; i + wn < grid.n; i += wn) inc.push_back(prof[i + wn] - prof[i]);
            if (inc.size() >= 2) per_replica.push_back(variance_of(inc));
            if (w == wmax)
                for (double v : inc) largest_increments.push_back(v);
        }
        w_len.push_back(static_cast<double>(wn) * grid.h);
        var_mean.push_back(mean_of(per_replica));
    }
    LineFit f = fit_line(w_len, var_mean);
    if (f.slope <= 0.0) throw NumericError("estimate_sigma: nonpositive variance growth");
    SigmaEstimate est;
    est.fit.name = "sigma";
    est.fit.value = std::sqrt(f.slope);
    est.fit.se = f.slope_se / (2.0 * std::sqrt(f.slope));
    est.fit.fit_lo = w_len.front();
    est.fit.fit_hi = w_len.back();
    est.fit.r2 = f.r2;
    est.fit.n_points = static_cast<int>(w_len.size());
    est.linear_r2 = f.r2;
    double m = mean_of(largest_increments);
    double sd = std::sqrt(variance_of(largest_increments));
    est.ks_gaussian = ks_against_cdf(largest_increments,
                                     [&](double v) { return normal_cdf((v - m) / sd); });
    return est;
}

// ---------------------------------------------------------------------------
// Shock ages
// ---------------------------------------------------------------------------

AgeSurvey run_age_survey(const AgeSurveyParams& par, const HamiltonianSpec& ham) {
    if (par.horizon <= par.burn_in) throw ConfigError("age survey: horizon must exceed burn-in");
    double base_radius = par.merge_radius > 0.0 ? par.merge_radius : 8.0 * par.grid.h;

    // Nearest-assignment birth inheritance without the public op's global
    // gap guard: crowded frames always hold one near-merging pair, and that
    // must not reset every other track. Matching is against the position
    // advanced at the Rankine-Hugoniot speed (u_l + u_r)/2, which keeps
    // identities over long lives. Occasional swaps between neighbors relabel
    // tracks but leave the pooled age population intact.
    auto inherit_births = [](const std::vector<ShockRecord>& prev, std::vector<ShockRecord> next,
                             double radius, const Grid& grid, double dt) {
        for (const auto& p : prev) {
            double predicted = grid.wrap_pos(p.position + 0.5 * (p.left_u + p.right_u) * dt);
            double dbest = std::numeric_limits<double>::infinity();
            size_t ibest = 0;
            for (size_t i = 0; i < next.size(); ++i) {
                double d = grid.dist(predicted, next[i].position);
                if (d < dbest) {
                    dbest = d;
                    ibest = i;
                }
            }
            if (!next.empty() && dbest <= radius)
                next[ibest].birth_time = std::min(next[ibest].birth_time, p.birth_time);
        }
        return next;
    };

    std::vector<std::vector<double>> pools(par.replicas);
    std::vector<double> births(par.replicas, 0.0), deaths(par.replicas, 0.0);
    parallel_for(par.replicas, par.workers, [&](int r) {
        PotentialField::Params fp = par.forcing;
        fp.replica = r;
        PotentialField field(fp);
        const Grid& g = par.grid;
        SolutionField state(g, 0.0, 0);
        StepOptions opt;
        std::vector<ShockRecord> live;
        for (int s = 1; s <= par.horizon; ++s) {
            std::vector<double> kick = field.sample_kick(s, g);
            state = lax_oleinik_step(state, kick, ham, opt);
            std::vector<ShockRecord> next = detect_shocks(state, opt.dt, par.jump_threshold_cells);
            std::vector<ShockRecord> tracked =
                inherit_births(live, std::move(next), base_radius, g, opt.dt);
            if (s > par.burn_in) {
                int newborn = 0;
                for (const auto& sh : tracked)
                    if (sh.birth_time == sh.current_time) ++newborn;
                births[r] += newborn;
                deaths[r] += static_cast<double>(live.size()) + newborn -
                             static_cast<double>(tracked.size());
                if ((s - par.burn_in) % par.obs_stride == 0) {
                    for (const auto& sh : tracked) {
                        double age = static_cast<double>(sh.age());
                        if (age < 1.0) continue;
                        if (par.censor_half_horizon && age >= 0.5 * (par.horizon - par.burn_in))
                            continue;
                        pools[r].push_back(age);
                    }
                }
            }
            live = std::move(tracked);
        }
    });

    AgeSurvey out;
    out.horizon = par.horizon;
    double steps = par.horizon - par.burn_in;
    for (int r = 0; r < par.replicas; ++r) {
        out.ages.insert(out.ages.end(), pools[r].begin(), pools[r].end());
        out.birth_rate += births[r] / steps / par.replicas;
        out.death_rate += deaths[r] / steps / par.replicas;
    }
    return out;
}

AgeTailResult age_tail_fit(std::span<const double> ages, double min_age, int bins,
                           double min_span_ratio) {
    std::vector<double> tail;
    for (double a : ages)
        if (a >= min_age) tail.push_back(a);
    if (tail.size() < 100)
        throw InsufficientStatistics("age_tail_fit: fewer than 100 tail events");
    double amax = *std::max_element(tail.begin(), tail.end());
    std::vector<double> edges = log_spaced_edges(min_age, amax * (1.0 + 1e-9), bins);
    std::vector<double> centers, density;
    for (int b = 0; b < bins; ++b) {
        int count = 0;
        for (double a : tail)
            if (a >= edges[b] && a < edges[b + 1]) ++count;
        if (count < 5) continue;
        centers.push_back(std::sqrt(edges[b] * edges[b + 1]));
        density.push_back(count / (edges[b + 1] - edges[b]));
    }
    if (centers.size() < 5) throw InsufficientStatistics("age_tail_fit: too few occupied bins");

    AgeTailResult res;
    res.n_tail_events = static_cast<int>(tail.size());
    res.tail = scan_loglog_fit(centers, density, 5, min_span_ratio, "age_tail");

    // Curvature test on the full binned range: a significant quadratic term in
    // log-log rejects a pure power law.
    std::vector<double> lx(centers.size()), ly(centers.size());
    for (size_t i = 0; i < centers.size(); ++i) {
        lx[i] = std::log(centers[i]);
        ly[i] = std::log(density[i]);
    }
    QuadFit qf = fit_quadratic(lx, ly);
    double z = qf.c2_se > 0.0 ? qf.c2 / qf.c2_se : 0.0;
    res.curvature_p = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    res.power_law_rejected = res.curvature_p < 0.05;
    return res;
}

// ---------------------------------------------------------------------------
// Lyapunov contraction
// ---------------------------------------------------------------------------

LyapunovResult estimate_lyapunov(const LyapunovParams& par, const HamiltonianSpec& ham) {
    if (par.separations.empty()) throw ConfigError("lyapunov: need separations");
    const Grid& g = par.grid;
    std::vector<std::vector<double>> lambda_samples(par.replicas);
    std::vector<std::vector<std::pair<double, double>>> onset_samples(par.replicas);

    parallel_for(par.replicas, par.workers, [&](int r) {
        PotentialField::Params fp = par.forcing;
        fp.replica = r;
        PotentialField field(fp);
        SolutionField state(g, 0.0, 0);
        StepOptions opt;
        std::vector<std::vector<int32_t>> bp(par.depth + 1);
        for (int s = 1; s <= par.depth; ++s) {
            std::vector<double> kick = field.sample_kick(s, g);
            state = lax_oleinik_step(state, kick, ham, opt);
            bp[s] = state.backptr;
        }
        Rng rng(substream(fp.master_seed, 0x4c7961ULL + r));
        for (double L : par.separations) {
            int off = std::max(1, static_cast<int>(std::llround(L / g.h)));
            for (int p = 0; p < par.pairs_per_l; ++p) {
                int x0 = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(g.n));
                int64_t a = x0, b = x0 + off;
                std::vector<double> dist(par.depth + 1);
                dist[0] = off * g.h;
                int onset = -1;
                for (int depth = 1; depth <= par.depth; ++depth) {
                    int s = par.depth - depth + 1;
                    int na = g.wrap(a), nb = g.wrap(b);
                    a = (a - na) + bp[s][na];
                    b = (b - nb) + bp[s][nb];
                    double d = std::fabs(static_cast<double>(b - a)) * g.h;
                    dist[depth] = d;
                    if (onset < 0 && d <= 0.5 * L) onset = depth;
                }
                if (dist[1] == 0.0) continue;  // merged within one step: L too small
                if (onset < 0) continue;       // never entered the contraction regime
                onset_samples[r].emplace_back(L, static_cast<double>(onset));
                // Exponential regime: log distance vs depth past the onset.
                std::vector<double> xs, ys;
                for (int depth = onset; depth <= par.depth && dist[depth] > 0.0; ++depth) {
                    xs.push_back(static_cast<double>(depth));
                    ys.push_back(std::log(dist[depth]));
                }
                if (xs.size() >= 3) {
                    LineFit f = fit_line(xs, ys);
                    if (f.slope < 0.0) lambda_samples[r].push_back(-f.slope);
                }
            }
        }
    });

    std::vector<double> lambdas;
    std::vector<double> lx, ly;
    for (int r = 0; r < par.replicas; ++r) {
        lambdas.insert(lambdas.end(), lambda_samples[r].begin(), lambda_samples[r].end());
        for (auto& [L, T] : onset_samples[r]) {
            lx.push_back(std::log(L));
            ly.push_back(std::log(T));
        }
    }
    if (lambdas.size() < 4) throw InsufficientStatistics("lyapunov: too few usable pairs");
    LyapunovResult res;
    res.n_pairs = static_cast<int>(lambdas.size());
    res.lambda.name = "lyapunov";
    res.lambda.value = mean_of(lambdas);
    res.lambda.se = stderr_of_mean(lambdas);
    res.lambda.n_points = res.n_pairs;
    LineFit f = fit_line(lx, ly);
    res.onset_exponent.name = "onset_exponent";
    res.onset_exponent.value = f.slope;
    res.onset_exponent.se = f.slope_se;
    res.onset_exponent.r2 = f.r2;
    res.onset_exponent.n_points = static_cast<int>(lx.size());
    return res;
}

}  // namespace hjlab
