#include "hjlab/hj_inviscid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shared step machinery. The argmin runs over lifted node indices j, with
// displacement d = (i - j) h measured on the universal cover; psi is read
// modulo n. The displacement kernel
//     kern(r) = dt L(r h / dt) - b (r h)
// is convex in r, which makes the cost matrix inverse-Monge and the leftmost
// argmin nondecreasing in i (minimisers cannot cross).
struct StepKernel {
    int n;
    double h;
    int center;  // round(grad H(b) dt / h): kernel minimum in node units
    int halfw;   // band half width in nodes
    int rmin;
    std::vector<double> values;  // kern(r), r in [rmin, rmin + size)

    StepKernel(const SolutionField& state, const HamiltonianSpec& ham, const StepOptions& opt) {
        n = state.grid.n;
        h = state.grid.h;
        double dt = opt.dt;
        double dstar = ham.velocity(state.slope_b) * dt;
        center = static_cast<int>(std::llround(dstar / h));
        // Half a period on either side of the drift covers the cost-optimal
        // lift of every residue class, so the band search is exact.
        halfw = n / 2 + 1;
        rmin = center - halfw;
        values.resize(2 * halfw + 1);
        for (int r = rmin; r <= center + halfw; ++r) {
            double d = r * h;
            values[r - rmin] = dt * ham.lagrangian(d / dt) - state.slope_b * d;
        }
    }
    double kern(int64_t r) const { return values[static_cast<size_t>(r - rmin)]; }
};

void finalize_step(SolutionField& out, const SolutionField& state, std::span<const double> kick,
                   const std::vector<double>& best, const StepKernel& sk, const StepOptions& opt) {
    const int n = state.grid.n;
    out.grid = state.grid;
    out.time_index = state.time_index + 1;
    out.slope_b = state.slope_b;
    out.psi.resize(n);
    for (int i = 0; i < n; ++i) out.psi[i] = best[i] - kick[i];
    out.has_backptr = true;

    // Monotone lift sanity; violations would mean the kernel was not convex.
    for (int i = 0; i + 1 < n; ++i)
        if (out.backptr[i + 1] < out.backptr[i])
            throw NumericError("lax_oleinik_step: backpointer monotonicity violated");
    if (opt.check_resolution) {
        for (int i = 0; i < n; ++i) {
            double d = (static_cast<double>(i) - out.backptr[i]) * sk.h;
            if (std::fabs(d - sk.center * sk.h) > 0.5 * state.grid.period() + sk.h)
                throw NumericError("lax_oleinik_step: argmin window exceeds period/2 (dt too large)");
        }
    }
}

}  // namespace

SolutionField lax_oleinik_step(const SolutionField& state, std::span<const double> kick,
                               const HamiltonianSpec& ham, const StepOptions& opt) {
    const int n = state.grid.n;
    if (static_cast<int>(kick.size()) != n)
        throw ConfigError("lax_oleinik_step: kick array does not match the grid");
    StepKernel sk(state, ham, opt);
    const std::vector<double>& psi = state.psi;
    const Grid& g = state.grid;

    SolutionField out;
    out.backptr.assign(n, 0);
    std::vector<double> best(n, kInf);

    auto cost = [&](int i, int64_t j) {
        return psi[g.wrap(j)] + sk.kern(static_cast<int64_t>(i) - j);
    };

    // Divide and conquer over rows; argmin bounds inherited from neighbors.
    auto solve = [&](auto&& self, int lo, int hi, int64_t jlo, int64_t jhi) -> void {
        if (lo > hi) return;
        int mid = lo + (hi - lo) / 2;
        int64_t a = std::max<int64_t>(jlo, static_cast<int64_t>(mid) - sk.center - sk.halfw);
        int64_t b = std::min<int64_t>(jhi, static_cast<int64_t>(mid) - sk.center + sk.halfw);
        double bv = kInf;
        int64_t ba = a;
        for (int64_t j = a; j <= b; ++j) {
            double v = cost(mid, j);
            if (v < bv) {
                bv = v;
                ba = j;
            }
        }
        best[mid] = bv;
        out.backptr[mid] = static_cast<int32_t>(ba);
        self(self, lo, mid - 1, jlo, ba);
        self(self, mid + 1, hi, ba, jhi);
    };
    solve(solve, 0, n - 1, -static_cast<int64_t>(sk.center) - sk.halfw,
          static_cast<int64_t>(n - 1) - sk.center + sk.halfw);

    finalize_step(out, state, kick, best, sk, opt);
    return out;
}

SolutionField lax_oleinik_step_dense(const SolutionField& state, std::span<const double> kick,
                                     const HamiltonianSpec& ham, const StepOptions& opt) {
    const int n = state.grid.n;
    if (static_cast<int>(kick.size()) != n)
        throw ConfigError("lax_oleinik_step_dense: kick array does not match the grid");
    StepKernel sk(state, ham, opt);
    const Grid& g = state.grid;

    SolutionField out;
    out.backptr.assign(n, 0);
    std::vector<double> best(n, kInf);
    for (int i = 0; i < n; ++i) {
        int64_t a = static_cast<int64_t>(i) - sk.center - sk.halfw;
        int64_t b = static_cast<int64_t>(i) - sk.center + sk.halfw;
        double bv = kInf;
        int64_t ba = a;
        for (int64_t j = a; j <= b; ++j) {
            double v = state.psi[g.wrap(j)] + sk.kern(static_cast<int64_t>(i) - j);
            if (v < bv) {
                bv = v;
                ba = j;
            }
        }
        best[i] = bv;
        out.backptr[i] = static_cast<int32_t>(ba);
    }
    finalize_step(out, state, kick, best, sk, opt);
    return out;
}

// ---------------------------------------------------------------------------

MinimiserTrace trace_minimiser(std::span<const SolutionField> fields, double endpoint_x,
                               const HamiltonianSpec& ham, double dt, double eps_tie) {
    if (fields.size() < 2) throw ConfigError("trace_minimiser: need at least two stored fields");
    for (size_t k = 1; k < fields.size(); ++k)
        if (!fields[k].has_backptr)
            throw ConfigError("trace_minimiser: field missing backpointers");
    const SolutionField& last = fields.back();
    const Grid& g = last.grid;
    int i0 = g.nearest_node(endpoint_x);

    auto walk = [&](int64_t start_lift) {
        MinimiserPath p;
        p.endpoint_x = g.x(g.wrap(start_lift));
        p.endpoint_time = last.time_index;
        p.positions.reserve(fields.size());
        int64_t jl = start_lift;
        p.positions.push_back(jl * g.h);
        for (size_t k = fields.size() - 1; k >= 1; --k) {
            int node = g.wrap(jl);
            int64_t lift_base = jl - node;
            jl = lift_base + fields[k].backptr[node];
            p.positions.push_back(jl * g.h);
        }
        const SolutionField& first = fields.front();
        double phi_end = last.slope_b * (start_lift * g.h) + last.psi[g.wrap(start_lift)];
        double phi_start = first.slope_b * (jl * g.h) + first.psi[g.wrap(jl)];
        p.action = phi_end - phi_start;
        return p;
    };

    MinimiserTrace tr;
    tr.path = walk(i0);

    // Tie scan at the endpoint: rerun the final step's cost row and look for a
    // second argmin within eps_tie of the best.
    const SolutionField& prev = fields[fields.size() - 2];
    StepOptions opt;
    opt.dt = dt;
    StepKernel sk(prev, ham, opt);
    int64_t a = static_cast<int64_t>(i0) - sk.center - sk.halfw;
    int64_t b = static_cast<int64_t>(i0) - sk.center + sk.halfw;
    double best = kInf, second = kInf;
    int64_t jbest = a, jsecond = a;
    for (int64_t j = a; j <= b; ++j) {
        double v = prev.psi[g.wrap(j)] + sk.kern(static_cast<int64_t>(i0) - j);
        if (v < best) {
            second = best;
            jsecond = jbest;
            best = v;
            jbest = j;
        } else if (v < second) {
            second = v;
            jsecond = j;
        }
    }
    double scale = std::max(1.0, std::fabs(best));
    if (std::isfinite(second) && second - best <= eps_tie * scale && jsecond != jbest) {
        tr.ambiguous = true;
        MinimiserPath alt;
        alt.endpoint_x = tr.path.endpoint_x;
        alt.endpoint_time = tr.path.endpoint_time;
        alt.positions.push_back(static_cast<double>(i0) * g.h);
        int64_t jl = jsecond;
        alt.positions.push_back(jl * g.h);
        for (size_t k = fields.size() - 2; k >= 1; --k) {
            int node = g.wrap(jl);
            int64_t lift_base = jl - node;
            jl = lift_base + fields[k].backptr[node];
            alt.positions.push_back(jl * g.h);
        }
        const SolutionField& first = fields.front();
        double phi_end = last.slope_b * (i0 * g.h) + last.psi[i0];
        double phi_start = first.slope_b * (jl * g.h) + first.psi[g.wrap(jl)];
        alt.action = phi_end - phi_start;
        tr.secondary = std::move(alt);
    }
    return tr;
}

// ---------------------------------------------------------------------------

std::vector<ShockRecord> detect_shocks(const SolutionField& state, double dt,
                                       double jump_threshold_cells) {
    if (!state.has_backptr) throw ConfigError("detect_shocks: backpointers not populated");
    const Grid& g = state.grid;
    const int n = g.n;
    std::vector<ShockRecord> shocks;
    for (int i = 0; i < n; ++i) {
        int64_t bp_next = (i + 1 < n) ? state.backptr[i + 1]
                                      : static_cast<int64_t>(state.backptr[0]) + n;
        int64_t gap = bp_next - state.backptr[i];
        if (static_cast<double>(gap) > jump_threshold_cells) {
            ShockRecord s;
            s.position = g.wrap_pos((i + 0.5) * g.h);
            s.birth_time = state.time_index;
            s.current_time = state.time_index;
            s.left_u = state.velocity(i, dt);
            // Right velocity on the lift so the wrap row stays consistent.
            s.right_u = ((i + 1) * g.h - static_cast<double>(bp_next) * g.h) / dt;
            shocks.push_back(s);
        }
    }
    return shocks;
}

std::vector<ShockRecord> track_shocks(const std::vector<ShockRecord>& prev,
                                      std::vector<ShockRecord> next, double merge_radius,
                                      const Grid& grid) {
    if (next.size() >= 2) {
        double min_gap = kInf;
        for (size_t i = 0; i < next.size(); ++i) {
            const auto& a = next[i];
            const auto& b = next[(i + 1) % next.size()];
            min_gap = std::min(min_gap, grid.dist(a.position, b.position));
        }
        if (merge_radius >= 0.5 * min_gap)
            throw ConfigError("track_shocks: merge_radius >= half the minimum shock gap");
    }
    for (const auto& p : prev) {
        double dbest = kInf;
        size_t ibest = 0;
        for (size_t i = 0; i < next.size(); ++i) {
            double d = grid.dist(p.position, next[i].position);
            if (d < dbest) {
                dbest = d;
                ibest = i;
            }
        }
        if (!next.empty() && dbest <= merge_radius)
            next[ibest].birth_time = std::min(next[ibest].birth_time, p.birth_time);
    }
    return next;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> velocity_field(const SolutionField& f, double dt) {
    std::vector<double> u(f.grid.n);
    if (f.has_backptr) {
        for (int i = 0; i < f.grid.n; ++i) u[i] = f.velocity(i, dt);
    } else {
        // No dynamics yet: centered differences of phi.
        const int n = f.grid.n;
        for (int i = 0; i < n; ++i) {
            double dp = f.psi[(i + 1) % n] - f.psi[(i - 1 + n) % n];
            u[i] = f.slope_b + dp / (2.0 * f.grid.h);
        }
    }
    return u;
}

}  // namespace

PullbackResult pullback_solve(const PotentialField& field, const HamiltonianSpec& ham, int T,
                              const SolutionField& init_a, const SolutionField& init_b,
                              const StepOptions& opt) {
    if (init_a.slope_b != init_b.slope_b)
        throw ConfigError("pullback_solve: initial conditions must share the slope b");
    if (!init_a.grid.same_as(init_b.grid))
        throw ConfigError("pullback_solve: initial conditions must share the grid");
    SolutionField a = init_a;
    SolutionField b = init_b;
    a.time_index = -T;
    b.time_index = -T;
    for (int k = 1; k <= T; ++k) {
        // Absolute arrival time indexes the kick so deeper pasts share a suffix.
        int64_t arrival = -static_cast<int64_t>(T) + k;
        std::vector<double> kick = field.sample_kick(arrival, a.grid);
        a = lax_oleinik_step(a, kick, ham, opt);
        b = lax_oleinik_step(b, kick, ham, opt);
    }
    std::vector<double> ua = velocity_field(a, opt.dt);
    std::vector<double> ub = velocity_field(b, opt.dt);
    double dist = 0.0;
    for (int i = 0; i < a.grid.n; ++i) dist = std::max(dist, std::fabs(ua[i] - ub[i]));
    return PullbackResult{std::move(a), std::move(b), dist};
}

}  // namespace hjlab
