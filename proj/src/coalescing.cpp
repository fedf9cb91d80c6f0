#include "hjlab/coalescing.hpp"

#include <algorithm>
#include <cmath>

#include "hjlab/errors.hpp"
#include "hjlab/parallel.hpp"
#include "hjlab/rng.hpp"

namespace hjlab {

namespace {

struct Walker {
    double pos;      // lifted position
    int basin_first; // initial-site arc, cyclic inclusive
    int basin_last;
};

struct WalkState {
    std::vector<Walker> w;  // strictly ascending in pos; seam after the last
    double period;

    // Merge every pair that met or crossed during the last move. Crossing
    // without meeting happens at odd lattice separations; the midpoint merge
    // treats it as the coalescence it is in the continuum. Single greedy
    // sweep: chains of inversions collapse left to right.
    void merge_pass() {
        if (w.size() < 2) return;
        std::vector<Walker> out;
        out.reserve(w.size());
        out.push_back(w[0]);
        for (size_t i = 1; i < w.size(); ++i) {
            Walker cur = w[i];
            while (!out.empty() && cur.pos <= out.back().pos) {
                cur.pos = 0.5 * (out.back().pos + cur.pos);
                cur.basin_first = out.back().basin_first;
                out.pop_back();
            }
            out.push_back(cur);
        }
        // Seam pairs: last vs first + period.
        while (out.size() > 1 && out.front().pos + period <= out.back().pos) {
            Walker m;
            m.pos = 0.5 * (out.back().pos + out.front().pos + period);
            m.basin_first = out.back().basin_first;
            m.basin_last = out.front().basin_last;
            out.pop_back();
            out.erase(out.begin());
            out.push_back(m);
        }
        w = std::move(out);
    }
};

WalkerSnapshot take_snapshot(const WalkState& st, double time) {
    WalkerSnapshot snap;
    snap.time = time;
    size_t n = st.w.size();
    std::vector<size_t> order(n);
    std::vector<double> wrapped(n);
    for (size_t i = 0; i < n; ++i) {
        double p = std::fmod(st.w[i].pos, st.period);
        if (p < 0) p += st.period;
        wrapped[i] = p;
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return wrapped[a] < wrapped[b]; });
    for (size_t k : order) {
        snap.positions.push_back(wrapped[k]);
        snap.basin_first.push_back(st.w[k].basin_first);
        snap.basin_last.push_back(st.w[k].basin_last);
    }
    return snap;
}

}  // namespace

CoalescingRun run_coalescing(uint64_t seed, double dx, double horizon_t, double period,
                             std::span<const double> snapshot_times) {
    if (dx <= 0.0 || period <= 0.0) throw ConfigError("coalescing: dx and period must be positive");
    int64_t m = static_cast<int64_t>(std::llround(period / dx));
    if (std::fabs(m * dx - period) > 1e-9 * period || m % 2 != 0)
        throw ConfigError("coalescing: period/dx must be an even integer");
    if (horizon_t < 0.0) throw ConfigError("coalescing: horizon must be >= 0");

    CoalescingRun run;
    run.dx = dx;
    run.dt = dx * dx;
    run.period = period;
    run.horizon_t = horizon_t;
    run.n_sites = static_cast<int>(m);

    WalkState st;
    st.period = period;
    st.w.resize(m);
    for (int64_t i = 0; i < m; ++i) {
        st.w[i].pos = static_cast<double>(i) * dx;
        st.w[i].basin_first = static_cast<int>(i);
        st.w[i].basin_last = static_cast<int>(i);
    }

    // Sorted snapshot request times mapped onto step counts.
    std::vector<std::pair<int64_t, double>> snaps;
    for (double t : snapshot_times)
        snaps.emplace_back(static_cast<int64_t>(std::llround(t / run.dt)), t);
    std::sort(snaps.begin(), snaps.end());
    size_t next_snap = 0;
    int64_t n_steps = static_cast<int64_t>(std::llround(horizon_t / run.dt));

    while (next_snap < snaps.size() && snaps[next_snap].first <= 0) {
        run.snapshots[snaps[next_snap].second] = take_snapshot(st, 0.0);
        ++next_snap;
    }
    for (int64_t step = 1; step <= n_steps; ++step) {
        uint64_t step_key = substream(seed, static_cast<uint64_t>(step));
        for (auto& walker : st.w) {
            // Coin keyed by the surviving basin representative: deterministic
            // regardless of merge history.
            Rng rng(substream(step_key, static_cast<uint64_t>(walker.basin_first)));
            walker.pos += rng.next_coin() ? dx : -dx;
        }
        st.merge_pass();
        while (next_snap < snaps.size() && snaps[next_snap].first == step) {
            run.snapshots[snaps[next_snap].second] = take_snapshot(st, step * run.dt);
            ++next_snap;
        }
    }
    while (next_snap < snaps.size()) {
        run.snapshots[snaps[next_snap].second] = take_snapshot(st, n_steps * run.dt);
        ++next_snap;
    }
    return run;
}

double single_walk_displacement(uint64_t seed, double dx, double t) {
    int64_t n_steps = static_cast<int64_t>(std::llround(t / (dx * dx)));
    double pos = 0.0;
    for (int64_t step = 1; step <= n_steps; ++step) {
        Rng rng(substream(substream(seed, static_cast<uint64_t>(step)), 0));
        pos += rng.next_coin() ? dx : -dx;
    }
    return pos;
}

bool two_walkers_meet(uint64_t seed, double dx, double t, double gap) {
    int64_t n_steps = static_cast<int64_t>(std::llround(t / (dx * dx)));
    double a = 0.0, b = gap;
    for (int64_t step = 1; step <= n_steps; ++step) {
        uint64_t k = substream(seed, static_cast<uint64_t>(step));
        Rng ra(substream(k, 0));
        Rng rb(substream(k, 1));
        a += ra.next_coin() ? dx : -dx;
        b += rb.next_coin() ? dx : -dx;
        if (b <= a) return true;
    }
    return false;
}

StripConfig strip_from_coalescence(const CoalescingRun& run, double t, double common_density) {
    auto it = run.snapshots.find(t);
    if (it == run.snapshots.end()) throw ConfigError("strip_from_coalescence: no snapshot at t");
    if (t < 0.0) throw ConfigError("strip_from_coalescence: need t >= 0");
    const WalkerSnapshot& snap = it->second;
    const int n = static_cast<int>(snap.positions.size());
    if (n < 2) throw NumericError("strip_from_coalescence: fewer than 2 survivors");

    StripConfig cfg;
    cfg.t_top = 0.0;
    cfg.t_bottom = t;
    cfg.period = run.period;
    cfg.dots = snap.positions;

    // Basin right boundaries, kept aligned with the walkers they belong to.
    std::vector<std::pair<double, int>> cross_of_walker(n);
    for (int k = 0; k < n; ++k) {
        double c = (snap.basin_last[k] + 0.5) * run.dx;
        if (c >= run.period) c -= run.period;
        cross_of_walker[k] = {c, k};
    }
    std::sort(cross_of_walker.begin(), cross_of_walker.end());
    cfg.crosses.resize(n);
    std::vector<int> cross_idx_of_walker(n);
    for (int s = 0; s < n; ++s) {
        cfg.crosses[s] = cross_of_walker[s].first;
        cross_idx_of_walker[cross_of_walker[s].second] = s;
    }

    // Interval ending at a walker's right-boundary cross maps to that walker's
    // dot; the map must be one cyclic shift.
    int shift = -1;
    for (int k = 0; k < n; ++k) {
        int interval = (cross_idx_of_walker[k] - 1 + n) % n;
        int s = (k - interval + n) % n;
        if (shift < 0)
            shift = s;
        else if (s != shift)
            throw NumericError("strip_from_coalescence: basins are not cyclically ordered");
    }
    cfg.xi = StripConfig::xi_from_sorted_shift(cfg, shift);
    cfg.validate();
    if (common_density > 0.0) {
        StripConfig out = cfg;
        out.period = cfg.period * common_density;
        for (double& x : out.crosses) x *= common_density;
        for (double& x : out.dots) x *= common_density;
        for (double& x : out.crosses) x = std::min(x, std::nexttoward(out.period, 0.0));
        for (double& x : out.dots) x = std::min(x, std::nexttoward(out.period, 0.0));
        return out;
    }
    return rescale_to_unit_density(cfg);
}

double kernel_G(double x, double t) {
    if (x < 0.0) throw ConfigError("kernel_G: x must be >= 0");
    if (t <= 0.0) throw ConfigError("kernel_G: t must be > 0");
    return std::erfc(x / (2.0 * std::sqrt(t)));
}

// ---------------------------------------------------------------------------

SkewMatrix::SkewMatrix(int dim) : dim_(dim) {
    if (dim < 2) throw ConfigError("skew matrix: dimension must be >= 2");
    upper_.assign(static_cast<size_t>(dim) * (dim - 1) / 2, 0.0);
}

double SkewMatrix::at(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_) throw ConfigError("skew matrix: index");
    if (i == j) return 0.0;
    bool flip = i > j;
    if (flip) std::swap(i, j);
    size_t idx = static_cast<size_t>(i) * (2 * dim_ - i - 1) / 2 + (j - i - 1);
    return flip ? -upper_[idx] : upper_[idx];
}

void SkewMatrix::set(int i, int j, double value) {
    if (i < 0 || j <= i || j >= dim_) throw ConfigError("skew matrix: set expects i < j");
    size_t idx = static_cast<size_t>(i) * (2 * dim_ - i - 1) / 2 + (j - i - 1);
    upper_[idx] = value;
}

namespace {
double pfaffian_rec(const SkewMatrix& m, std::vector<int>& idx) {
    if (idx.empty()) return 1.0;
    double acc = 0.0;
    int i0 = idx[0];
    for (size_t p = 1; p < idx.size(); ++p) {
        double sign = (p % 2 == 1) ? 1.0 : -1.0;
        std::vector<int> rest;
        rest.reserve(idx.size() - 2);
        for (size_t q = 1; q < idx.size(); ++q)
            if (q != p) rest.push_back(idx[q]);
        acc += sign * m.at(i0, idx[p]) * pfaffian_rec(m, rest);
    }
    return acc;
}
}  // namespace

double pfaffian(const SkewMatrix& m) {
    if (m.dim() % 2 != 0) throw ConfigError("pfaffian: dimension must be even");
    if (m.dim() > 12) throw ConfigError("pfaffian: recursive expansion limited to dim <= 12");
    std::vector<int> idx(m.dim());
    for (int i = 0; i < m.dim(); ++i) idx[i] = i;
    return pfaffian_rec(m, idx);
}

EmptyIntervalResult empty_interval_test(uint64_t seed, double dx, double t, double period,
                                        std::span<const std::pair<double, double>> intervals,
                                        int replicas, int workers) {
    if (intervals.empty()) throw ConfigError("empty_interval_test: need >= 1 interval");
    if (2 * intervals.size() > 12)
        throw ConfigError("empty_interval_test: 2n must stay <= 12 for the Pfaffian");
    std::vector<double> pts;
    for (const auto& [a, b] : intervals) {
        if (b < a) throw ConfigError("empty_interval_test: interval endpoints out of order");
        if (a < 0.0 || b > period) throw ConfigError("empty_interval_test: interval outside [0, P]");
        pts.push_back(a);
        pts.push_back(b);
    }
    for (size_t i = 1; i < pts.size(); ++i)
        if (pts[i] < pts[i - 1]) throw ConfigError("empty_interval_test: intervals overlap");

    const int dim = static_cast<int>(pts.size());
    SkewMatrix a(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) a.set(i, j, kernel_G(pts[j] - pts[i], t));

    EmptyIntervalResult res;
    res.pfaffian_prediction = pfaffian(a);
    res.replicas = replicas;

    std::vector<uint8_t> hit(replicas, 0);
    const std::vector<double> snap_times{t};
    parallel_for(replicas, workers, [&](int r) {
        CoalescingRun run =
            run_coalescing(substream(seed, static_cast<uint64_t>(r)), dx, t, period, snap_times);
        const WalkerSnapshot& snap = run.snapshots.begin()->second;
        // Basin representative per initial site.
        std::vector<int> rep(run.n_sites);
        for (size_t k = 0; k < snap.positions.size(); ++k) {
            int s0 = snap.basin_first[k];
            int s1 = snap.basin_last[k];
            if (s1 < s0) s1 += run.n_sites;
            for (int s = s0; s <= s1; ++s) rep[s % run.n_sites] = s0;
        }
        bool all_empty = true;
        for (size_t q = 0; q < intervals.size() && all_empty; ++q) {
            double lo = intervals[q].first, hi = intervals[q].second;
            // Site boundaries (s+1/2)dx strictly inside (lo, hi).
            int s_lo = static_cast<int>(std::floor(lo / dx - 0.5)) + 1;
            int s_hi = static_cast<int>(std::ceil(hi / dx - 0.5)) - 1;
            for (int s = s_lo; s <= s_hi; ++s) {
                int cur = ((s % run.n_sites) + run.n_sites) % run.n_sites;
                int nxt = (cur + 1) % run.n_sites;
                if (rep[cur] != rep[nxt]) {
                    all_empty = false;
                    break;
                }
            }
        }
        hit[r] = all_empty ? 1 : 0;
    });
    double p = 0.0;
    for (uint8_t h : hit) p += h;
    p /= replicas;
    res.mc_probability = p;
    res.mc_se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / replicas);
    return res;
}

}  // namespace hjlab
