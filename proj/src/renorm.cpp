#include "hjlab/renorm.hpp"

#include <algorithm>
#include <cmath>

#include "hjlab/errors.hpp"
#include "hjlab/stats.hpp"

namespace hjlab {

namespace {

/// Number of points of `pts` (sorted, on a circle of the given period) inside
/// the half-open cyclic arc (a, b] walked rightward from a to b; a == b means
/// the full circle. The right-closed convention matches interval_of: a point
/// exactly on b separates b's interval from a's.
int points_in_arc(const std::vector<double>& pts, double a, double b, double period) {
    double len = b - a;
    if (len <= 0.0) len += period;
    int count = 0;
    for (double p : pts) {
        double rel = p - a;
        rel = std::fmod(rel, period);
        if (rel < 0) rel += period;
        if (rel > 0.0 && rel <= len) ++count;
    }
    return count;
}

}  // namespace

StripConfig renorm_pair(const StripConfig& upper, const StripConfig& lower) {
    upper.validate();
    lower.validate();
    if (std::fabs(upper.period - lower.period) > 1e-9 * upper.period)
        throw ConfigError("renorm_pair: strips disagree on the period");
    const double period = upper.period;
    const int n_up = upper.count();
    const int n_lo = lower.count();
    const int shift_up = upper.sorted_shift();
    const int shift_lo = lower.sorted_shift();

    // Lower-interval membership of every upper dot (dot on a cross goes right).
    std::vector<int> member(n_up);
    for (int t = 0; t < n_up; ++t)
        member[t] = interval_of(lower.crosses, upper.dots[t], period);

    // An upper cross separates two intervals whose dots are the adjacent
    // sorted dots (d_t, d_{t+1}); it survives iff the rightward arc between
    // them holds at least one lower cross. The cross paired with dot t is the
    // one between intervals (t - shift_up) and (t - shift_up + 1).
    std::vector<char> cross_survives(n_up, 0);
    for (int t = 0; t < n_up; ++t) {
        int tn = (t + 1) % n_up;
        int cross_idx = ((t + 1 - shift_up) % n_up + n_up) % n_up;
        bool separated;
        if (n_up == 1) {
            separated = true;  // the arc is the whole circle
        } else {
            separated = points_in_arc(lower.crosses, upper.dots[t], upper.dots[tn], period) > 0;
        }
        cross_survives[cross_idx] = separated ? 1 : 0;
    }

    // A lower dot survives iff its interval received at least one upper dot.
    std::vector<char> interval_nonempty(n_lo, 0);
    for (int t = 0; t < n_up; ++t) interval_nonempty[member[t]] = 1;
    std::vector<char> dot_survives(n_lo, 0);
    for (int s = 0; s < n_lo; ++s)
        if (interval_nonempty[s]) dot_survives[(s + shift_lo) % n_lo] = 1;

    StripConfig out;
    out.t_top = upper.t_top;
    out.t_bottom = lower.t_bottom;
    out.period = period;
    std::vector<int> surviving_cross_idx;
    for (int k = 0; k < n_up; ++k)
        if (cross_survives[k]) {
            surviving_cross_idx.push_back(k);
            out.crosses.push_back(upper.crosses[k]);
        }
    std::vector<int> new_dot_index(n_lo, -1);
    for (int t = 0; t < n_lo; ++t)
        if (dot_survives[t]) {
            new_dot_index[t] = static_cast<int>(out.dots.size());
            out.dots.push_back(lower.dots[t]);
        }

    if (out.crosses.size() != out.dots.size())
        throw ConfigError("renorm_pair: interlacing inconsistency (survivor counts differ)");
    const int m = static_cast<int>(out.crosses.size());

    // Connector: the merged interval right of surviving cross S[q] spans the
    // original intervals S[q] .. S[q+1]-1; all their dots sit in one lower
    // interval, whose dot is the target.
    int new_shift = -1;
    for (int q = 0; q < m; ++q) {
        int first_interval = surviving_cross_idx[q];
        int dot_t = (first_interval + shift_up) % n_up;
        int lower_interval = member[dot_t];
        int target_old = (lower_interval + shift_lo) % n_lo;
        int target_new = new_dot_index[target_old];
        if (target_new < 0)
            throw ConfigError("renorm_pair: interlacing inconsistency at merged interval " +
                              std::to_string(q));
        int s = (target_new - q + m) % m;
        if (new_shift < 0)
            new_shift = s;
        else if (s != new_shift)
            throw ConfigError("renorm_pair: connector is not a single shift at interval " +
                              std::to_string(q));
    }
    out.xi = StripConfig::xi_from_sorted_shift(out, new_shift);
    out.validate();
    return out;
}

SweepResult renorm_sweep(const StripStack& stack, SweepMode mode) {
    SweepResult res;
    if (mode == SweepMode::doubling) {
        if (stack.strips.size() < 2 || stack.strips.size() % 2 != 0)
            throw ConfigError("renorm_sweep: doubling mode needs an even strip count >= 2");
        for (size_t i = 0; i + 1 < stack.strips.size(); i += 2) {
            StripConfig merged = renorm_pair(stack.strips[i], stack.strips[i + 1]);
            res.density_by_n.emplace_back(2, merged.count() / merged.period);
            res.stack.strips.push_back(rescale_to_unit_density(merged));
        }
        return res;
    }
    if (stack.strips.empty()) throw ConfigError("renorm_sweep: incremental mode needs >= 1 strip");
    StripConfig acc = stack.strips[0];
    res.density_by_n.emplace_back(1, acc.count() / acc.period);
    for (size_t i = 1; i < stack.strips.size(); ++i) {
        acc = renorm_pair(acc, stack.strips[i]);
        res.density_by_n.emplace_back(static_cast<int>(i + 1), acc.count() / acc.period);
    }
    res.stack.strips.push_back(rescale_to_unit_density(acc));
    return res;
}

AlphaEstimate estimate_alpha(const std::vector<std::pair<int, double>>& densities) {
    if (densities.size() < 4) throw ConfigError("estimate_alpha: need >= 4 points");
    int nmin = densities.front().first, nmax = densities.front().first;
    std::vector<double> lx, ly;
    for (const auto& [n, d] : densities) {
        if (d <= 0.0) throw ConfigError("estimate_alpha: nonpositive density");
        nmin = std::min(nmin, n);
        nmax = std::max(nmax, n);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(d));
    }
    if (nmax < 10 * nmin) throw ConfigError("estimate_alpha: need >= 1 decade of n");
    LineFit f = fit_line(lx, ly);
    AlphaEstimate a;
    a.alpha = -f.slope;
    a.stderr_alpha = f.slope_se;
    a.r2 = f.r2;
    return a;
}

}  // namespace hjlab
