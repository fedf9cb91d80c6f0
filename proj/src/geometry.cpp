#include "hjlab/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hjlab/errors.hpp"
#include "hjlab/stats.hpp"

namespace hjlab {

void StripConfig::validate() const {
    if (period <= 0.0) throw ConfigError("strip: period must be positive");
    if (crosses.empty() || dots.empty()) throw ConfigError("strip: need >= 1 cross and dot");
    if (crosses.size() != dots.size())
        throw ConfigError("strip: cross and dot counts must match on the circle");
    auto check_sorted = [&](const std::vector<double>& v, const char* name) {
        for (size_t i = 0; i < v.size(); ++i) {
            if (v[i] < 0.0 || v[i] >= period) throw ConfigError(std::string("strip: ") + name +
                                                                " out of [0, period)");
            if (i > 0 && v[i] <= v[i - 1])
                throw ConfigError(std::string("strip: ") + name + " not strictly sorted");
        }
    };
    check_sorted(crosses, "crosses");
    check_sorted(dots, "dots");
}

int interval_of(std::span<const double> pts, double x, double period) {
    if (pts.empty()) throw ConfigError("interval_of: empty point set");
    double xp = std::fmod(x, period);
    if (xp < 0) xp += period;
    auto it = std::upper_bound(pts.begin(), pts.end(), xp);
    if (it == pts.begin()) return static_cast<int>(pts.size()) - 1;  // wrap interval
    return static_cast<int>(it - pts.begin()) - 1;
}

int nearest_point(std::span<const double> pts, double x, double period) {
    if (pts.empty()) throw ConfigError("nearest_point: empty point set");
    int n = static_cast<int>(pts.size());
    double xp = std::fmod(x, period);
    if (xp < 0) xp += period;
    auto it = std::lower_bound(pts.begin(), pts.end(), xp);
    int right = static_cast<int>(it - pts.begin()) % n;
    int left = (right - 1 + n) % n;
    auto circ = [&](double a, double b) {
        double d = std::fabs(a - b);
        return std::min(d, period - d);
    };
    double dr = circ(pts[right], xp);
    double dl = circ(pts[left], xp);
    return dr <= dl ? right : left;  // ties toward the right
}

int StripConfig::sorted_shift() const {
    int n = count();
    int i0 = interval_of(crosses, 0.0, period);
    int j0 = nearest_point(dots, 0.0, period);
    int s = (j0 + xi - i0) % n;
    return s < 0 ? s + n : s;
}

int StripConfig::xi_from_sorted_shift(const StripConfig& cfg, int shift) {
    int n = cfg.count();
    int i0 = interval_of(cfg.crosses, 0.0, cfg.period);
    int j0 = nearest_point(cfg.dots, 0.0, cfg.period);
    int xi = (shift + i0 - j0) % n;
    if (xi < 0) xi += n;
    if (xi > n / 2) xi -= n;  // symmetric representative
    return xi;
}

std::string StripConfig::to_json() const {
    nlohmann::json j;
    j["t_top"] = t_top;
    j["t_bottom"] = t_bottom;
    j["period"] = period;
    j["crosses"] = crosses;
    j["dots"] = dots;
    j["xi"] = xi;
    return j.dump();
}

StripConfig StripConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    StripConfig c;
    c.t_top = j.at("t_top").get<double>();
    c.t_bottom = j.at("t_bottom").get<double>();
    c.period = j.at("period").get<double>();
    c.crosses = j.at("crosses").get<std::vector<double>>();
    c.dots = j.at("dots").get<std::vector<double>>();
    c.xi = j.at("xi").get<int>();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------

ExtractResult extract_strip(std::span<const SolutionField> fields, size_t top_idx,
                            size_t bottom_idx, const ExtractOptions& opt) {
    if (top_idx <= bottom_idx || top_idx >= fields.size())
        throw ConfigError("extract_strip: need bottom_idx < top_idx within the stored run");
    for (size_t k = bottom_idx + 1; k <= top_idx; ++k)
        if (!fields[k].has_backptr) throw ConfigError("extract_strip: backpointers missing");

    const Grid& g = fields[top_idx].grid;
    const int n = g.n;
    double tol = opt.cluster_tol > 0.0 ? opt.cluster_tol : 4.0 * g.h;

    // Compose the backpointer chain on the lift.
    std::vector<int64_t> y(n);
    for (int i = 0; i < n; ++i) {
        int64_t jl = i;
        for (size_t k = top_idx; k > bottom_idx; --k) {
            int node = g.wrap(jl);
            jl = (jl - node) + fields[k].backptr[node];
        }
        y[i] = jl;
    }

    // Basin boundaries: lifted gaps beyond the cluster tolerance.
    std::vector<int> bounds;
    for (int i = 0; i < n; ++i) {
        int64_t ynext = (i + 1 < n) ? y[i + 1] : y[0] + n;
        if ((ynext - y[i]) * g.h > tol) bounds.push_back(i);
    }
    if (bounds.empty())
        throw NumericError(
            "extract_strip: single cluster spans the period (no concentration; weak forcing "
            "or strip too shallow)");

    const int m = static_cast<int>(bounds.size());
    ExtractResult res;
    StripConfig& cfg = res.strip;
    cfg.t_top = static_cast<double>(fields[top_idx].time_index);
    cfg.t_bottom = static_cast<double>(fields[bottom_idx].time_index);
    cfg.period = g.period();

    // Crosses at the midpoints of the bracketing cells, already sorted.
    cfg.crosses.resize(m);
    for (int k = 0; k < m; ++k) cfg.crosses[k] = g.wrap_pos((bounds[k] + 0.5) * g.h);

    // Cluster k holds endpoints bounds[k]+1 .. bounds[k+1] (cyclic); its dot is
    // the median of the lifted arrival points.
    std::vector<double> cluster_dot(m);
    for (int k = 0; k < m; ++k) {
        int lo = bounds[k] + 1;
        int hi = (k + 1 < m) ? bounds[k + 1] : bounds[0] + n;
        std::vector<double> vals;
        vals.reserve(hi - lo + 1);
        for (int i = lo; i <= hi; ++i) {
            int64_t yy = (i < n) ? y[i] : y[i - n] + n;
            vals.push_back(static_cast<double>(yy) * g.h);
        }
        double diam = vals.back() - vals.front();
        res.max_cluster_diameter = std::max(res.max_cluster_diameter, diam);
        if (diam > tol) res.resolution_warning = true;
        cluster_dot[k] = g.wrap_pos(median_of(vals));
    }

    // Dots sorted; remember which cluster each sorted dot came from.
    std::vector<int> order(m);
    for (int k = 0; k < m; ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return cluster_dot[a] < cluster_dot[b]; });
    cfg.dots.resize(m);
    std::vector<int> dot_index_of_cluster(m);
    for (int s = 0; s < m; ++s) {
        cfg.dots[s] = cluster_dot[order[s]];
        dot_index_of_cluster[order[s]] = s;
    }

    // Interval k sits between crosses[k] and crosses[k+1] and belongs to
    // cluster k; the sorted-order map must be a single cyclic shift.
    int shift = (dot_index_of_cluster[0] - 0) % m;
    if (shift < 0) shift += m;
    for (int k = 0; k < m; ++k) {
        int expect = (k + shift) % m;
        if (dot_index_of_cluster[k] != expect)
            throw NumericError("extract_strip: connector is not a monotone degree-1 shift");
    }
    cfg.xi = StripConfig::xi_from_sorted_shift(cfg, shift);
    cfg.validate();
    return res;
}

PointFieldStats field_stats(const StripConfig& cfg, int gap_bins, int corr_bins) {
    cfg.validate();
    const auto& pts = cfg.crosses;
    const int n = static_cast<int>(pts.size());
    if (n < 2) throw ConfigError("field_stats: need >= 2 points for statistics");
    PointFieldStats st;
    st.density = static_cast<double>(n) / cfg.period;
    st.gaps.resize(n);
    for (int i = 0; i < n; ++i) {
        double next = (i + 1 < n) ? pts[i + 1] : pts[0] + cfg.period;
        st.gaps[i] = next - pts[i];
    }
    double gmax = *std::max_element(st.gaps.begin(), st.gaps.end());
    double width = gmax / gap_bins;
    st.gap_bin_lo.resize(gap_bins);
    st.gap_count.assign(gap_bins, 0);
    for (int b = 0; b < gap_bins; ++b) st.gap_bin_lo[b] = b * width;
    for (double gp : st.gaps) {
        int b = std::min(gap_bins - 1, static_cast<int>(gp / width));
        ++st.gap_count[b];
    }
    // Pair correlation out to half the period, CSR-normalized.
    double rmax = 0.5 * cfg.period;
    double dr = rmax / corr_bins;
    std::vector<int> cnt(corr_bins, 0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double d = std::fabs(pts[i] - pts[j]);
            d = std::min(d, cfg.period - d);
            if (d < rmax) ++cnt[std::min(corr_bins - 1, static_cast<int>(d / dr))];
        }
    double pairs = 0.5 * n * (n - 1);
    st.corr_r.resize(corr_bins);
    st.corr_g.resize(corr_bins);
    for (int b = 0; b < corr_bins; ++b) {
        st.corr_r[b] = (b + 0.5) * dr;
        double expected = pairs * (2.0 * dr / cfg.period);
        st.corr_g[b] = expected > 0 ? cnt[b] / expected : 0.0;
    }
    return st;
}

StripConfig rescale_to_unit_density(const StripConfig& cfg) {
    cfg.validate();
    if (cfg.crosses.size() < 2 || cfg.dots.size() < 2)
        throw ConfigError("rescale_to_unit_density: need >= 2 points per field");
    double s = static_cast<double>(cfg.crosses.size()) / cfg.period;
    StripConfig out = cfg;
    out.period = cfg.period * s;
    for (double& x : out.crosses) x *= s;
    for (double& x : out.dots) x *= s;
    // Guard against rounding pushing the last point onto the period.
    for (double& x : out.crosses) x = std::min(x, std::nexttoward(out.period, 0.0));
    for (double& x : out.dots) x = std::min(x, std::nexttoward(out.period, 0.0));
    return out;
}

}  // namespace hjlab
