// hjlab: simulation laboratory for randomly kicked Hamilton-Jacobi/Burgers
// dynamics in one dimension. Subcommands drive the solver modules from a JSON
// config; every run writes a manifest with content digests so that
// (config, seed) reproduces each data byte.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hjlab/airy_renorm.hpp"
#include "hjlab/coalescing.hpp"
#include "hjlab/errors.hpp"
#include "hjlab/estimators.hpp"
#include "hjlab/forcing.hpp"
#include "hjlab/geometry.hpp"
#include "hjlab/hj_inviscid.hpp"
#include "hjlab/hj_viscous.hpp"
#include "hjlab/parallel.hpp"
#include "hjlab/polymer.hpp"
#include "hjlab/renorm.hpp"
#include "hjlab/runio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hjlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitStats = 4;

// ---------------------------------------------------------------------------
// Config access with field-path diagnostics
// ---------------------------------------------------------------------------

const json& require_field(const json& j, const std::string& path) {
    const json* cur = &j;
    std::string walked;
    size_t pos = 0;
    while (true) {
        size_t dot = path.find('.', pos);
        std::string key =
            path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        std::string here = walked.empty() ? key : walked + "." + key;
        if (!cur->is_object() || !cur->contains(key))
            throw ConfigError("config: missing field '" + here + "'");
        cur = &(*cur)[key];
        walked = here;
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return *cur;
}

double num_at(const json& j, const std::string& path) {
    const json& v = require_field(j, path);
    if (!v.is_number()) throw ConfigError("config: field '" + path + "' must be a number");
    return v.get<double>();
}

int int_at(const json& j, const std::string& path) {
    const json& v = require_field(j, path);
    if (!v.is_number_integer()) throw ConfigError("config: field '" + path + "' must be an integer");
    return v.get<int>();
}

std::string str_at(const json& j, const std::string& path) {
    const json& v = require_field(j, path);
    if (!v.is_string()) throw ConfigError("config: field '" + path + "' must be a string");
    return v.get<std::string>();
}

double num_or(const json& j, const std::string& key, double fallback) {
    return j.contains(key) ? num_at(j, key) : fallback;
}
int int_or(const json& j, const std::string& key, int fallback) {
    return j.contains(key) ? int_at(j, key) : fallback;
}

Grid grid_from(const json& cfg, const std::string& path) {
    const json& g = require_field(cfg, path);
    return Grid::with_period(int_at(g, "n"), num_at(g, "period"));
}

PotentialField::Params forcing_from(const json& cfg, uint64_t seed, double period) {
    const json& f = require_field(cfg, "forcing");
    PotentialField::Params p;
    p.master_seed = seed;
    p.period = period;
    std::string mode = f.contains("mode") ? str_at(f, "mode") : "fourier";
    if (mode == "fourier")
        p.mode = ForcingMode::fourier;
    else if (mode == "bumps")
        p.mode = ForcingMode::bumps;
    else
        throw ConfigError("config: forcing.mode must be 'fourier' or 'bumps'");
    p.n_modes = int_or(f, "n_modes", 8);
    p.bump_count = num_or(f, "bump_count", 16.0);
    p.bump_width = num_or(f, "bump_width", 0.2);
    p.amplitude = num_at(f, "amplitude");
    return p;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "run";
    std::optional<uint64_t> seed_override;
    int workers = 1;
    std::string format = "csv";
};

json load_config(const CommonArgs& args) {
    json cfg = json::parse(read_text(args.config_path));
    if (args.seed_override) cfg["seed"] = *args.seed_override;
    if (!cfg.contains("seed") || !cfg["seed"].is_number())
        throw ConfigError("config: missing field 'seed'");
    return cfg;
}

/// Headline results table honoring --format {csv,json}.
void write_results(const fs::path& dir, const std::string& stem, const std::string& format,
                   const std::vector<std::string>& names, const std::vector<CsvColumn>& cols,
                   RunManifest& manifest) {
    if (format == "json") {
        json rows = json::array();
        for (size_t r = 0; r < cols.front().values.size(); ++r) {
            json row;
            if (r < names.size()) row["name"] = names[r];
            for (const auto& c : cols) row[c.name] = c.values[r];
            rows.push_back(row);
        }
        fs::path p = dir / (stem + ".json");
        write_text(p, rows.dump(2) + "\n");
        manifest.add_output(p);
        return;
    }
    fs::path p = dir / (stem + ".csv");
    if (names.empty()) {
        write_csv(p, cols);
    } else {
        std::ostringstream body;
        body.precision(17);
        body << "name";
        for (const auto& c : cols) body << "," << c.name;
        body << "\n";
        for (size_t r = 0; r < cols.front().values.size(); ++r) {
            body << names[r];
            for (const auto& c : cols) body << "," << c.values[r];
            body << "\n";
        }
        write_text(p, body.str());
    }
    manifest.add_output(p);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonArgs& args) {
    json cfg = load_config(args);
    uint64_t seed = cfg["seed"].get<uint64_t>();
    Grid grid = grid_from(cfg, "grid");
    PotentialField::Params fp = forcing_from(cfg, seed, grid.period());
    PotentialField field(fp);
    const json& dyn = require_field(cfg, "dynamics");
    std::string kind = str_at(dyn, "kind");
    int steps = int_at(dyn, "steps");
    double slope_b = num_or(dyn, "slope_b", 0.0);
    int snapshot_stride = int_or(dyn, "snapshot_stride", steps);

    RunManifest manifest("simulate", cfg, seed);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    // Period guard from the estimators module, recorded as a manifest warning.
    double guard = 8.0 * std::pow(static_cast<double>(steps), 2.0 / 3.0);
    if (grid.period() < guard)
        manifest.config()["warnings"] =
            json::array({"period below 8*T^(2/3): statistics may wrap (enlarge P)"});

    auto quad = HamiltonianSpec::make_quadratic();

    if (kind == "inviscid") {
        double jump_cells =
            cfg.contains("shocks") ? num_or(cfg["shocks"], "jump_threshold_cells", 3.0) : 3.0;
        double merge_radius =
            cfg.contains("shocks") ? num_or(cfg["shocks"], "merge_radius", 8.0 * grid.h)
                                   : 8.0 * grid.h;
        std::vector<SolutionField> fields{SolutionField(grid, slope_b)};
        std::vector<ShockRecord> live;
        json tracks = json::array();
        for (int s = 1; s <= steps; ++s) {
            fields.push_back(lax_oleinik_step(fields.back(), field.sample_kick(s, grid), quad));
            std::vector<ShockRecord> next = detect_shocks(fields.back(), 1.0, jump_cells);
            double radius = merge_radius;
            if (next.size() >= 2) {
                double min_gap = 1e300;
                for (size_t i = 0; i < next.size(); ++i)
                    min_gap = std::min(
                        min_gap, grid.dist(next[i].position, next[(i + 1) % next.size()].position));
                radius = std::min(radius, 0.49 * min_gap);
            }
            live = track_shocks(live, std::move(next), radius, grid);
            if (s % snapshot_stride == 0) {
                std::vector<CsvColumn> cols(4);
                cols[0].name = "x";
                cols[1].name = "phi";
                cols[2].name = "u";
                cols[3].name = "backpointer";
                for (int i = 0; i < grid.n; ++i) {
                    cols[0].values.push_back(grid.x(i));
                    cols[1].values.push_back(fields.back().phi(i));
                    cols[2].values.push_back(fields.back().velocity(i, 1.0));
                    cols[3].values.push_back(fields.back().backptr[i] * grid.h);
                }
                fs::path p = dir / ("snapshot_" + std::to_string(s) + ".csv");
                write_csv(p, cols);
                manifest.add_output(p);
                for (const auto& sh : live) {
                    json rec;
                    rec["time"] = s;
                    rec["position"] = sh.position;
                    rec["birth_time"] = sh.birth_time;
                    rec["age"] = sh.age();
                    tracks.push_back(rec);
                }
            }
        }
        fs::path tp = dir / "shock_tracks.json";
        write_text(tp, tracks.dump(2) + "\n");
        manifest.add_output(tp);

        if (cfg.contains("strips")) {
            for (const auto& d : require_field(cfg, "strips.depths")) {
                int depth = d.get<int>();
                if (depth <= 0 || depth > steps)
                    throw ConfigError("config: strips.depths entries must lie in [1, steps]");
                ExtractOptions opt;
                opt.cluster_tol = num_or(cfg["strips"], "cluster_tol", 0.0);
                ExtractResult ex =
                    extract_strip(fields, fields.size() - 1, fields.size() - 1 - depth, opt);
                fs::path p = dir / ("strip_" + std::to_string(depth) + ".json");
                write_text(p, ex.strip.to_json() + "\n");
                manifest.add_output(p);
            }
        }
    } else if (kind == "viscous") {
        ViscousConfig vc;
        vc.nu = num_at(dyn, "nu");
        vc.grid = grid;
        vc.dt = 1.0;
        vc.slope_b = slope_b;
        vc.validate();
        manifest.config()["viscous"] = {{"kernel_mode", vc.kernel_mode_name()},
                                        {"gradient", vc.gradient_name()},
                                        {"bandwidth_adequate", vc.bandwidth_adequate()}};
        PartitionField z(grid);
        for (int s = 1; s <= steps; ++s) {
            z = heat_step(z, vc);
            z = kick_step(z, field.sample_kick(s, grid), vc);
            if (s % snapshot_stride == 0) {
                VelocityField u = velocity_from_z(z, vc);
                std::vector<CsvColumn> cols(4);
                cols[0].name = "x";
                cols[1].name = "log_z";
                cols[2].name = "phi";
                cols[3].name = "u";
                for (int i = 0; i < grid.n; ++i) {
                    cols[0].values.push_back(grid.x(i));
                    cols[1].values.push_back(z.total_log_z(i));
                    cols[2].values.push_back(z.phi(i, vc.nu, slope_b));
                    cols[3].values.push_back(u.u[i]);
                }
                fs::path p = dir / ("snapshot_" + std::to_string(s) + ".csv");
                write_csv(p, cols);
                manifest.add_output(p);
            }
        }
    } else {
        throw ConfigError("config: dynamics.kind must be 'inviscid' or 'viscous'");
    }
    manifest.finish_and_write(dir);
    std::cout << "simulate: wrote " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// coalesce
// ---------------------------------------------------------------------------

int cmd_coalesce(const CommonArgs& args) {
    json cfg = load_config(args);
    uint64_t seed = cfg["seed"].get<uint64_t>();
    double dx = num_at(cfg, "dx");
    double period = num_at(cfg, "period");
    double t = num_at(cfg, "horizon_t");
    int replicas = int_at(cfg, "replicas");

    RunManifest manifest("coalesce", cfg, seed);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    std::vector<std::pair<double, double>> intervals;
    for (const auto& iv : require_field(cfg, "intervals"))
        intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());

    EmptyIntervalResult r =
        empty_interval_test(seed, dx, t, period, intervals, replicas, args.workers);

    std::vector<CsvColumn> cols(5);
    cols[0].name = "geometry_lo";
    cols[1].name = "geometry_hi";
    cols[2].name = "mc";
    cols[3].name = "se";
    cols[4].name = "pfaffian";
    cols[0].values = {intervals.front().first};
    cols[1].values = {intervals.back().second};
    cols[2].values = {r.mc_probability};
    cols[3].values = {r.mc_se};
    cols[4].values = {r.pfaffian_prediction};
    write_results(dir, "empty_interval", args.format, {}, cols, manifest);

    if (int_or(cfg, "emit_strip", 1)) {
        std::vector<double> snap{t};
        CoalescingRun run = run_coalescing(substream(seed, 0xabcdULL), dx, t, period, snap);
        StripConfig strip = strip_from_coalescence(run, t);
        fs::path p = dir / "strip.json";
        write_text(p, strip.to_json() + "\n");
        manifest.add_output(p);
    }

    SvgSeries mc{"monte carlo", {1.0}, {r.mc_probability}, false};
    SvgSeries pf{"pfaffian", {1.0}, {r.pfaffian_prediction}, false};
    fs::path svg = dir / "empty_interval.svg";
    write_svg_plot(svg, "empty-interval probability", {mc, pf}, false, false);
    manifest.add_output(svg);
    manifest.finish_and_write(dir);
    double gap = std::fabs(r.mc_probability - r.pfaffian_prediction);
    std::cout << "coalesce: mc=" << r.mc_probability << " se=" << r.mc_se
              << " pfaffian=" << r.pfaffian_prediction << " |gap|=" << gap
              << (gap <= 3.0 * r.mc_se ? " (within 3 SE)" : " (OUTSIDE 3 SE)") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// renorm
// ---------------------------------------------------------------------------

int cmd_renorm(const CommonArgs& args) {
    json cfg = load_config(args);
    uint64_t seed = cfg["seed"].get<uint64_t>();
    RunManifest manifest("renorm", cfg, seed);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    StripStack stack;
    const json& src = require_field(cfg, "source");
    std::string kind = str_at(src, "kind");
    if (kind == "coalescing") {
        double dx = num_at(src, "dx");
        double t = num_at(src, "strip_t");
        double period = num_at(src, "period");
        int n_strips = int_at(src, "n_strips");
        double rho = 1.0 / std::sqrt(M_PI * t);
        std::vector<double> snap{t};
        std::vector<StripConfig> strips(n_strips);
        parallel_for(n_strips, args.workers, [&](int i) {
            CoalescingRun run =
                run_coalescing(substream(seed, static_cast<uint64_t>(i)), dx, t, period, snap);
            strips[i] = strip_from_coalescence(run, t, rho);
        });
        stack.strips = std::move(strips);
    } else if (kind == "files") {
        for (const auto& p : require_field(src, "paths"))
            stack.strips.push_back(StripConfig::from_json(read_text(p.get<std::string>())));
    } else {
        throw ConfigError("config: source.kind must be 'coalescing' or 'files'");
    }

    std::string mode_name = cfg.contains("mode") ? str_at(cfg, "mode") : "incremental";
    SweepMode mode = mode_name == "doubling" ? SweepMode::doubling : SweepMode::incremental;
    SweepResult sw = renorm_sweep(stack, mode);

    std::vector<CsvColumn> dens(2);
    dens[0].name = "n";
    dens[1].name = "density";
    for (const auto& [n, d] : sw.density_by_n) {
        dens[0].values.push_back(n);
        dens[1].values.push_back(d);
    }
    fs::path dcsv = dir / "densities.csv";
    write_csv(dcsv, dens);
    manifest.add_output(dcsv);

    std::vector<std::pair<int, double>> pts;
    for (const auto& [n, d] : sw.density_by_n)
        if (n >= 2) pts.emplace_back(n, d);
    AlphaEstimate alpha = estimate_alpha(pts);
    std::vector<CsvColumn> cols(3);
    cols[0].name = "value";
    cols[1].name = "stderr";
    cols[2].name = "r2";
    cols[0].values = {alpha.alpha};
    cols[1].values = {alpha.stderr_alpha};
    cols[2].values = {alpha.r2};
    write_results(dir, "results", args.format, {"alpha"}, cols, manifest);

    SvgSeries data{"density", {}, {}, false};
    SvgSeries fitline{"n^-alpha fit", {}, {}, true};
    double c0 = sw.density_by_n.front().second;
    for (const auto& [n, d] : sw.density_by_n) {
        data.x.push_back(n);
        data.y.push_back(d);
        fitline.x.push_back(n);
        fitline.y.push_back(c0 * std::pow(static_cast<double>(n), -alpha.alpha));
    }
    fs::path svg = dir / "density_loglog.svg";
    write_svg_plot(svg, "cross density vs n (log-log)", {data, fitline}, true, true);
    manifest.add_output(svg);
    manifest.finish_and_write(dir);
    std::cout << "renorm: alpha = " << alpha.alpha << " +- " << alpha.stderr_alpha << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// exponents
// ---------------------------------------------------------------------------

int cmd_exponents(const CommonArgs& args) {
    json cfg = load_config(args);
    uint64_t seed = cfg["seed"].get<uint64_t>();
    RunManifest manifest("exponents", cfg, seed);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    ScalingSurveyParams par;
    par.grid = grid_from(cfg, "grid");
    par.forcing = forcing_from(cfg, seed, par.grid.period());
    for (const auto& t : require_field(cfg, "t_list")) par.t_list.push_back(t.get<int>());
    par.replicas = int_at(cfg, "replicas");
    par.endpoint_stride = int_or(cfg, "endpoint_stride", 8);
    par.workers = args.workers;

    auto quad = HamiltonianSpec::make_quadratic();
    ScalingSurvey sv = run_scaling_survey(par, quad);
    XiEstimate xi = estimate_xi(sv);
    ExponentEstimate chi = estimate_chi(sv);

    std::vector<std::string> names{"xi_displacement", "xi_density", "chi"};
    std::vector<CsvColumn> cols(6);
    cols[0].name = "value";
    cols[1].name = "stderr";
    cols[2].name = "fit_lo";
    cols[3].name = "fit_hi";
    cols[4].name = "r2";
    cols[5].name = "n_replicas";
    for (const ExponentEstimate* e : {&xi.displacement_route, &xi.density_route, &chi}) {
        cols[0].values.push_back(e->value);
        cols[1].values.push_back(e->se);
        cols[2].values.push_back(e->fit_lo);
        cols[3].values.push_back(e->fit_hi);
        cols[4].values.push_back(e->r2);
        cols[5].values.push_back(par.replicas);
    }
    write_results(dir, "results", args.format, names, cols, manifest);

    SvgSeries med{"median displacement", {}, {}, false};
    SvgSeries var{"action variance", {}, {}, false};
    for (size_t k = 0; k < sv.t_list.size(); ++k) {
        med.x.push_back(sv.t_list[k]);
        med.y.push_back(mean_of(sv.median_disp[k]));
        var.x.push_back(sv.t_list[k]);
        var.y.push_back(variance_of(sv.action_at_origin[k]));
    }
    fs::path svg = dir / "scaling_loglog.svg";
    write_svg_plot(svg, "displacement and action-variance scaling", {med, var}, true, true);
    manifest.add_output(svg);
    manifest.finish_and_write(dir);
    std::cout << "exponents: xi = " << xi.displacement_route.value << " +- "
              << xi.displacement_route.se << ", chi = " << chi.value << " +- " << chi.se
              << (xi.routes_consistent ? "" : " (xi routes disagree)") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// polymer-check
// ---------------------------------------------------------------------------

int cmd_polymer_check(const CommonArgs& args) {
    json cfg = load_config(args);
    uint64_t seed = cfg["seed"].get<uint64_t>();
    RunManifest manifest("polymer_check", cfg, seed);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    double period = num_at(cfg, "period");
    double nu = num_at(cfg, "nu");
    int n_kicks = int_at(cfg, "n_kicks");
    PotentialField::Params fp = forcing_from(cfg, seed, period);
    PotentialField field(fp);

    std::vector<CsvColumn> cols(3);
    cols[0].name = "n";
    cols[1].name = "dt";
    cols[2].name = "max_tv";
    double prev = 1e300;
    bool decreasing = true;
    for (const auto& level : require_field(cfg, "levels")) {
        int n = level.at("n").get<int>();
        double dt = level.at("dt").get<double>();
        Grid grid = Grid::with_period(n, period);
        PolymerInstance inst = make_polymer_instance(field, grid, nu, dt, n_kicks);
        int endpoint = n / 4;
        PathMeasure gb = gibbs_exact(inst.space, inst.energy, endpoint);
        PathMeasure ch = controlled_chain(inst.space, inst.u_fields, endpoint);
        double worst = 0.0;
        for (size_t j = 0; j < gb.marginals.size(); ++j)
            worst = std::max(worst, total_variation(gb.marginals[j], ch.marginals[j]));
        cols[0].values.push_back(n);
        cols[1].values.push_back(dt);
        cols[2].values.push_back(worst);
        decreasing = decreasing && worst < prev;
        prev = worst;
    }
    write_results(dir, "tv", args.format, {}, cols, manifest);
    manifest.finish_and_write(dir);
    double coarsest = cols[2].values.front();
    bool pass = coarsest <= 0.02 && decreasing;
    std::cout << (pass ? "PASS" : "FAIL") << ": gibbs-vs-control max TV " << coarsest;
    for (size_t i = 1; i < cols[2].values.size(); ++i) std::cout << " -> " << cols[2].values[i];
    std::cout << (decreasing ? " (decreasing)" : " (NOT decreasing)") << "\n";
    return pass ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------------------
// airy
// ---------------------------------------------------------------------------

int cmd_airy(const CommonArgs& args) {
    json cfg = load_config(args);
    uint64_t seed = cfg["seed"].get<uint64_t>();
    RunManifest manifest("airy", cfg, seed);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    SheetGrid grid;
    grid.half = int_at(cfg, "grid.half");
    grid.extent = num_at(cfg, "grid.extent");
    SurrogateParams par;
    par.variance = num_at(cfg, "surrogate.variance");
    par.corr_length = num_at(cfg, "surrogate.corr_length");
    par.n_features = int_or(require_field(cfg, "surrogate"), "n_features", 48);
    int realizations = int_at(cfg, "realizations");
    int iterations = int_or(cfg, "iterations", 1);
    // Moment targets are operator-supplied; (0, 1) is the neutral default.
    double m_star = cfg.contains("targets") ? num_or(cfg["targets"], "mean", 0.0) : 0.0;
    double v_star = cfg.contains("targets") ? num_or(cfg["targets"], "variance", 1.0) : 1.0;

    StationaryFieldEnsemble ens =
        make_surrogate_ensemble(seed, realizations, grid, par, m_star, v_star);

    std::vector<CsvColumn> cols(5);
    cols[0].name = "iteration";
    cols[1].name = "C";
    cols[2].name = "delta";
    cols[3].name = "mu";
    cols[4].name = "masked_fraction";
    for (int it = 1; it <= iterations; ++it) {
        ApplyResult res = apply_renormalisation(ens);
        cols[0].values.push_back(it);
        cols[1].values.push_back(res.constants.c);
        cols[2].values.push_back(res.constants.delta);
        cols[3].values.push_back(res.constants.mu);
        cols[4].values.push_back(res.masked_fraction);
        ens = std::move(res.ensemble);
    }
    write_results(dir, "constants", args.format, {}, cols, manifest);
    manifest.finish_and_write(dir);
    std::cout << "airy: " << iterations << " application(s); final delta = "
              << cols[2].values.back() << ", mu = " << cols[3].values.back() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const CommonArgs& args, const std::vector<std::string>& run_dirs) {
    if (run_dirs.empty()) throw ConfigError("report: need at least one run directory");
    std::vector<json> manifests;
    for (const auto& d : run_dirs)
        manifests.push_back(json::parse(read_text(fs::path(d) / "manifest.json")));

    // Compatibility: same command, same config apart from seed and replicas.
    auto strip_variable = [](json c) {
        c.erase("seed");
        if (c.contains("replicas")) c.erase("replicas");
        return c;
    };
    for (size_t i = 1; i < manifests.size(); ++i) {
        if (manifests[i]["command"] != manifests[0]["command"] ||
            strip_variable(manifests[i]["config"]) != strip_variable(manifests[0]["config"]))
            throw ConfigError("report: incompatible run parameter trees");
    }

    RunManifest manifest("report", manifests[0]["config"], 0);
    fs::path dir(args.out_dir);
    fs::create_directories(dir);

    struct Pooled {
        double num = 0.0, den = 0.0;
        int count = 0;
    };
    std::map<std::string, Pooled> pool;
    for (const auto& d : run_dirs) {
        fs::path rp = fs::path(d) / "results.csv";
        if (!fs::exists(rp)) continue;
        std::istringstream in(read_text(rp));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string name, val, se;
            std::getline(row, name, ',');
            std::getline(row, val, ',');
            std::getline(row, se, ',');
            double v = std::stod(val), s = std::stod(se);
            double w = s > 0 ? 1.0 / (s * s) : 1.0;
            pool[name].num += w * v;
            pool[name].den += w;
            pool[name].count += 1;
        }
    }
    if (pool.empty()) throw ConfigError("report: no results.csv rows found in the runs");

    std::vector<std::string> names;
    std::vector<CsvColumn> cols(3);
    cols[0].name = "value";
    cols[1].name = "stderr";
    cols[2].name = "n_runs";
    for (const auto& [name, p] : pool) {
        names.push_back(name);
        cols[0].values.push_back(p.num / p.den);
        cols[1].values.push_back(std::sqrt(1.0 / p.den));
        cols[2].values.push_back(p.count);
    }
    write_results(dir, "summary", args.format, names, cols, manifest);

    SvgSeries vals{"pooled values", {}, {}, false};
    for (size_t i = 0; i < names.size(); ++i) {
        vals.x.push_back(static_cast<double>(i));
        vals.y.push_back(cols[0].values[i]);
    }
    fs::path svg = dir / "summary.svg";
    write_svg_plot(svg, "pooled results", {vals}, false, false);
    manifest.add_output(svg);
    manifest.finish_and_write(dir);
    std::cout << "report: pooled " << names.size() << " result(s) over " << run_dirs.size()
              << " run(s)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hjlab: kicked random Hamilton-Jacobi/Burgers laboratory"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> report_dirs;
    uint64_t seed_flag = 0;
    std::vector<CLI::Option*> seed_opts;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("--config", args.config_path, "JSON config path")->required();
        sub->add_option("--out", args.out_dir, "output run directory");
        sub->add_option("--workers", args.workers, "worker threads");
        sub->add_option("--format", args.format, "results format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        seed_opts.push_back(sub->add_option("--seed", seed_flag, "override the config seed"));
    };

    CLI::App* simulate = app.add_subcommand("simulate", "forced HJ run with snapshots and strips");
    add_common(simulate, true);
    CLI::App* coalesce = app.add_subcommand("coalesce", "coalescing walks and Pfaffian checks");
    add_common(coalesce, true);
    CLI::App* renorm = app.add_subcommand("renorm", "strip renormalisation and alpha");
    add_common(renorm, true);
    CLI::App* exponents = app.add_subcommand("exponents", "xi and chi estimation");
    add_common(exponents, true);
    CLI::App* polymer = app.add_subcommand("polymer-check", "Gibbs vs controlled chain");
    add_common(polymer, true);
    CLI::App* airy = app.add_subcommand("airy", "sheet renormalisation mechanics");
    add_common(airy, true);
    CLI::App* report = app.add_subcommand("report", "aggregate run directories");
    report->add_option("runs", report_dirs, "run directories")->required();
    add_common(report, false);

    CLI11_PARSE(app, argc, argv);
    for (CLI::Option* o : seed_opts)
        if (o->count() > 0) args.seed_override = seed_flag;

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (coalesce->parsed()) return cmd_coalesce(args);
        if (renorm->parsed()) return cmd_renorm(args);
        if (exponents->parsed()) return cmd_exponents(args);
        if (polymer->parsed()) return cmd_polymer_check(args);
        if (airy->parsed()) return cmd_airy(args);
        if (report->parsed()) return cmd_report(args, report_dirs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InsufficientStatistics& e) {
        std::cerr << "insufficient statistics: " << e.what() << "\n";
        return kExitStats;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
