#pragma once

// Subcommand implementations behind the CLI: each resolves its output
// directory, runs the requested computation, and writes manifest.json plus
// CSV tables (and SVG plots when requested). Exit code 0 on success, 1 on
// numerical failure, 2 on usage/config errors (mapped by the CLI main).

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>

#include "qgl/config.hpp"
#include "qgl/ensemble.hpp"
#include "qgl/io.hpp"

namespace qgl {

inline constexpr const char* kToolVersion = "qgl 1.0.0";

namespace run_detail {

inline std::filesystem::path resolve_outdir(const RunConfig& cfg) {
    std::filesystem::path root;
    if (!cfg.out.empty()) {
        root = cfg.out;
    } else {
        const char* env = std::getenv("QGL_OUT");
        root = env && *env ? env : "qgl_out";
        root /= cfg.command;
    }
    std::filesystem::create_directories(root);
    return root;
}

inline std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct ManifestTimer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const RunConfig& cfg, const std::filesystem::path& dir,
               nlohmann::json extra = {}) const {
        nlohmann::json j;
        j["tool"] = kToolVersion;
        j["config"] = cfg.to_json();
        j["wall_clock"] = iso_now();
        j["duration_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!extra.is_null()) j["result"] = std::move(extra);
        io::write_json(dir / "manifest.json", j);
    }
};

inline std::vector<int> effective_n_list(const RunConfig& cfg) {
    return cfg.n_list.empty() ? std::vector<int>{cfg.n} : cfg.n_list;
}

inline void write_band_csv(const std::filesystem::path& path, const BandList& bl) {
    std::vector<io::Row> rows;
    for (std::size_t i = 0; i < bl.bands.size(); ++i)
        rows.push_back({std::to_string(i), fmt_g17(bl.bands[i].lo), fmt_g17(bl.bands[i].hi)});
    io::write_csv(path, {"band_index", "left", "right"}, rows);
}

inline nlohmann::json band_json(const BandList& bl) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < bl.bands.size(); ++i)
        arr.push_back({{"band_index", i},
                       {"left", bl.bands[i].lo},
                       {"right", bl.bands[i].hi},
                       {"truncated", bl.bands[i].truncated_hi}});
    return arr;
}

inline void write_spectrum_csv(const std::filesystem::path& dir, const SpectrumResult& sp,
                               const std::string& stem) {
    std::vector<io::Row> rows;
    for (const auto& it : sp.eigenvalues)
        rows.push_back({fmt_g17(it.E), std::to_string(it.multiplicity), std::to_string(it.branch),
                        fmt_g17(it.residual)});
    io::write_csv(dir / (stem + ".csv"), {"E", "multiplicity", "branch_id", "residual"}, rows);
    std::vector<io::Row> ex;
    for (const auto& g : sp.excluded) ex.push_back({fmt_g17(g.lo), fmt_g17(g.hi)});
    io::write_csv(dir / (stem + "_excluded.csv"), {"lo", "hi"}, ex);
}

inline nlohmann::json spectrum_diag_json(const SpectrumResult& sp) {
    return {{"method", sp.method},
            {"eigenvalues", sp.eigenvalues.size()},
            {"excluded_intervals", sp.excluded.size()},
            {"panels", sp.diag.panels},
            {"grid_points", sp.diag.grid_points},
            {"matrix_evals", sp.diag.matrix_evals},
            {"bisection_steps", sp.diag.bisection_steps},
            {"resolution_warning", sp.diag.resolution_warning},
            {"dofs", sp.diag.dofs}};
}

}  // namespace run_detail

// ---- subcommands -------------------------------------------------------------

inline int run_bands(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    double beta = cfg.alpha / cfg.d;
    BandList bl = bands_P(cfg.u, beta, cfg.window[1], cfg.tol_root);
    run_detail::write_band_csv(dir / "bands.csv", bl);
    io::write_json(dir / "bands.json", run_detail::band_json(bl));
    if (cfg.plot) {
        std::vector<io::Series> series;
        io::Series s{"dispersion", {}, {}};
        for (int i = 0; i <= 600; ++i) {
            double E = cfg.window[0] + (cfg.window[1] - cfg.window[0]) * i / 600.0;
            s.x.push_back(E);
            s.y.push_back(std::clamp(dispersion(E, cfg.u, beta), -3.0, 3.0));
        }
        series.push_back(std::move(s));
        io::write_text(dir / "bands.svg",
                       io::svg_line_chart("dispersion (bands where |D| <= 1)", "E", "D", series));
    }
    timer.write(cfg, dir, {{"bands", bl.bands.size()}});
    return 0;
}

inline int run_sigma(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    SigmaOptions opts;
    opts.tol_root = cfg.tol_root;
    opts.initial_grid = cfg.grid_points;
    SigmaResult sr = sigma_union(cfg.alpha, cfg.d, cfg.l_min, cfg.l_max, cfg.window[1], opts);
    run_detail::write_band_csv(dir / "sigma_bands.csv", sr.bands);
    std::vector<io::Row> edges;
    for (const auto& e : sr.edges)
        edges.push_back({fmt_g17(e.E), e.is_left ? "left" : "right", e.outside_delta ? "1" : "0"});
    io::write_csv(dir / "sigma_edges.csv", {"energy", "side", "outside_delta"}, edges);
    DeltaSet ds = delta_set(cfg.l_min, cfg.l_max, cfg.window[1]);
    std::vector<io::Row> drows;
    for (const auto& iv : ds.intervals) drows.push_back({fmt_g17(iv.lo), fmt_g17(iv.hi)});
    io::write_csv(dir / "delta.csv", {"lo", "hi"}, drows);
    if (cfg.plot) {
        std::vector<io::Series> series;
        io::Series s{"sigma", {}, {}};
        for (const auto& b : sr.bands.bands) {
            s.x.push_back(b.lo);
            s.y.push_back(0.0);
            s.x.push_back(b.lo);
            s.y.push_back(1.0);
            s.x.push_back(b.hi);
            s.y.push_back(1.0);
            s.x.push_back(b.hi);
            s.y.push_back(0.0);
        }
        series.push_back(std::move(s));
        io::write_text(dir / "sigma.svg",
                       io::svg_line_chart("almost-sure spectrum indicator", "E", "in band", series));
    }
    timer.write(cfg, dir,
                {{"bands", sr.bands.bands.size()},
                 {"final_drift", sr.final_drift},
                 {"refinement_rounds", sr.refinement_rounds},
                 {"u_points", sr.u_points}});
    return 0;
}

inline int run_infspec(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    RootResult r = inf_sigma(cfg.alpha, cfg.d, cfg.l_min, cfg.l_max, cfg.tol_root);
    io::write_csv(dir / "infspec.csv", {"alpha", "energy", "residual", "iterations"},
                  {{fmt_g17(cfg.alpha), fmt_g17(r.value), fmt_g17(r.residual),
                    std::to_string(r.iterations)}});
    timer.write(cfg, dir, {{"energy", r.value}, {"residual", r.residual}});
    return 0;
}

inline int run_spectrum(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    Cube cube = build_cube(cfg.d, cfg.n);
    LengthField f = sample_lengths(cfg.distribution(), cube, cfg.seed);
    SpectrumOptions opts;
    opts.tol_eig = cfg.tol_eig;
    SpectrumResult sp = spectrum_H(cube, f, cfg.alpha, cfg.window_interval(), opts);
    run_detail::write_spectrum_csv(dir, sp, "eigenvalues");
    timer.write(cfg, dir, run_detail::spectrum_diag_json(sp));
    return 0;
}

inline int run_oracle(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    Cube cube = build_cube(cfg.d, cfg.n);
    LengthField f = sample_lengths(cfg.distribution(), cube, cfg.seed);
    SpectrumResult sp = fd_oracle_spectrum(cube, f, cfg.alpha, cfg.fd_m, cfg.window_interval());
    run_detail::write_spectrum_csv(dir, sp, "oracle_eigenvalues");
    timer.write(cfg, dir, run_detail::spectrum_diag_json(sp));
    return 0;
}

inline int run_ids(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    std::vector<double> grid;
    for (int i = 0; i < cfg.grid_points; ++i)
        grid.push_back(cfg.window[0] +
                       (cfg.window[1] - cfg.window[0]) * i / (cfg.grid_points - 1.0));
    IdsCurve curve =
        cfg.ids_variant == "m"
            ? ids_estimate_m(cfg.d, cfg.n, cfg.ids_e, cfg.distribution(), cfg.realizations, grid,
                             cfg.seed, cfg.threads)
            : ids_estimate_h(cfg.d, cfg.n, cfg.alpha, cfg.distribution(), cfg.realizations, grid,
                             cfg.seed, cfg.threads);
    std::vector<io::Row> rows;
    for (const auto& p : curve.points)
        rows.push_back({fmt_g17(p.t), fmt_g17(p.mean), fmt_g17(p.lo), fmt_g17(p.hi)});
    io::write_csv(dir / "ids.csv", {"t", "k_mean", "ci_lo", "ci_hi"}, rows);
    if (cfg.plot) {
        io::Series s{"ids", {}, {}};
        for (const auto& p : curve.points) {
            s.x.push_back(p.t);
            s.y.push_back(p.mean);
        }
        io::write_text(dir / "ids.svg",
                       io::svg_line_chart("integrated density of states", "t", "k(t)", {s}));
    }
    timer.write(cfg, dir,
                {{"variant", curve.variant}, {"n_vertices", curve.n_vertices}});
    return 0;
}

inline int run_wegner(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    WegnerReport rep = wegner_experiment(
        cfg.d, run_detail::effective_n_list(cfg), cfg.alpha, cfg.window_interval(), cfg.widths,
        cfg.distribution(), cfg.realizations, cfg.seed, cfg.threads,
        std::numeric_limits<double>::quiet_NaN(), cfg.raw_dump);
    std::vector<io::Row> rows;
    for (const auto& c : rep.cells)
        rows.push_back({std::to_string(c.n), std::to_string(c.edges), std::to_string(c.vertices),
                        fmt_g17(c.width), fmt_g17(c.center), std::to_string(c.realizations),
                        std::to_string(c.hits), fmt_g17(c.p), fmt_g17(c.lo), fmt_g17(c.hi),
                        fmt_g17(c.x), fmt_g17(c.c_hat)});
    io::write_csv(dir / "wegner_cells.csv",
                  {"n", "edges", "vertices", "width", "center", "realizations", "hits", "p",
                   "wilson_lo", "wilson_hi", "lambda_times_width", "c_hat"},
                  rows);
    if (cfg.raw_dump) {
        std::vector<io::Row> raw;
        for (std::size_t r = 0; r < rep.raw_eigenvalues.size(); ++r)
            for (double E : rep.raw_eigenvalues[r])
                raw.push_back({std::to_string(r), fmt_g17(E), "1"});
        io::write_csv(dir / "wegner_raw.csv", {"realization", "E", "multiplicity"}, raw);
    }
    if (cfg.plot) {
        io::Series s{"P vs |Lambda||J|", {}, {}};
        for (const auto& c : rep.cells) {
            s.x.push_back(c.x);
            s.y.push_back(c.p);
        }
        io::write_text(dir / "wegner.svg",
                       io::svg_line_chart("Wegner scaling", "|Lambda| |J|", "P", {s}));
    }
    timer.write(cfg, dir, {{"fitted_C", rep.fitted_C}});
    return 0;
}

inline int run_lifshitz(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    double e0 = cfg.e0;
    if (std::isnan(e0)) e0 = inf_sigma(cfg.alpha, cfg.d, cfg.l_min, cfg.l_max, cfg.tol_root).value;
    LifshitzReport rep =
        lifshitz_experiment(cfg.d, run_detail::effective_n_list(cfg), cfg.alpha, e0, cfg.beta_exp,
                            cfg.distribution(), cfg.realizations, cfg.seed, cfg.threads);
    std::vector<io::Row> prows;
    for (const auto& c : rep.prob)
        prows.push_back({std::to_string(c.n), fmt_g17(c.delta), std::to_string(c.realizations),
                         std::to_string(c.hits), fmt_g17(c.p), fmt_g17(c.lo), fmt_g17(c.hi)});
    io::write_csv(dir / "lifshitz_prob.csv",
                  {"n", "delta", "realizations", "hits", "p", "wilson_lo", "wilson_hi"}, prows);
    std::vector<io::Row> trows;
    for (const auto& t : rep.tail)
        trows.push_back({std::to_string(t.n), fmt_g17(t.eps), fmt_g17(t.tail), fmt_g17(t.se)});
    io::write_csv(dir / "lifshitz_ids_tail.csv", {"n", "eps", "tail", "se"}, trows);
    if (cfg.plot) {
        io::Series s{"log|log tail| vs log eps", {}, {}};
        for (const auto& t : rep.tail)
            if (t.tail > 0.0 && t.tail < 0.5) {
                s.x.push_back(std::log(t.eps));
                s.y.push_back(std::log(-std::log(t.tail)));
            }
        io::write_text(dir / "lifshitz.svg",
                       io::svg_line_chart("Lifshitz tail", "log eps", "log|log tail|", {s}));
    }
    timer.write(cfg, dir,
                {{"e0", e0},
                 {"xi_fit", rep.xi_fit},
                 {"xi_cells", rep.xi_cells},
                 {"slope_fit", rep.slope_fit},
                 {"slope_stderr", rep.slope_stderr},
                 {"slope_points", rep.slope_points}});
    return 0;
}

inline int run_localize(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    Cube cube = build_cube(cfg.d, cfg.n);
    LengthField f = sample_lengths(cfg.distribution(), cube, cfg.seed);
    SpectrumOptions opts;
    opts.tol_eig = cfg.tol_eig;
    SpectrumResult sp = spectrum_H(cube, f, cfg.alpha, cfg.window_interval(), opts);
    std::vector<io::Row> rows;
    for (const auto& it : sp.eigenvalues) {
        Eigen::VectorXd vec = vertex_eigenvector(cube, f, it.E, cfg.alpha);
        vec.normalize();
        try {
            LocalizationProfile p = localization_profile(cube, vec);
            rows.push_back({fmt_g17(it.E), fmt_g17(p.ipr), fmt_g17(p.decay_rate), fmt_g17(p.r2),
                            cube.vertices[static_cast<std::size_t>(p.center)].str(),
                            std::to_string(p.radii_used)});
        } catch (const QglError&) {
            rows.push_back({fmt_g17(it.E), fmt_g17(vec.array().abs().pow(4).sum()), "nan", "nan",
                            "-", "0"});
        }
    }
    io::write_csv(dir / "localization.csv",
                  {"E", "ipr", "decay_rate", "r2", "center", "radii_used"}, rows);
    timer.write(cfg, dir, {{"states", rows.size()}});
    return 0;
}

// The invariant suite: one row per check, pass/fail; exit 0 iff all pass.
inline int run_check(const RunConfig& cfg) {
    auto dir = run_detail::resolve_outdir(cfg);
    run_detail::ManifestTimer timer;
    struct CheckRow {
        std::string name;
        double value, threshold;
        bool le;  // pass iff value <= threshold (else >=)
        bool pass() const { return le ? value <= threshold : value >= threshold; }
    };
    std::vector<CheckRow> rows;
    LengthDistribution dist = cfg.distribution();

    // dispersion continuity across E = 0
    {
        double worst = 0.0;
        for (double beta : {-1.0, 0.0, cfg.alpha}) {
            double prev = dispersion(-1e-8, 1.0, beta);
            for (int i = 1; i <= 80; ++i) {
                double E = -1e-8 + 2.5e-10 * i;
                double cur = dispersion(E, 1.0, beta);
                worst = std::max(worst, std::abs(cur - prev));
                prev = cur;
            }
        }
        rows.push_back({"dispersion_continuity_at_zero", worst, 1e-9, true});
    }
    // band-edge residuals
    {
        BandList bl = bands_P(1.0, 2.0, 40.0, cfg.tol_root);
        double worst = 0.0;
        for (const auto& b : bl.bands)
            for (double e : {b.lo, b.hi}) {
                if (b.truncated_hi && e == b.hi) continue;
                double r = std::min(std::abs(dispersion(e, 1.0, 2.0) - 1.0),
                                    std::abs(dispersion(e, 1.0, 2.0) + 1.0));
                double slope = std::abs(dispersion(e + 1e-6, 1.0, 2.0) -
                                        dispersion(e - 1e-6, 1.0, 2.0)) / 2e-6;
                worst = std::max(worst, r / std::max(1.0, slope));
            }
        rows.push_back({"band_edge_residual", worst, 10.0 * cfg.tol_root, true});
    }
    // derivative blocks vs central differences
    {
        Cube cube = build_cube(cfg.d, std::min(cfg.n, 4));
        LengthField f = sample_lengths(dist, cube, cfg.seed);
        double worst = 0.0;
        for (std::size_t e = 0; e < cube.n_edges(); e += 2) {
            EdgeBlock blk = dM_dl(cube, f, 1.4, e);
            double h = 1e-6;
            LengthField fp = f, fm = f;
            fp.value[e] += h;
            fm.value[e] -= h;
            fp.l_max += h;
            fm.l_min -= h;
            Eigen::MatrixXd fd =
                (assemble_M(cube, fp, 1.4).mat - assemble_M(cube, fm, 1.4).mat) / (2.0 * h);
            worst = std::max(worst, (block_to_dense(blk, cube.n_vertices()) - fd).norm());
        }
        rows.push_back({"dM_dl_vs_central_difference", worst, 1e-5, true});
    }
    // monotonicity: smallest eigenvalue of sum_e dM/dl_e vs beta
    {
        GapBounds gb = gap_constants({1.0, 2.0}, dist.l_min, dist.l_max, cfg.d);
        Cube cube = build_cube(cfg.d, std::min(cfg.n, 6));
        LengthField f = sample_lengths(dist, cube, cfg.seed + 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sum_dM_dl(cube, f, 1.5),
                                                          Eigen::EigenvaluesOnly);
        rows.push_back({"sum_dM_dl_vs_beta", es.eigenvalues()(0) - gb.beta, 0.0, false});
    }
    // negative-energy factorization and margin
    {
        Cube cube = build_cube(cfg.d, std::min(cfg.n, 6));
        LengthField f = sample_lengths(dist, cube, cfg.seed + 2);
        NegativeGapResult r = negative_gap_check(cube, f, -1.1, 0.5, 2.0);
        rows.push_back({"negative_factorization_residual", r.factorization_residual, 1e-12, true});
        rows.push_back({"negative_K_margin", r.margin, -1e-10, false});
    }
    // local energy estimate
    {
        double b = local_energy_b(1.5, dist.l_min, dist.l_max);
        double a = std::isnan(cfg.a_threshold) ? 0.5 * std::min(b, 4.0) : cfg.a_threshold;
        LocalEnergyResult r = local_energy_check(cfg.d, std::min(cfg.n, 24), 1.5, dist, a, 2000,
                                                 cfg.seed + 3);
        rows.push_back({"local_energy_min_margin", r.min_margin, -1e-10, false});
    }
    // multiplicity identity on a small instance
    {
        Cube cube = build_cube(1, 6);
        LengthField f = sample_lengths(dist, cube, cfg.seed + 4);
        SpectrumResult sp = spectrum_H(cube, f, cfg.alpha, {0.4, 3.0});
        long mismatches = 0;
        for (const auto& it : sp.eigenvalues) {
            KernelDims kd = kernel_dims(cube, f, it.E, cfg.alpha);
            if (kd.dim_ker_m != kd.dim_ker_h) ++mismatches;
        }
        rows.push_back({"multiplicity_identity_mismatches", static_cast<double>(mismatches), 0.0,
                        true});
    }
    // sampling determinism
    {
        Cube cube = build_cube(cfg.d, std::min(cfg.n, 8));
        LengthField a = sample_lengths(dist, cube, cfg.seed);
        LengthField b2 = sample_lengths(dist, cube, cfg.seed);
        double diff = 0.0;
        for (std::size_t e = 0; e < cube.n_edges(); ++e)
            diff = std::max(diff, std::abs(a[e] - b2[e]));
        rows.push_back({"sampling_determinism", diff, 0.0, true});
    }

    std::vector<io::Row> csv;
    bool all = true;
    for (const auto& r : rows) {
        bool ok = r.pass();
        all = all && ok;
        csv.push_back({r.name, fmt_g17(r.value), fmt_g17(r.threshold), ok ? "pass" : "fail"});
        std::printf("%-36s %-12s value=%.3e threshold=%.3e\n", r.name.c_str(),
                    ok ? "pass" : "FAIL", r.value, r.threshold);
    }
    io::write_csv(dir / "check.csv", {"name", "value", "threshold", "status"}, csv);
    timer.write(cfg, dir, {{"all_pass", all}});
    return all ? 0 : 1;
}

inline int run_command(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.command == "bands") return run_bands(cfg);
    if (cfg.command == "sigma") return run_sigma(cfg);
    if (cfg.command == "infspec") return run_infspec(cfg);
    if (cfg.command == "spectrum") return run_spectrum(cfg);
    if (cfg.command == "oracle") return run_oracle(cfg);
    if (cfg.command == "ids") return run_ids(cfg);
    if (cfg.command == "wegner") return run_wegner(cfg);
    if (cfg.command == "lifshitz") return run_lifshitz(cfg);
    if (cfg.command == "localize") return run_localize(cfg);
    if (cfg.command == "check") return run_check(cfg);
    throw ConfigError("unknown command: " + cfg.command);
}

}  // namespace qgl
