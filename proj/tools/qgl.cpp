// Command-line front end for the quantum-graph lattice laboratory.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
// Options may also come from a config file (--config FILE; `key=value` lines,
// `#` comments, [subcommand] sections); command-line flags override file
// values, which override the built-in defaults.

#include <CLI11.hpp>
#include <cstdio>

#include "qgl/runner.hpp"

int main(int argc, char** argv) {
    qgl::RunConfig cfg;

    CLI::App app{"qgl: spectra and localization experiments for quantum-graph "
                 "lattices with random edge lengths"};
    app.set_config("--config", "", "flat key=value config file (# comments)");
    app.option_defaults()->always_capture_default();

    app.add_option("--d", cfg.d, "lattice dimension");
    app.add_option("--n", cfg.n, "cube radius");
    app.add_option("--n-list", cfg.n_list, "cube radii for scaling experiments")
        ->delimiter(',');
    app.add_option("--alpha", cfg.alpha, "vertex coupling constant");
    app.add_option("--l-min", cfg.l_min, "lower length bound");
    app.add_option("--l-max", cfg.l_max, "upper length bound");
    app.add_option("--dist", cfg.dist,
                   "length distribution: uniform | triangular | raised_cosine | constant");
    app.add_option("--seed", cfg.seed, "master seed");
    app.add_option("--realizations", cfg.realizations, "Monte Carlo realizations per cell");
    app.add_option("--window", cfg.window, "energy window lo,hi")->delimiter(',')->expected(2);
    app.add_option("--widths", cfg.widths, "decreasing interval widths |J|")->delimiter(',');
    app.add_option("--e0", cfg.e0, "spectral edge (default: inf Sigma)");
    app.add_option("--beta-exp", cfg.beta_exp, "initial-scale exponent beta in (0,1)");
    app.add_option("--out", cfg.out, "output directory (default: $QGL_OUT or ./qgl_out)");
    app.add_option("--threads", cfg.threads, "worker cap, 0 = available parallelism");
    app.add_flag("--plot", cfg.plot, "emit SVG charts next to the CSV tables");
    app.add_option("--tol-root", cfg.tol_root, "root-finding tolerance in E");
    app.add_option("--tol-eig", cfg.tol_eig, "eigenvalue-residual tolerance");
    app.add_option("--u", cfg.u, "edge length of the periodic reference (bands)");
    app.add_option("--fd-m", cfg.fd_m, "oracle grid points per edge (>= 16)");
    app.add_option("--ids-variant", cfg.ids_variant, "ids variant: h | m");
    app.add_option("--ids-e", cfg.ids_e, "fixed energy for the ids m-variant");
    app.add_option("--grid-points", cfg.grid_points, "output grid size (ids, sigma)");
    app.add_flag("--raw-dump", cfg.raw_dump, "dump per-realization eigenvalues");

    app.fallthrough();
    app.require_subcommand(0, 1);
    for (const char* name : {"bands", "sigma", "infspec", "spectrum", "oracle", "ids", "wegner",
                             "lifshitz", "localize", "check"})
        app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // --help: usage text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    auto subs = app.get_subcommands();
    if (subs.empty()) {
        std::fputs(app.help().c_str(), stderr);
        return 2;
    }
    cfg.command = subs.front()->get_name();

    try {
        return qgl::run_command(cfg);
    } catch (const qgl::ConfigError& e) {
        std::fprintf(stderr, "qgl %s: %s\n", cfg.command.c_str(), e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "qgl %s: %s\n", cfg.command.c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qgl %s: numerical failure: %s\n", cfg.command.c_str(), e.what());
        return 1;
    }
}
