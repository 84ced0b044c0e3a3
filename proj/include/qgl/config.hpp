#pragma once

// Resolved run configuration shared by the CLI and the experiment runners.
// Precedence: command-line flags over config-file values over the defaults
// below; the fully resolved configuration is echoed into every manifest.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgl/common.hpp"
#include "qgl/distributions.hpp"

namespace qgl {

struct RunConfig {
    std::string command;

    int d = 1;
    int n = 16;
    std::vector<int> n_list;
    double alpha = 1.0;
    double l_min = 0.8;
    double l_max = 1.2;
    std::string dist = "raised_cosine";
    std::uint64_t seed = 1;
    int realizations = 200;
    std::vector<double> window = {0.5, 6.5};  // [lo, hi]
    std::vector<double> widths = {0.04, 0.02, 0.01};
    double e0 = std::numeric_limits<double>::quiet_NaN();  // default: inf Sigma
    double beta_exp = 0.5;
    std::string out;  // default: $QGL_OUT or ./qgl_out, plus the command name
    int threads = 0;  // 0 = available parallelism
    bool plot = false;
    double tol_root = 1e-10;
    double tol_eig = 1e-7;
    double u = 1.0;       // bands: spacing of the periodic reference
    int fd_m = 32;        // oracle: grid points per edge
    std::string ids_variant = "h";
    double ids_e = 1.5;   // ids m-variant: the fixed energy
    int grid_points = 64;
    bool raw_dump = false;
    double a_threshold = std::numeric_limits<double>::quiet_NaN();  // check: local-energy a

    LengthDistribution distribution() const {
        return {parse_dist_kind(dist), l_min, l_max};
    }

    Interval window_interval() const { return {window[0], window[1]}; }

    void validate() const {
        if (d < 1) throw ConfigError("constraint violated: d >= 1");
        if (n < 0) throw ConfigError("constraint violated: n >= 0");
        for (int m : n_list)
            if (m < 0) throw ConfigError("constraint violated: n >= 0 in n-list");
        if (!(l_min > 0.0)) throw ConfigError("constraint violated: l_min > 0");
        if (dist != "constant" && !(l_min < l_max))
            throw ConfigError("constraint violated: l_min < l_max");
        if (realizations < 1) throw ConfigError("constraint violated: realizations >= 1");
        if (window.size() != 2 || !(window[0] < window[1]))
            throw ConfigError("constraint violated: window must be lo,hi with lo < hi");
        for (std::size_t i = 1; i < widths.size(); ++i)
            if (!(widths[i] < widths[i - 1]))
                throw ConfigError("constraint violated: widths strictly decreasing");
        for (double w : widths)
            if (!(w > 0.0)) throw ConfigError("constraint violated: widths > 0");
        if (!(tol_root > 0.0)) throw ConfigError("constraint violated: tol_root > 0");
        if (!(tol_eig > 0.0)) throw ConfigError("constraint violated: tol_eig > 0");
        if (!(u > 0.0)) throw ConfigError("constraint violated: u > 0");
        if (fd_m < 16) throw ConfigError("constraint violated: fd-m >= 16");
        if (threads < 0) throw ConfigError("constraint violated: threads >= 0");
        if (!(beta_exp > 0.0 && beta_exp < 1.0))
            throw ConfigError("constraint violated: beta-exp in (0,1)");
        if (ids_variant != "h" && ids_variant != "m")
            throw ConfigError("constraint violated: ids-variant is 'h' or 'm'");
        parse_dist_kind(dist);  // throws on unknown names
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["d"] = d;
        j["n"] = n;
        j["n_list"] = n_list;
        j["alpha"] = alpha;
        j["l_min"] = l_min;
        j["l_max"] = l_max;
        j["dist"] = dist;
        j["seed"] = seed;
        j["realizations"] = realizations;
        j["window"] = window;
        j["widths"] = widths;
        if (std::isnan(e0))
            j["e0"] = nullptr;
        else
            j["e0"] = e0;
        j["beta_exp"] = beta_exp;
        j["out"] = out;
        j["threads"] = threads;
        j["plot"] = plot;
        j["tol_root"] = tol_root;
        j["tol_eig"] = tol_eig;
        j["u"] = u;
        j["fd_m"] = fd_m;
        j["ids_variant"] = ids_variant;
        j["ids_e"] = ids_e;
        j["grid_points"] = grid_points;
        j["raw_dump"] = raw_dump;
        return j;
    }
};

}  // namespace qgl
