#pragma once

// Deterministic band-structure objects for the periodic point-interaction
// operator P_{u,beta} and the almost-sure spectrum of the random-length model:
// dispersion function, band lists, the union over the length support, the
// bottom of the spectrum, the forbidden set Delta, and the admissible
// negative-coupling ranges.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "qgl/common.hpp"
#include "qgl/num.hpp"

namespace qgl {

inline constexpr double kTolRoot = 1e-10;  // absolute bisection tolerance in E

// D(E,u,beta) = cos(sqrt(E) u) + beta sin(sqrt(E) u)/(2 sqrt(E)); E is in the
// spectrum of P_{u,beta} iff D in [-1,1]. Real-analytic across E = 0.
inline double dispersion(double E, double u, double beta) {
    if (!(u > 0.0)) throw std::invalid_argument("dispersion: u > 0 violated");
    double z = E * u * u;
    if (std::abs(z) < num::kSeriesZ)
        return num::cos_w_series(z) + 0.5 * beta * u * num::sin_over_w_series(z);
    if (E > 0.0) {
        double k = std::sqrt(E);
        return num::cos_pr(u * k) + 0.5 * beta * num::sin_pr(u * k) / k;
    }
    double kap = std::sqrt(-E);
    return std::cosh(u * kap) + 0.5 * beta * std::sinh(u * kap) / kap;
}

struct Band {
    double lo = 0.0;
    double hi = 0.0;
    bool truncated_hi = false;  // band continues past the requested E_max
};

struct BandList {
    std::vector<Band> bands;
    // metadata: generating parameters
    double u_lo = 0.0, u_hi = 0.0;  // equal for a single Kronig-Penney operator
    double coupling = 0.0;          // beta, or alpha for a union
    int d = 1;

    bool contains(double E) const {
        for (const auto& b : bands)
            if (E >= b.lo && E <= b.hi) return true;
        return false;
    }
    // distance to the nearest band (0 inside)
    double distance(double E) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : bands) {
            if (E >= b.lo && E <= b.hi) return 0.0;
            best = std::min(best, std::min(std::abs(E - b.lo), std::abs(E - b.hi)));
        }
        return best;
    }
};

namespace detail {

inline double bisect_dispersion(double u, double beta, double target, double Ea, double Eb,
                                double tol) {
    double fa = dispersion(Ea, u, beta) - target;
    for (int it = 0; it < 200 && Eb - Ea > tol; ++it) {
        double Em = 0.5 * (Ea + Eb);
        double fm = dispersion(Em, u, beta) - target;
        if ((fa <= 0.0) == (fm <= 0.0)) {
            Ea = Em;
            fa = fm;
        } else {
            Eb = Em;
        }
    }
    return 0.5 * (Ea + Eb);
}

}  // namespace detail

// All spectral bands of P_{u,beta} intersecting (-inf, E_max], located as sign
// changes of D -/+ 1 on a phase-resolved grid refined by bisection. For
// beta != 0 every Dirichlet point (pi n / u)^2 is seeded as a candidate edge.
inline BandList bands_P(double u, double beta, double E_max, double tol_root = kTolRoot) {
    if (!(u > 0.0)) throw std::invalid_argument("bands_P: u > 0 violated");
    if (!(E_max > 0.0)) throw std::invalid_argument("bands_P: E_max > 0 violated");

    std::vector<double> grid;  // energies, ascending, straddling the whole search range
    // negative range: only reachable for beta < 0
    if (beta < 0.0) {
        double K = std::max(std::abs(beta), 2.0 / u) + 2.0 / u;
        int npts = 1024;
        for (int i = npts; i >= 1; --i) {
            double k = K * static_cast<double>(i) / npts;
            grid.push_back(-k * k);
        }
    }
    grid.push_back(0.0);
    // positive range: uniform in phase x = u*sqrt(E), 128 samples per pi
    double X = u * std::sqrt(E_max);
    int npos = std::max(256, static_cast<int>(std::ceil(X / M_PI * 128.0)));
    for (int i = 1; i <= npos; ++i) {
        double x = X * static_cast<double>(i) / npos;
        grid.push_back(sq(x / u));
    }

    std::vector<double> cuts;  // candidate band boundaries
    double fprev_m = dispersion(grid[0], u, beta) - 1.0;
    double fprev_p = dispersion(grid[0], u, beta) + 1.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double fm = dispersion(grid[i], u, beta) - 1.0;
        double fp = dispersion(grid[i], u, beta) + 1.0;
        if ((fprev_m <= 0.0) != (fm <= 0.0))
            cuts.push_back(detail::bisect_dispersion(u, beta, +1.0, grid[i - 1], grid[i], tol_root));
        if ((fprev_p <= 0.0) != (fp <= 0.0))
            cuts.push_back(detail::bisect_dispersion(u, beta, -1.0, grid[i - 1], grid[i], tol_root));
        fprev_m = fm;
        fprev_p = fp;
    }
    if (beta != 0.0) {
        // Dirichlet energies are exact |D| = 1 points and spectral edges
        for (int k = 1; sq(M_PI * k / u) <= E_max; ++k) cuts.push_back(sq(M_PI * k / u));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [&](double a, double b) {
                               return std::abs(a - b) <= 4.0 * tol_root * std::max(1.0, std::abs(a));
                           }),
               cuts.end());
    // clamp to the search window
    std::vector<double> pts;
    pts.push_back(grid.front());
    for (double c : cuts)
        if (c > grid.front() && c < E_max) pts.push_back(c);
    pts.push_back(E_max);

    BandList out;
    out.u_lo = out.u_hi = u;
    out.coupling = beta;
    bool open = false;
    double lo = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double mid = 0.5 * (pts[i] + pts[i + 1]);
        bool inside = std::abs(dispersion(mid, u, beta)) <= 1.0;
        if (inside && !open) {
            open = true;
            lo = pts[i];
        } else if (!inside && open) {
            open = false;
            out.bands.push_back({lo, pts[i], false});
        }
    }
    if (open) out.bands.push_back({lo, E_max, std::abs(dispersion(E_max, u, beta)) <= 1.0});
    return out;
}

// ---- forbidden set ---------------------------------------------------------

struct DeltaSet {
    std::vector<Interval> intervals;  // merged, sorted; first entry is the point {0}
    double l_min = 0.0, l_max = 0.0;
};

inline DeltaSet delta_set(double l_min, double l_max, double E_max) {
    if (!(0.0 < l_min && l_min < l_max))
        throw std::invalid_argument("delta_set: 0 < l_min < l_max violated");
    DeltaSet ds;
    ds.l_min = l_min;
    ds.l_max = l_max;
    ds.intervals.push_back({0.0, 0.0});
    for (int n = 1; sq(M_PI * n / l_max) <= E_max; ++n) {
        Interval iv{sq(M_PI * n / l_max), sq(M_PI * n / l_min)};
        if (!ds.intervals.empty() && iv.lo <= ds.intervals.back().hi)
            ds.intervals.back().hi = std::max(ds.intervals.back().hi, iv.hi);
        else
            ds.intervals.push_back(iv);
    }
    return ds;
}

// Membership is evaluated in closed form, so the answer is exact for any E
// (not limited by the E_max used to tabulate intervals).
inline bool is_outside_delta(double E, const DeltaSet& ds) {
    if (E == 0.0) return false;
    if (E < 0.0) return true;
    double x = std::sqrt(E);
    double n_lo = std::ceil(x * ds.l_min / M_PI - 1e-15);
    double n_hi = std::floor(x * ds.l_max / M_PI + 1e-15);
    return !(n_hi >= 1.0 && n_lo <= n_hi);
}

// ---- union over the length support ----------------------------------------

struct SigmaEdge {
    double E = 0.0;
    bool is_left = false;
    bool outside_delta = false;
};

struct SigmaResult {
    BandList bands;
    std::vector<SigmaEdge> edges;
    double final_drift = 0.0;  // max edge motion in the last refinement round
    int refinement_rounds = 0;
    int u_points = 0;
};

struct SigmaOptions {
    double tol_edge = 1e-6;
    int initial_grid = 64;
    int max_rounds = 12;
    double tol_root = kTolRoot;
};

namespace detail {

struct TaggedBand {
    double lo, hi;
    double u_lo, u_hi;  // grid points contributing each boundary
    bool trunc;
};

inline std::vector<TaggedBand> merge_union(const std::map<double, BandList>& per_u) {
    std::vector<TaggedBand> all;
    for (const auto& [u, bl] : per_u)
        for (const auto& b : bl.bands) all.push_back({b.lo, b.hi, u, u, b.truncated_hi});
    std::sort(all.begin(), all.end(),
              [](const TaggedBand& a, const TaggedBand& b) { return a.lo < b.lo; });
    std::vector<TaggedBand> merged;
    for (const auto& b : all) {
        if (!merged.empty() && b.lo <= merged.back().hi + 1e-12 * std::max(1.0, std::abs(b.lo))) {
            auto& m = merged.back();
            if (b.hi > m.hi) {
                m.hi = b.hi;
                m.u_hi = b.u_hi;
                m.trunc = b.trunc;
            } else {
                m.trunc = m.trunc || b.trunc;
            }
        } else {
            merged.push_back(b);
        }
    }
    return merged;
}

inline double edge_set_drift(const std::vector<TaggedBand>& a, const std::vector<TaggedBand>& b) {
    std::vector<double> ea, eb;
    for (const auto& x : a) {
        ea.push_back(x.lo);
        ea.push_back(x.hi);
    }
    for (const auto& x : b) {
        eb.push_back(x.lo);
        eb.push_back(x.hi);
    }
    if (ea.empty() || eb.empty()) return ea.size() == eb.size() ? 0.0 : 1e300;
    auto dir = [](const std::vector<double>& p, const std::vector<double>& q) {
        double worst = 0.0;
        for (double x : p) {
            double best = 1e300;
            for (double y : q) best = std::min(best, std::abs(x - y));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(dir(ea, eb), dir(eb, ea));
}

}  // namespace detail

// Numerical union over u in [l_min, l_max] of the bands of P_{u, alpha/d}.
// The u-grid starts uniform and is refined near the grid points attaining the
// band edges until the edge positions move less than tol_edge per round.
inline SigmaResult sigma_union(double alpha, int d, double l_min, double l_max, double E_max,
                               const SigmaOptions& opts = {}) {
    if (!(0.0 < l_min && l_min < l_max))
        throw std::invalid_argument("sigma_union: 0 < l_min < l_max violated");
    if (d < 1) throw std::invalid_argument("sigma_union: d >= 1 violated");
    double beta = alpha / d;

    std::map<double, BandList> per_u;
    auto ensure_u = [&](double u) {
        if (!per_u.count(u)) per_u.emplace(u, bands_P(u, beta, E_max, opts.tol_root));
    };
    for (int i = 0; i < opts.initial_grid; ++i) {
        double u = l_min + (l_max - l_min) * static_cast<double>(i) / (opts.initial_grid - 1);
        ensure_u(u);
    }

    auto merged = detail::merge_union(per_u);
    double drift = 1e300;
    int rounds = 0;
    while (rounds < opts.max_rounds && drift >= opts.tol_edge) {
        // refine around every u that currently attains an edge
        std::vector<double> contributors;
        for (const auto& b : merged) {
            contributors.push_back(b.u_lo);
            contributors.push_back(b.u_hi);
        }
        std::vector<double> keys;
        for (const auto& [u, bl] : per_u) keys.push_back(u);
        for (double uc : contributors) {
            auto it = std::lower_bound(keys.begin(), keys.end(), uc);
            std::size_t idx = static_cast<std::size_t>(it - keys.begin());
            if (idx + 1 < keys.size()) ensure_u(0.5 * (keys[idx] + keys[idx + 1]));
            if (idx > 0) ensure_u(0.5 * (keys[idx - 1] + keys[idx]));
        }
        auto next = detail::merge_union(per_u);
        drift = detail::edge_set_drift(merged, next);
        merged = std::move(next);
        ++rounds;
    }

    SigmaResult res;
    res.bands.u_lo = l_min;
    res.bands.u_hi = l_max;
    res.bands.coupling = alpha;
    res.bands.d = d;
    res.final_drift = drift;
    res.refinement_rounds = rounds;
    res.u_points = static_cast<int>(per_u.size());
    DeltaSet ds = delta_set(l_min, l_max, std::max(E_max, 1.0));
    for (const auto& b : merged) {
        res.bands.bands.push_back({b.lo, b.hi, b.trunc});
        res.edges.push_back({b.lo, true, is_outside_delta(b.lo, ds)});
        if (!b.trunc) res.edges.push_back({b.hi, false, is_outside_delta(b.hi, ds)});
    }
    return res;
}

// ---- bottom of the spectrum ------------------------------------------------

struct RootResult {
    double value = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

// inf of the almost-sure spectrum: for alpha > 0 the root k in (0, pi/l_max)
// of cos(k l_max) + alpha/(2kd) sin(k l_max) = 1 returned as k^2; 0 for
// alpha = 0; for alpha < 0 the negative solution -k^2 with the hyperbolic
// equation at l_min.
inline RootResult inf_sigma(double alpha, int d, double l_min, double l_max,
                            double tol = kTolRoot) {
    if (!(0.0 < l_min && l_min < l_max))
        throw std::invalid_argument("inf_sigma: 0 < l_min < l_max violated");
    if (d < 1) throw std::invalid_argument("inf_sigma: d >= 1 violated");
    double beta = alpha / d;
    if (alpha == 0.0) return {0.0, 0.0, 0};

    if (alpha > 0.0) {
        double Ea = sq(1e-9 * M_PI / l_max), Eb = sq(M_PI / l_max);
        double fa = dispersion(Ea, l_max, beta) - 1.0;
        double fb = dispersion(Eb, l_max, beta) - 1.0;
        if (!(fa > 0.0 && fb < 0.0))
            throw BracketingFailure("inf_sigma: no bracket on (0, (pi/l_max)^2)");
        int it = 0;
        while (Eb - Ea > tol) {
            double Em = 0.5 * (Ea + Eb);
            ((dispersion(Em, l_max, beta) - 1.0 > 0.0) ? Ea : Eb) = Em;
            ++it;
        }
        double E = 0.5 * (Ea + Eb);
        return {E, std::abs(dispersion(E, l_max, beta) - 1.0), it};
    }

    // alpha < 0: D(-k^2, l_min, beta) - 1 is negative at k -> 0+ and grows to +inf
    double ka = 1e-12, kb = 1.0;
    int guard = 0;
    while (dispersion(-kb * kb, l_min, beta) - 1.0 <= 0.0) {
        kb *= 2.0;
        if (++guard > 200) throw BracketingFailure("inf_sigma: negative-energy bracket failed");
    }
    int it = 0;
    while ((kb - ka) * (kb + ka) > tol) {  // tolerance in E = k^2
        double km = 0.5 * (ka + kb);
        ((dispersion(-km * km, l_min, beta) - 1.0 < 0.0) ? ka : kb) = km;
        ++it;
    }
    double k = 0.5 * (ka + kb);
    return {-k * k, std::abs(dispersion(-k * k, l_min, beta) - 1.0), it};
}

// ---- admissible negative couplings (Wegner case b) -------------------------

// alpha(E) = -2 d sqrt(E) tanh(l_min sqrt(E)/2): the coupling whose spectral
// bottom is -E; strictly decreasing in E.
inline double negative_edge_alpha(int d, double l_min, double E) {
    double k = std::sqrt(E);
    return -2.0 * d * k * std::tanh(0.5 * l_min * k);
}

// Admissibility margin f(E) = gamma(E) + alpha(E) with gamma = tanh(l_min sqrt(E))/sqrt(E).
// Its sign equals the sign of cosh^2(l_min sqrt(E)/2) - E d cosh(l_min sqrt(E)).
inline double negative_admissibility(int d, double l_min, double E) {
    double k = std::sqrt(E);
    return std::tanh(l_min * k) / k - 2.0 * d * k * std::tanh(0.5 * l_min * k);
}

struct NegativeAlphaRanges {
    bool whole_line = false;  // cosh^2(l_min sqrt(E)/2) > E d for all E
    double e1 = 0.0, e2 = 0.0;            // roots of cosh^2(l_min sqrt(E)/2) = E d
    double alpha_lower_branch = 0.0;       // alpha(e1): range (alpha(e1), 0)
    double alpha_upper_branch = 0.0;       // alpha(e2): range (-inf, alpha(e2))

    bool contains(double alpha) const {
        if (!(alpha < 0.0)) return false;
        if (whole_line) return true;
        return alpha > alpha_lower_branch || alpha < alpha_upper_branch;
    }
};

// Computes the two alpha-ranges on which the negative-energy monotonicity
// argument applies, from the roots E1 < E2 of cosh^2(l_min sqrt(E)/2) = E d.
inline NegativeAlphaRanges admissible_negative_alpha(int d, double l_min) {
    if (d < 1) throw std::invalid_argument("admissible_negative_alpha: d >= 1 violated");
    if (!(l_min > 0.0)) throw std::invalid_argument("admissible_negative_alpha: l_min > 0 violated");
    auto g = [&](double E) { return sq(std::cosh(0.5 * l_min * std::sqrt(E))) - E * d; };

    // geometric scan; g(0+) = 1 > 0 and g -> +inf, with at most one dip below 0
    NegativeAlphaRanges out;
    double E_hi = 1.0;
    while (g(E_hi) > 0.0 && 0.5 * l_min * std::sqrt(E_hi) < 720.0) E_hi *= 2.0;
    std::vector<double> roots;
    double prev = 1e-12, gprev = g(prev);
    const int npts = 4096;
    for (int i = 1; i <= npts; ++i) {
        double E = prev;  // geometric grid from 1e-12 to 4*E_hi
        E = 1e-12 * std::pow(4.0 * E_hi / 1e-12, static_cast<double>(i) / npts);
        double gE = g(E);
        if ((gprev > 0.0) != (gE > 0.0)) {
            double a = prev, b = E;
            for (int it = 0; it < 200 && b - a > kTolRoot * std::max(1.0, a); ++it) {
                double m = 0.5 * (a + b);
                ((g(m) > 0.0) == (gprev > 0.0) ? a : b) = m;
            }
            roots.push_back(0.5 * (a + b));
        }
        prev = E;
        gprev = gE;
    }
    if (roots.size() < 2) {
        out.whole_line = true;
        return out;
    }
    out.e1 = roots.front();
    out.e2 = roots.back();
    out.alpha_lower_branch = negative_edge_alpha(d, l_min, out.e1);
    out.alpha_upper_branch = negative_edge_alpha(d, l_min, out.e2);
    return out;
}

}  // namespace qgl
