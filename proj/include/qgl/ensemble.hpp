#pragma once

// Monte Carlo experiments on the random-length ensemble: integrated density
// of states, the Wegner probability scaling P{spec H cap J != 0} <= C|Lambda||J|,
// the initial-scale / Lifshitz-tail scaling at a spectral edge, and the local
// energy estimate underlying the Lifshitz argument. Realizations are pure
// functions of (master seed, realization index), so results are reproducible
// at any worker count.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "qgl/distributions.hpp"
#include "qgl/fd_oracle.hpp"
#include "qgl/kp_bands.hpp"
#include "qgl/spectra.hpp"

namespace qgl {

// 95% Wilson score interval for a binomial proportion.
inline Interval wilson_interval(long hits, long n, double z = 1.959963984540054) {
    if (n <= 0) return {0.0, 1.0};
    double p = static_cast<double>(hits) / static_cast<double>(n);
    double z2 = z * z;
    double denom = 1.0 + z2 / static_cast<double>(n);
    double center = p + z2 / (2.0 * static_cast<double>(n));
    double rad = z * std::sqrt(p * (1.0 - p) / static_cast<double>(n) +
                               z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n)));
    return {std::max(0.0, (center - rad) / denom), std::min(1.0, (center + rad) / denom)};
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(i) for i in [0, total) on `threads` workers. Each index writes only
// its own output slot, so the aggregate is identical for every thread count.
inline void parallel_for(long total, int threads, const std::function<void(long)>& fn) {
    threads = static_cast<int>(std::max<long>(1, std::min<long>(threads, total == 0 ? 1 : total)));
    if (threads == 1) {
        for (long i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex err_mtx;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            while (true) {
                long i = next.fetch_add(1);
                if (i >= total) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!error) error = std::current_exception();
                    next.store(total);
                    break;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ---- integrated density of states -------------------------------------------

struct IdsPoint {
    double t = 0.0;     // threshold (an M-eigenvalue level or an energy)
    double mean = 0.0;  // averaged normalized counting function
    double lo = 0.0, hi = 0.0;  // normal-approximation 95% band
};

struct IdsCurve {
    std::vector<IdsPoint> points;
    int realizations = 0;
    long n_vertices = 0;
    std::string variant;  // "m" or "h"
};

// k(t) for the reduction at fixed E: averaged #{mu in spec M : mu < t}/|V|.
inline IdsCurve ids_estimate_m(int d, int n, double E, const LengthDistribution& dist,
                               int realizations, const std::vector<double>& t_grid,
                               std::uint64_t seed, int threads = 0) {
    if (n < 2) throw std::invalid_argument("ids_estimate_m: n >= 2 violated");
    if (realizations < 1) throw std::invalid_argument("ids_estimate_m: realizations >= 1");
    Cube cube = build_cube(d, n);
    long nv = static_cast<long>(cube.n_vertices());
    std::vector<std::vector<double>> fracs(static_cast<std::size_t>(realizations));
    parallel_for(realizations, resolve_threads(threads), [&](long r) {
        LengthField f = sample_lengths(dist, cube, rng::realization_seed(seed, static_cast<std::uint64_t>(r)));
        ReducedOperator op = assemble_M(cube, f, E);
        EigResult er = eigs_M(op);
        auto& row = fracs[static_cast<std::size_t>(r)];
        row.resize(t_grid.size());
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            long cnt = 0;
            for (Eigen::Index j = 0; j < er.values.size(); ++j)
                if (er.values(j) < t_grid[i]) ++cnt;
            row[i] = static_cast<double>(cnt) / static_cast<double>(nv);
        }
    });
    IdsCurve curve;
    curve.variant = "m";
    curve.realizations = realizations;
    curve.n_vertices = nv;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double s = 0.0, s2 = 0.0;
        for (int r = 0; r < realizations; ++r) {
            double x = fracs[static_cast<std::size_t>(r)][i];
            s += x;
            s2 += x * x;
        }
        double mean = s / realizations;
        double var = std::max(0.0, s2 / realizations - mean * mean);
        double half = 1.959963984540054 * std::sqrt(var / realizations);
        curve.points.push_back({t_grid[i], mean, mean - half, mean + half});
    }
    return curve;
}

// IDS of H itself: averaged #{eigenvalues of H_Lambda <= E}/|V| on an energy grid.
inline IdsCurve ids_estimate_h(int d, int n, double alpha, const LengthDistribution& dist,
                               int realizations, const std::vector<double>& e_grid,
                               std::uint64_t seed, int threads = 0,
                               const SpectrumOptions& opts = {}) {
    if (n < 2) throw std::invalid_argument("ids_estimate_h: n >= 2 violated");
    if (realizations < 1) throw std::invalid_argument("ids_estimate_h: realizations >= 1");
    Cube cube = build_cube(d, n);
    long nv = static_cast<long>(cube.n_vertices());
    double e_top = *std::max_element(e_grid.begin(), e_grid.end());
    double e_bottom = 0.0;
    if (alpha < 0.0)
        e_bottom = inf_sigma(alpha, d, dist.l_min, std::max(dist.l_max, dist.l_min * (1.0 + 1e-9)),
                             kTolRoot)
                       .value -
                   1.0;
    Interval window{std::min(e_bottom, 0.0) - 1e-9, e_top};

    std::vector<std::vector<double>> fracs(static_cast<std::size_t>(realizations));
    parallel_for(realizations, resolve_threads(threads), [&](long r) {
        LengthField f = sample_lengths(dist, cube, rng::realization_seed(seed, static_cast<std::uint64_t>(r)));
        SpectrumResult sp = spectrum_H(cube, f, alpha, window, opts);
        auto& row = fracs[static_cast<std::size_t>(r)];
        row.resize(e_grid.size());
        for (std::size_t i = 0; i < e_grid.size(); ++i) {
            long cnt = 0;
            for (const auto& item : sp.eigenvalues)
                if (item.E <= e_grid[i]) cnt += item.multiplicity;
            row[i] = static_cast<double>(cnt) / static_cast<double>(nv);
        }
    });
    IdsCurve curve;
    curve.variant = "h";
    curve.realizations = realizations;
    curve.n_vertices = nv;
    for (std::size_t i = 0; i < e_grid.size(); ++i) {
        double s = 0.0, s2 = 0.0;
        for (int r = 0; r < realizations; ++r) {
            double x = fracs[static_cast<std::size_t>(r)][i];
            s += x;
            s2 += x * x;
        }
        double mean = s / realizations;
        double var = std::max(0.0, s2 / realizations - mean * mean);
        double half = 1.959963984540054 * std::sqrt(var / realizations);
        curve.points.push_back({e_grid[i], mean, mean - half, mean + half});
    }
    return curve;
}

// ---- Wegner experiment -------------------------------------------------------

struct WegnerCell {
    int n = 0;
    long edges = 0, vertices = 0;
    double width = 0.0, center = 0.0;
    int realizations = 0;
    long hits = 0;
    double p = 0.0, lo = 0.0, hi = 0.0;
    double x = 0.0;      // |Lambda| * |J|
    double c_hat = 0.0;  // p / x
};

struct WegnerReport {
    int d = 1;
    double alpha = 0.0;
    Interval I;
    std::vector<WegnerCell> cells;
    double fitted_C = 0.0;  // least squares of p against |Lambda||J| through the origin
    std::uint64_t seed = 0;
    int realizations = 0;
    std::string dist;
    // optional raw per-realization eigenvalues (largest width), gated by callers
    std::vector<std::vector<double>> raw_eigenvalues;
    bool keep_raw = false;
};

// Probability that spec H_Lambda(n) meets the interval J, for nested widths
// centered at `center` (midpoint of I by default), coupled across widths by
// sharing realizations and across n by the edge-keyed sampler.
inline WegnerReport wegner_experiment(int d, const std::vector<int>& n_list, double alpha,
                                      Interval I, const std::vector<double>& widths,
                                      const LengthDistribution& dist, int realizations,
                                      std::uint64_t seed, int threads = 0,
                                      double center = std::numeric_limits<double>::quiet_NaN(),
                                      bool keep_raw = false,
                                      const SpectrumOptions& opts = {}) {
    if (realizations < 1) throw std::invalid_argument("wegner_experiment: realizations >= 1");
    if (widths.empty()) throw std::invalid_argument("wegner_experiment: widths required");
    for (std::size_t i = 1; i < widths.size(); ++i)
        if (!(widths[i] < widths[i - 1]))
            throw std::invalid_argument("wegner_experiment: widths must decrease");
    dist.validate();

    // case (a): positive interval away from the forbidden set; case (b):
    // negative interval around inf Sigma for an admissible alpha < 0
    if (I.lo > 0.0) {
        DeltaSet ds = delta_set(dist.l_min, dist.l_max, 4.0 * I.hi);
        for (const auto& iv : ds.intervals)
            if (iv.overlaps(I))
                throw IntervalMeetsDelta("wegner_experiment: I meets the forbidden set");
    } else {
        if (!(alpha < 0.0))
            throw ConfigError("wegner_experiment: non-positive interval requires alpha < 0");
        double e0 = inf_sigma(alpha, d, dist.l_min, dist.l_max).value;
        if (!I.contains(e0))
            throw ConfigError("wegner_experiment: negative-energy I must contain inf Sigma");
        if (!admissible_negative_alpha(d, dist.l_min).contains(alpha))
            throw ConfigError("wegner_experiment: alpha outside the admissible negative ranges");
    }

    WegnerReport rep;
    rep.d = d;
    rep.alpha = alpha;
    rep.I = I;
    rep.seed = seed;
    rep.realizations = realizations;
    rep.dist = dist_kind_name(dist.kind);
    rep.keep_raw = keep_raw;
    double c = std::isnan(center) ? I.mid() : center;
    double w_max = widths.front();

    for (int n : n_list) {
        Cube cube = build_cube(d, n);
        std::vector<std::vector<char>> hit(widths.size(),
                                           std::vector<char>(static_cast<std::size_t>(realizations), 0));
        std::vector<std::vector<double>> raw(keep_raw ? static_cast<std::size_t>(realizations) : 0);
        parallel_for(realizations, resolve_threads(threads), [&](long r) {
            LengthField f =
                sample_lengths(dist, cube, rng::realization_seed(seed, static_cast<std::uint64_t>(r)));
            SpectrumResult sp =
                spectrum_H(cube, f, alpha, {c - 0.5 * w_max, c + 0.5 * w_max}, opts);
            for (std::size_t wi = 0; wi < widths.size(); ++wi) {
                double half = 0.5 * widths[wi];
                for (const auto& item : sp.eigenvalues)
                    if (std::abs(item.E - c) <= half) {
                        hit[wi][static_cast<std::size_t>(r)] = 1;
                        break;
                    }
            }
            if (keep_raw) {
                auto& row = raw[static_cast<std::size_t>(r)];
                for (const auto& item : sp.eigenvalues) row.push_back(item.E);
            }
        });
        for (std::size_t wi = 0; wi < widths.size(); ++wi) {
            WegnerCell cell;
            cell.n = n;
            cell.edges = static_cast<long>(cube.n_edges());
            cell.vertices = static_cast<long>(cube.n_vertices());
            cell.width = widths[wi];
            cell.center = c;
            cell.realizations = realizations;
            for (char h : hit[wi]) cell.hits += h;
            cell.p = static_cast<double>(cell.hits) / realizations;
            Interval ci = wilson_interval(cell.hits, realizations);
            cell.lo = ci.lo;
            cell.hi = ci.hi;
            cell.x = static_cast<double>(cube.n_edges()) * widths[wi];
            cell.c_hat = cell.p / cell.x;
            rep.cells.push_back(cell);
        }
        if (keep_raw && rep.raw_eigenvalues.empty()) rep.raw_eigenvalues = std::move(raw);
    }
    double num = 0.0, den = 0.0;
    for (const auto& cell : rep.cells) {
        num += cell.p * cell.x;
        den += cell.x * cell.x;
    }
    rep.fitted_C = den > 0.0 ? num / den : 0.0;
    return rep;
}

// ---- Lifshitz / initial-scale experiment --------------------------------------

struct LifshitzProbCell {
    int n = 0;
    double delta = 0.0;  // n^(beta-1)
    int realizations = 0;
    long hits = 0;
    double p = 0.0, lo = 0.0, hi = 0.0;
};

struct LifshitzTailRow {
    int n = 0;
    double eps = 0.0;
    double tail = 0.0;  // averaged fraction of M(E0)-eigenvalues >= alpha - eps
    double se = 0.0;
};

struct LifshitzReport {
    int d = 1;
    double alpha = 0.0, e0 = 0.0, beta_exp = 0.5;
    std::vector<LifshitzProbCell> prob;
    std::vector<LifshitzTailRow> tail;
    double xi_fit = 0.0;          // P ~ n^-xi over cells with hits
    int xi_cells = 0;
    double slope_fit = 0.0;       // d log|log tail| / d log eps at the largest n
    double slope_stderr = 0.0;
    int slope_points = 0;
    std::uint64_t seed = 0;
    std::string dist;
};

// (i) P{dist(spec H_Lambda(n), E0) <= n^(beta-1)} per n, with the decay
// exponent fit; (ii) the M-side IDS tail at E0: the averaged fraction of
// eigenvalues of M(l^w, E0) above alpha - eps, whose double-log slope over the
// eps grid realizes the density criterion at the edge (alpha is the upper
// edge of the M spectrum when E0 is the spectral bottom).
inline LifshitzReport lifshitz_experiment(int d, const std::vector<int>& n_list, double alpha,
                                          double e0, double beta_exp,
                                          const LengthDistribution& dist, int realizations,
                                          std::uint64_t seed, int threads = 0,
                                          std::vector<double> eps_grid = {},
                                          const SpectrumOptions& opts = {}) {
    if (realizations < 1) throw std::invalid_argument("lifshitz_experiment: realizations >= 1");
    dist.validate();
    bool control = (alpha == 0.0 && e0 == 0.0);  // the designed negative control
    if (!control) {
        DeltaSet ds = delta_set(dist.l_min, dist.l_max, std::max(4.0 * std::abs(e0), 1.0));
        if (!is_outside_delta(e0, ds))
            throw IntervalMeetsDelta("lifshitz_experiment: spectral edge inside the forbidden set");
    }
    if (eps_grid.empty())
        for (int i = 0; i < 8; ++i) eps_grid.push_back(0.02 * std::pow(16.0, i / 7.0));

    LifshitzReport rep;
    rep.d = d;
    rep.alpha = alpha;
    rep.e0 = e0;
    rep.beta_exp = beta_exp;
    rep.seed = seed;
    rep.dist = dist_kind_name(dist.kind);

    int n_max = *std::max_element(n_list.begin(), n_list.end());
    for (int n : n_list) {
        Cube cube = build_cube(d, n);
        double delta = std::pow(static_cast<double>(n), beta_exp - 1.0);
        std::vector<char> hits(static_cast<std::size_t>(realizations), 0);
        std::vector<std::vector<double>> tails(static_cast<std::size_t>(realizations));
        parallel_for(realizations, resolve_threads(threads), [&](long r) {
            LengthField f =
                sample_lengths(dist, cube, rng::realization_seed(seed, static_cast<std::uint64_t>(r)));
            SpectrumResult sp = spectrum_H(cube, f, alpha, {e0 - delta, e0 + delta}, opts);
            if (!sp.eigenvalues.empty()) hits[static_cast<std::size_t>(r)] = 1;
            // M-side tail at E0 (cheap: one assembly + eigensolve)
            ReducedOperator op = assemble_M(cube, f, e0, opts.delta_dir);
            EigResult er = eigs_M(op);
            auto& row = tails[static_cast<std::size_t>(r)];
            row.resize(eps_grid.size());
            for (std::size_t i = 0; i < eps_grid.size(); ++i) {
                long cnt = 0;
                for (Eigen::Index j = 0; j < er.values.size(); ++j)
                    if (er.values(j) >= alpha - eps_grid[i]) ++cnt;
                row[i] = static_cast<double>(cnt) / static_cast<double>(cube.n_vertices());
            }
        });
        LifshitzProbCell cell;
        cell.n = n;
        cell.delta = delta;
        cell.realizations = realizations;
        for (char h : hits) cell.hits += h;
        cell.p = static_cast<double>(cell.hits) / realizations;
        Interval ci = wilson_interval(cell.hits, realizations);
        cell.lo = ci.lo;
        cell.hi = ci.hi;
        rep.prob.push_back(cell);

        for (std::size_t i = 0; i < eps_grid.size(); ++i) {
            double s = 0.0, s2 = 0.0;
            for (int r = 0; r < realizations; ++r) {
                double x = tails[static_cast<std::size_t>(r)][i];
                s += x;
                s2 += x * x;
            }
            double mean = s / realizations;
            double var = std::max(0.0, s2 / realizations - mean * mean);
            rep.tail.push_back({n, eps_grid[i], mean, std::sqrt(var / realizations)});
        }
    }

    // xi: least squares of log p against log n over cells with hits
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (const auto& cell : rep.prob)
            if (cell.hits > 0 && cell.p < 1.0) {
                double x = std::log(static_cast<double>(cell.n)), y = std::log(cell.p);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                ++m;
            }
        rep.xi_cells = m;
        if (m >= 2) rep.xi_fit = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    // double-log tail slope at the largest n
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        int m = 0;
        for (const auto& row : rep.tail)
            if (row.n == n_max && row.tail > 0.0 && row.tail < 0.5) {
                double x = std::log(row.eps), y = std::log(-std::log(row.tail));
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                syy += y * y;
                ++m;
            }
        rep.slope_points = m;
        if (m >= 3) {
            double denom = m * sxx - sx * sx;
            double slope = (m * sxy - sx * sy) / denom;
            rep.slope_fit = slope;
            double ss_res = (syy - sy * sy / m) - slope * (sxy - sx * sy / m);
            rep.slope_stderr =
                std::sqrt(std::max(0.0, ss_res / std::max(1, m - 2)) / (sxx - sx * sx / m));
        }
    }
    return rep;
}

// ---- local energy estimate -----------------------------------------------------

struct LocalEnergyResult {
    double min_margin = 0.0;  // min over probes of <phi,M phi> - <phi,W phi> - a<|phi|,H0|phi|>
    double b_sup = 0.0;       // sup_l |sqrt(E)/sin(l sqrt(E))| over the support
    long probes = 0;
};

// sup over the length support of |sqrt(E)/sin(l sqrt(E))|; +inf if the phase
// range contains a multiple of pi.
inline double local_energy_b(double E, double l_min, double l_max) {
    if (E <= 0.0) {
        // hyperbolic branch: kappa/sinh decreasing in l, maximum at l_min
        return num::edge_off_entry(l_min, E);
    }
    double k = std::sqrt(E);
    double phi_lo = l_min * k, phi_hi = l_max * k;
    if (std::floor(phi_hi / M_PI) >= std::ceil(phi_lo / M_PI) && phi_hi >= M_PI)
        return std::numeric_limits<double>::infinity();
    double s_min = std::min(std::abs(num::sin_pr(phi_lo)), std::abs(num::sin_pr(phi_hi)));
    return k / s_min;
}

// <phi, M phi> - <phi, W phi> - a <|phi|, H0 |phi|> for one probe vector, with
// the diagonal potential
//   W(v) = sum_{e~v} [beta_a(sqrt(E)/sin(l_e sqrt(E))) - sqrt(E) cot(l_e sqrt(E))],
// beta_a(t) = -max(|t|, a), and H0 the free lattice Laplacian on the cube.
inline double local_energy_margin(const Cube& cube, const LengthField& lengths, double E,
                                  double a, const std::vector<double>& phi) {
    if (phi.size() != cube.n_vertices())
        throw std::invalid_argument("local_energy_margin: probe size mismatch");
    double m = 0.0;
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        double s = num::edge_off_entry(lengths[e], E);
        auto [i, j] = cube.ends[e];
        double pi = phi[static_cast<std::size_t>(i)], pj = phi[static_cast<std::size_t>(j)];
        // the -sqrt(E) cot terms cancel between M and W edge by edge
        double qm = 2.0 * s * pi * pj;
        double qw = -std::max(std::abs(s), a) * (pi * pi + pj * pj);
        double qh0 = sq(std::abs(pi) - std::abs(pj));
        m += qm - qw - a * qh0;
    }
    return m;
}

// Minimum margin over `trials` random unit vectors plus all coordinate vectors
// on one sampled length field.
inline LocalEnergyResult local_energy_check(int d, int n, double E,
                                            const LengthDistribution& dist, double a,
                                            long trials, std::uint64_t seed) {
    dist.validate();
    LocalEnergyResult res;
    res.b_sup = local_energy_b(E, dist.l_min, dist.l_max);
    if (!(a > 0.0) || !(a < res.b_sup))
        throw std::invalid_argument("local_energy_check: threshold a in (0, b) violated");

    Cube cube = build_cube(d, n);
    LengthField f = sample_lengths(dist, cube, seed);
    if (E > 0.0 && dirichlet_distance_of(f, E) <= kDeltaDir)
        throw DirichletProximity("local_energy_check: E too close to the Dirichlet spectrum");

    std::size_t nv = cube.n_vertices();
    res.min_margin = std::numeric_limits<double>::infinity();
    std::vector<double> phi(nv, 0.0);
    // all coordinate vectors
    for (std::size_t v = 0; v < nv; ++v) {
        phi[v] = 1.0;
        res.min_margin = std::min(res.min_margin, local_energy_margin(cube, f, E, a, phi));
        phi[v] = 0.0;
        ++res.probes;
    }
    // random unit vectors
    for (long t = 0; t < trials; ++t) {
        double nrm2 = 0.0;
        for (std::size_t v = 0; v < nv; ++v) {
            std::uint64_t h = rng::combine(rng::combine(rng::mix64(seed ^ 0xfeedULL),
                                                        static_cast<std::uint64_t>(t)),
                                           static_cast<std::uint64_t>(v));
            phi[v] = rng::to_normal(h);
            nrm2 += phi[v] * phi[v];
        }
        double inv = 1.0 / std::sqrt(nrm2);
        for (auto& x : phi) x *= inv;
        res.min_margin = std::min(res.min_margin, local_energy_margin(cube, f, E, a, phi));
        ++res.probes;
    }
    return res;
}

}  // namespace qgl
