#pragma once

// Spectral solving for the finite-volume Hamiltonian through the reduction:
// an energy E (off the Dirichlet set) is an eigenvalue of H_Lambda(alpha) iff
// alpha is an eigenvalue of M_Lambda(l, E). Eigenvalue curves mu_j(E) are
// sampled on a Weyl-density grid per Dirichlet-free panel and index-wise
// crossings of alpha are refined by bisection.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "qgl/reduction.hpp"

namespace qgl {

struct EigResult {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns, when requested
    bool has_vectors = false;
};

// Symmetric eigensolve of a ReducedOperator; tridiagonal fast path for d = 1.
inline EigResult eigs_M(const ReducedOperator& op, bool want_vectors = false) {
    EigResult r;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    if (op.tridiagonal && op.mat.rows() > 2) {
        Eigen::VectorXd diag = op.mat.diagonal();
        Eigen::VectorXd sub = op.mat.diagonal(-1);
        es.computeFromTridiagonal(diag, sub,
                                  want_vectors ? Eigen::ComputeEigenvectors
                                               : Eigen::EigenvaluesOnly);
    } else {
        es.compute(op.mat, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    }
    if (es.info() != Eigen::Success)
        throw SolverError("eigs_M: eigensolver did not converge");
    r.values = es.eigenvalues();
    if (want_vectors) {
        r.vectors = es.eigenvectors();
        r.has_vectors = true;
    }
    return r;
}

struct SpectrumOptions {
    double tol_E = 1e-9;      // bisection tolerance on eigenvalue positions
    double tol_eig = 1e-7;    // |mu_j(E) - alpha| residual / multiplicity tolerance
    int grid_per_eig = 16;    // grid points per expected eigenvalue per panel
    int min_grid = 17;
    double min_step = 1e-7;   // below this, an unresolved branch swap is a hard error
    double delta_dir = kDeltaDir;
    int max_depth = 42;       // dip-refinement recursion limit
};

struct EigenvalueItem {
    double E = 0.0;
    int multiplicity = 1;
    int branch = 0;
    double residual = 0.0;
};

struct SpectrumResult {
    std::vector<EigenvalueItem> eigenvalues;  // ascending in E
    std::vector<Interval> excluded;           // Dirichlet guard bands inside the window
    std::string method = "reduction";
    struct Diag {
        long matrix_evals = 0;
        long grid_points = 0;
        int panels = 0;
        long bisection_steps = 0;
        bool resolution_warning = false;  // fd oracle only
        int dofs = 0;                     // fd oracle only
    } diag;
};

namespace detail {

class MuEvaluator {
   public:
    MuEvaluator(const Cube& cube, const LengthField& lengths, double delta_dir)
        : cube_(cube), lengths_(lengths), delta_dir_(delta_dir) {}

    Eigen::VectorXd operator()(double E) {
        ++evals_;
        if (cube_.d == 1) {
            Eigen::VectorXd diag, sub;
            assemble_M_tridiagonal(cube_, lengths_, E, diag, sub);
            es_.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        } else {
            ReducedOperator op = assemble_M(cube_, lengths_, E, delta_dir_);
            es_.compute(op.mat, Eigen::EigenvaluesOnly);
        }
        if (es_.info() != Eigen::Success)
            throw SolverError("spectrum_H: eigensolver failed at E = " + fmt_g17(E));
        return es_.eigenvalues();
    }

    long evals() const { return evals_; }

   private:
    const Cube& cube_;
    const LengthField& lengths_;
    double delta_dir_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
    long evals_ = 0;
};

struct Crossing {
    double E;
    int branch;
    double residual;
    int direction;  // sign of mu_j - alpha at the right end
};

}  // namespace detail

// Dirichlet guard bands: the energy preimages of |sin(l_e sqrt(E))| <= ~2*delta_dir,
// merged. Energies inside are excluded-and-reported; the fd oracle covers them.
inline std::vector<Interval> dirichlet_guards(const LengthField& lengths, Interval window,
                                              double delta_dir = kDeltaDir) {
    std::vector<Interval> guards;
    double w = 2.0 * delta_dir;  // phase half-width
    double hi_k = std::sqrt(std::max(window.hi, 0.0));
    for (double l : lengths.value) {
        if (hi_k <= 0.0) break;
        int k_max = static_cast<int>(std::floor(l * hi_k / M_PI)) + 1;
        for (int k = 1; k <= k_max; ++k) {
            double lo = sq((M_PI * k - w) / l);
            double hi = sq((M_PI * k + w) / l);
            if (hi < window.lo || lo > window.hi) continue;
            guards.push_back({lo, hi});
        }
    }
    std::sort(guards.begin(), guards.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& g : guards) {
        if (!merged.empty() && g.lo <= merged.back().hi)
            merged.back().hi = std::max(merged.back().hi, g.hi);
        else
            merged.push_back(g);
    }
    return merged;
}

// Eigenvalues of H_Lambda(alpha) in the window (outside Dirichlet guard bands).
inline SpectrumResult spectrum_H(const Cube& cube, const LengthField& lengths, double alpha,
                                 Interval window, const SpectrumOptions& opts = {}) {
    if (!(window.hi > window.lo)) throw std::invalid_argument("spectrum_H: empty window");
    SpectrumResult res;
    res.method = "reduction";

    auto guards = dirichlet_guards(lengths, window, opts.delta_dir);
    std::vector<Interval> panels;
    double cursor = window.lo;
    for (const auto& g : guards) {
        if (g.lo > cursor) panels.push_back({cursor, std::min(g.lo, window.hi)});
        cursor = std::max(cursor, g.hi);
        res.excluded.push_back({std::max(g.lo, window.lo), std::min(g.hi, window.hi)});
        if (cursor >= window.hi) break;
    }
    if (cursor < window.hi) panels.push_back({cursor, window.hi});
    res.diag.panels = static_cast<int>(panels.size());

    detail::MuEvaluator mu(cube, lengths, opts.delta_dir);
    double total_len = 0.0;
    for (double l : lengths.value) total_len += l;

    std::vector<detail::Crossing> roots;
    long grid_total = 0, bisect_total = 0;

    for (const auto& panel : panels) {
        if (panel.hi - panel.lo < 4.0 * opts.tol_E) continue;
        double weyl = total_len *
                      (std::sqrt(std::max(panel.hi, 0.0)) - std::sqrt(std::max(panel.lo, 0.0))) /
                      M_PI;
        int npts = std::max(opts.min_grid,
                            opts.grid_per_eig * static_cast<int>(std::ceil(std::max(1.0, weyl))));
        grid_total += npts;

        std::vector<double> Es(static_cast<std::size_t>(npts));
        std::vector<Eigen::VectorXd> mus(static_cast<std::size_t>(npts));
        for (int i = 0; i < npts; ++i) {
            Es[static_cast<std::size_t>(i)] =
                panel.lo + (panel.hi - panel.lo) * static_cast<double>(i) / (npts - 1);
            mus[static_cast<std::size_t>(i)] = mu(Es[static_cast<std::size_t>(i)]);
        }

        // refine a crossing of branch j inside [a, b] by bisection
        auto bisect_branch = [&](double Ea, double Eb, double ga, double gb, int j) {
            int steps = 0;
            while (Eb - Ea > opts.tol_E && steps < 80) {
                double Em = 0.5 * (Ea + Eb);
                double gm = mu(Em)(j) - alpha;
                if ((ga <= 0.0) == (gm <= 0.0)) {
                    Ea = Em;
                    ga = gm;
                } else {
                    Eb = Em;
                    gb = gm;
                }
                ++steps;
            }
            bisect_total += steps;
            double E = 0.5 * (Ea + Eb);
            roots.push_back({E, j, std::min(std::abs(ga), std::abs(gb)),
                             gb > 0.0 ? +1 : -1});
        };

        // process one grid cell; subdivide when a branch dips toward alpha
        // without a sign change (possible double crossing between samples)
        std::function<void(double, double, const Eigen::VectorXd&, const Eigen::VectorXd&, int)>
            process = [&](double Ea, double Eb, const Eigen::VectorXd& va,
                          const Eigen::VectorXd& vb, int depth) {
                bool crossed = false;
                for (int j = 0; j < va.size(); ++j) {
                    double ga = va(j) - alpha, gb = vb(j) - alpha;
                    if (ga == 0.0 && gb == 0.0) continue;
                    if ((ga <= 0.0) != (gb <= 0.0)) {
                        bisect_branch(Ea, Eb, ga, gb, j);
                        crossed = true;
                    }
                }
                if (crossed || depth >= opts.max_depth) return;
                double width = Eb - Ea;
                if (width <= std::max(opts.min_step, 8.0 * opts.tol_E)) return;
                bool dip = false;
                for (int j = 0; j < va.size(); ++j) {
                    double ga = std::abs(va(j) - alpha), gb = std::abs(vb(j) - alpha);
                    double vel = std::abs(vb(j) - va(j));
                    if (std::min(ga, gb) < 1.5 * std::max(vel, 1e-14)) {
                        dip = true;
                        break;
                    }
                }
                if (!dip) return;
                double Em = 0.5 * (Ea + Eb);
                Eigen::VectorXd vm = mu(Em);
                process(Ea, Em, va, vm, depth + 1);
                process(Em, Eb, vm, vb, depth + 1);
            };

        for (int i = 0; i + 1 < npts; ++i)
            process(Es[static_cast<std::size_t>(i)], Es[static_cast<std::size_t>(i + 1)],
                    mus[static_cast<std::size_t>(i)], mus[static_cast<std::size_t>(i + 1)], 0);
    }

    std::sort(roots.begin(), roots.end(),
              [](const detail::Crossing& a, const detail::Crossing& b) { return a.E < b.E; });
    // adjacent branches crossing in opposite directions closer than min_step
    // cannot be told apart at the working resolution
    for (std::size_t i = 0; i + 1 < roots.size(); ++i) {
        if (roots[i + 1].E - roots[i].E < opts.min_step &&
            std::abs(roots[i + 1].branch - roots[i].branch) == 1 &&
            roots[i + 1].direction != roots[i].direction &&
            roots[i + 1].residual > opts.tol_eig && roots[i].residual > opts.tol_eig)
            throw BranchAmbiguity("spectrum_H: branch swap unresolved at step < " +
                                  fmt_g17(opts.min_step));
    }

    // cluster coincident roots into multiplicities
    for (std::size_t i = 0; i < roots.size();) {
        std::size_t j = i + 1;
        double cl_tol = std::max(20.0 * opts.tol_E, 1e-12 * std::max(1.0, std::abs(roots[i].E)));
        while (j < roots.size() && roots[j].E - roots[j - 1].E <= cl_tol) ++j;
        EigenvalueItem item;
        double esum = 0.0;
        double rmin = std::numeric_limits<double>::infinity();
        for (std::size_t k = i; k < j; ++k) {
            esum += roots[k].E;
            rmin = std::min(rmin, roots[k].residual);
        }
        item.E = esum / static_cast<double>(j - i);
        item.multiplicity = static_cast<int>(j - i);
        item.branch = roots[i].branch;
        item.residual = rmin;
        res.eigenvalues.push_back(item);
        i = j;
    }

    res.diag.matrix_evals = mu.evals();
    res.diag.grid_points = grid_total;
    res.diag.bisection_steps = bisect_total;
    return res;
}

// Vertex eigenvector of M(E) for the eigenvalue branch nearest alpha.
inline Eigen::VectorXd vertex_eigenvector(const Cube& cube, const LengthField& lengths, double E,
                                          double alpha, double delta_dir = kDeltaDir) {
    ReducedOperator op = assemble_M(cube, lengths, E, delta_dir);
    EigResult r = eigs_M(op, true);
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < r.values.size(); ++j)
        if (std::abs(r.values(j) - alpha) < std::abs(r.values(best) - alpha)) best = j;
    return r.vectors.col(best);
}

// ---- localization diagnostics ------------------------------------------------

struct LocalizationProfile {
    std::vector<double> amplitude;
    int center = 0;
    double decay_rate = 0.0;  // lambda in log|f(v)| ~ c - lambda dist(v, center)
    double intercept = 0.0;
    double r2 = 0.0;
    double ipr = 0.0;
    int radii_used = 0;
};

inline LocalizationProfile localization_profile(const Cube& cube,
                                                const Eigen::VectorXd& vertex_vec) {
    if (vertex_vec.size() != static_cast<Eigen::Index>(cube.n_vertices()))
        throw std::invalid_argument("localization_profile: vector size mismatch");
    double nrm = vertex_vec.norm();
    if (std::abs(nrm - 1.0) > 1e-8)
        throw std::invalid_argument("localization_profile: eigenvector must be normalized");

    LocalizationProfile p;
    p.amplitude.resize(cube.n_vertices());
    double sum4 = 0.0;
    for (Eigen::Index v = 0; v < vertex_vec.size(); ++v) {
        double a = std::abs(vertex_vec(v));
        p.amplitude[static_cast<std::size_t>(v)] = a;
        sum4 += a * a * a * a;
        if (a > p.amplitude[static_cast<std::size_t>(p.center)]) p.center = static_cast<int>(v);
    }
    p.ipr = sum4;  // ||v|| = 1

    // lattice graph distance from the center by BFS
    auto adj = cube.adjacency();
    std::vector<int> dist(cube.n_vertices(), -1);
    std::deque<int> q{p.center};
    dist[static_cast<std::size_t>(p.center)] = 0;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (auto [w, e] : adj[static_cast<std::size_t>(v)])
            if (dist[static_cast<std::size_t>(w)] < 0) {
                dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                q.push_back(w);
            }
    }

    // least squares of log|f| against distance, tiny amplitudes excluded
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    long cnt = 0;
    int max_r = 0;
    std::vector<char> seen_radius(cube.n_vertices(), 0);
    for (std::size_t v = 0; v < cube.n_vertices(); ++v) {
        if (p.amplitude[v] < 1e-14) continue;
        double x = dist[v], y = std::log(p.amplitude[v]);
        seen_radius[static_cast<std::size_t>(dist[v])] = 1;
        max_r = std::max(max_r, dist[v]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++cnt;
    }
    int radii = 0;
    for (int r = 0; r <= max_r; ++r) radii += seen_radius[static_cast<std::size_t>(r)];
    p.radii_used = radii;
    if (radii < 3)
        throw QglError("localization_profile: fewer than 3 usable radii for the decay fit");
    double n = static_cast<double>(cnt);
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    p.decay_rate = -slope;
    p.intercept = (sy - slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = ss_tot - slope * (sxy - sx * sy / n);
    p.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return p;
}

}  // namespace qgl
