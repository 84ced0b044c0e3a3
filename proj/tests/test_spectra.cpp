#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qgl/distributions.hpp"
#include "qgl/fd_oracle.hpp"
#include "qgl/spectra.hpp"

using namespace qgl;
using Catch::Matchers::WithinAbs;

TEST_CASE("eigs_M on the single-edge matrix and the trace identity", "[spectra][eigs]") {
    Cube cube = build_cube(1, 3);
    LengthDistribution dist{DistKind::uniform, 0.8, 1.2};
    LengthField f = sample_lengths(dist, cube, 17);
    ReducedOperator op = assemble_M(cube, f, 2.1);
    EigResult r = eigs_M(op);
    double tr = op.mat.trace(), sum = r.values.sum();
    REQUIRE(std::abs(tr - sum) < 1e-10 * op.mat.operatorNorm());
    for (Eigen::Index j = 1; j < r.values.size(); ++j) REQUIRE(r.values(j) >= r.values(j - 1));

    // single-edge values via entry helpers (pi/2 block)
    double E = M_PI * M_PI / 4.0;
    Eigen::MatrixXd m(2, 2);
    m << num::edge_diag_entry(1.0, E), num::edge_off_entry(1.0, E), num::edge_off_entry(1.0, E),
        num::edge_diag_entry(1.0, E);
    ReducedOperator op2{E, 1.0, m, true};
    EigResult r2 = eigs_M(op2);
    REQUIRE_THAT(r2.values(0), WithinAbs(-M_PI / 2.0, 1e-13));
    REQUIRE_THAT(r2.values(1), WithinAbs(M_PI / 2.0, 1e-13));
}

TEST_CASE("dual-solver oracle: tridiagonal path vs dense vs Jacobi", "[spectra][eigs]") {
    LengthDistribution dist{DistKind::raised_cosine, 0.8, 1.2};
    {
        Cube cube = build_cube(1, 24);  // 51 vertices, tridiagonal fast path
        LengthField f = sample_lengths(dist, cube, 5);
        ReducedOperator op = assemble_M(cube, f, 1.9);
        EigResult tri = eigs_M(op);
        ReducedOperator dense = op;
        dense.tridiagonal = false;
        EigResult dn = eigs_M(dense);
        for (Eigen::Index j = 0; j < tri.values.size(); ++j)
            REQUIRE_THAT(tri.values(j), WithinAbs(dn.values(j), 1e-9));
    }
    {
        Cube cube = build_cube(2, 1);  // dense path vs the hand-rolled Jacobi oracle
        LengthField f = sample_lengths(dist, cube, 6);
        ReducedOperator op = assemble_M(cube, f, 1.9);
        EigResult dn = eigs_M(op);
        auto jac = oracle::jacobi_eigenvalues(op.mat);
        for (Eigen::Index j = 0; j < dn.values.size(); ++j)
            REQUIRE_THAT(dn.values(j), WithinAbs(jac[static_cast<std::size_t>(j)], 1e-9));
    }
}

TEST_CASE("Neumann path spectrum through the reduction", "[spectra][spectrum]") {
    // d=1, constant lengths 1, alpha=0: quantum graph = interval [0,K], Neumann
    Cube cube = build_cube(1, 3);  // K = 8 edges
    const int K = 8;
    LengthField f = make_constant_field(cube, 1.0);
    SpectrumResult sp = spectrum_H(cube, f, 0.0, {-0.5, 9.0});
    std::vector<double> expect;
    for (int k = 0; sq(M_PI * k / K) <= 9.0; ++k) expect.push_back(sq(M_PI * k / K));
    REQUIRE(sp.eigenvalues.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        REQUIRE_THAT(sp.eigenvalues[i].E, WithinAbs(expect[i], 1e-8));
        REQUIRE(sp.eigenvalues[i].multiplicity == 1);
        REQUIRE(sp.eigenvalues[i].residual < 1e-6);
    }
    REQUIRE(sp.excluded.empty());  // guards sit at pi^2 k^2, outside the window
}

TEST_CASE("eigenvalues inside guard bands are excluded and reported", "[spectra][spectrum]") {
    Cube cube = build_cube(1, 3);
    LengthField f = make_constant_field(cube, 1.0);
    SpectrumResult sp = spectrum_H(cube, f, 0.0, {9.0, 11.0});
    REQUIRE(sp.excluded.size() == 1);
    REQUIRE(sp.excluded[0].contains(M_PI * M_PI));
    // E = pi^2 = (pi 8/8)^2 is a genuine H-eigenvalue but Dirichlet-proximate;
    // the fd oracle sees it
    SpectrumResult fd = fd_oracle_spectrum(cube, f, 0.0, 24, {9.0, 11.0});
    REQUIRE(fd.excluded.empty());
    bool found = false;
    for (const auto& it : fd.eigenvalues)
        if (std::abs(it.E - M_PI * M_PI) < 1e-3 * M_PI * M_PI) found = true;
    REQUIRE(found);
}

TEST_CASE("finite-volume energies obey the constant-length dispersion", "[spectra][spectrum]") {
    const int n = 16;
    Cube cube = build_cube(1, n);
    double u = 1.1, alpha = 1.7;
    LengthField f = make_constant_field(cube, u);
    SpectrumResult sp = spectrum_H(cube, f, alpha, {0.05, 6.0});
    REQUIRE(sp.eigenvalues.size() > 5);
    for (const auto& it : sp.eigenvalues) {
        double D = dispersion(it.E, u, alpha);
        REQUIRE(std::abs(D) <= 1.0 + 10.0 / n);
    }
}

TEST_CASE("no negative spectrum for positive coupling", "[spectra][spectrum]") {
    Cube cube = build_cube(1, 10);
    LengthDistribution dist{DistKind::uniform, 0.8, 1.2};
    LengthField f = sample_lengths(dist, cube, 31);
    SpectrumResult sp = spectrum_H(cube, f, 2.0, {-3.0, -1e-6});
    REQUIRE(sp.eigenvalues.empty());
}

TEST_CASE("negative eigenvalues appear for negative coupling", "[spectra][spectrum]") {
    Cube cube = build_cube(1, 10);
    LengthField f = make_constant_field(cube, 1.0);
    double alpha = -2.0 * std::tanh(0.5);  // bottom of Sigma at -1 for l in {1}
    SpectrumResult sp = spectrum_H(cube, f, alpha, {-1.3, -0.2});
    REQUIRE_FALSE(sp.eigenvalues.empty());
    REQUIRE(sp.eigenvalues.front().E > -1.3);
}

TEST_CASE("lattice shifts leave the spectrum invariant", "[spectra][spectrum]") {
    LengthDistribution dist{DistKind::raised_cosine, 0.8, 1.2};
    Cube a = build_cube(2, 1);
    Cube b = build_cube(2, 1, Vertex{{3, -2}});
    LengthField fa = sample_lengths(dist, a, 77);
    LengthField fb = fa;  // same values on the translated edges, same ordering
    SpectrumResult sa = spectrum_H(a, fa, 0.8, {0.3, 3.0});
    SpectrumResult sb = spectrum_H(b, fb, 0.8, {0.3, 3.0});
    REQUIRE(sa.eigenvalues.size() == sb.eigenvalues.size());
    for (std::size_t i = 0; i < sa.eigenvalues.size(); ++i)
        REQUIRE_THAT(sa.eigenvalues[i].E, WithinAbs(sb.eigenvalues[i].E, 1e-10));
}

TEST_CASE("guard band length obeys the phase-metric bound", "[spectra][guards]") {
    Cube cube = build_cube(1, 6);
    LengthDistribution dist{DistKind::uniform, 0.8, 1.2};
    LengthField f = sample_lengths(dist, cube, 13);
    Interval window{0.5, 50.0};
    auto guards = dirichlet_guards(f, window);
    auto dvals = dirichlet_spectrum(f, 50.0 * 1.05);
    long count = 0;
    for (double E : dvals)
        if (E >= window.lo && E <= window.hi) ++count;
    double total = 0.0;
    for (const auto& g : guards) total += std::min(g.hi, window.hi) - std::max(g.lo, window.lo);
    REQUIRE(total <= 8.0 * kDeltaDir * static_cast<double>(count) * std::sqrt(window.hi) / 0.8);
    // every Dirichlet value in the window is covered by a guard
    for (double E : dvals) {
        if (E < window.lo || E > window.hi) continue;
        bool covered = false;
        for (const auto& g : guards) covered = covered || g.contains(E);
        REQUIRE(covered);
    }
}

TEST_CASE("kernel dimensions: identity on and off the spectrum", "[spectra][kernel]") {
    Cube cube = build_cube(1, 6);
    LengthDistribution dist{DistKind::raised_cosine, 0.8, 1.2};
    LengthField f = sample_lengths(dist, cube, 41);
    double alpha = 0.9;
    SpectrumResult sp = spectrum_H(cube, f, alpha, {0.4, 3.0});
    REQUIRE(sp.eigenvalues.size() >= 2);
    for (const auto& it : sp.eigenvalues) {
        KernelDims kd = kernel_dims(cube, f, it.E, alpha);
        REQUIRE(kd.dim_ker_m >= 1);
        REQUIRE(kd.dim_ker_m == kd.dim_ker_h);
    }
    // a point in a spectral gap: nudge between two consecutive eigenvalues
    for (std::size_t i = 0; i + 1 < sp.eigenvalues.size(); ++i) {
        double gap = sp.eigenvalues[i + 1].E - sp.eigenvalues[i].E;
        if (gap > 0.2) {
            double E = sp.eigenvalues[i].E + 0.5 * gap;
            KernelDims kd = kernel_dims(cube, f, E, alpha);
            REQUIRE(kd.dim_ker_m == 0);
            REQUIRE(kd.dim_ker_h == 0);
            break;
        }
    }
}

TEST_CASE("localization profile: IPR extremes and decay fit", "[spectra][localize]") {
    Cube cube = build_cube(1, 8);
    auto nv = static_cast<Eigen::Index>(cube.n_vertices());
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(nv);
    delta(nv / 2) = 1.0;
    LocalizationProfile pd = localization_profile(cube, delta);
    // a delta vector leaves < 3 radii for the fit; IPR check is separate
    (void)pd;

    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(nv, 1.0 / std::sqrt(static_cast<double>(nv)));
    LocalizationProfile pu = localization_profile(cube, uniform);
    REQUIRE_THAT(pu.ipr, WithinAbs(1.0 / static_cast<double>(nv), 1e-12));
    REQUIRE_THAT(pu.decay_rate, WithinAbs(0.0, 1e-10));

    // synthetic exponential profile recovers its rate with high R^2
    Eigen::VectorXd expv(nv);
    int c = static_cast<int>(nv) / 2;
    for (Eigen::Index v = 0; v < nv; ++v) expv(v) = std::exp(-0.7 * std::abs(static_cast<int>(v) - c));
    expv.normalize();
    LocalizationProfile pe = localization_profile(cube, expv);
    REQUIRE_THAT(pe.decay_rate, WithinAbs(0.7, 1e-6));
    REQUIRE(pe.r2 > 0.999);
    REQUIRE(pe.center == c);

    REQUIRE_THROWS_AS(localization_profile(cube, 2.0 * uniform), std::invalid_argument);
}

TEST_CASE("IPR of a delta vector is 1", "[spectra][localize]") {
    // use d=2 so the delta vector still spans >= 3 radii after amplitude cuts:
    // not possible for a pure delta; assert through the formula path instead
    Cube cube = build_cube(1, 8);
    auto nv = static_cast<Eigen::Index>(cube.n_vertices());
    Eigen::VectorXd nearly = Eigen::VectorXd::Constant(nv, 1e-13);
    nearly(3) = 1.0;
    nearly.normalize();
    LocalizationProfile p = localization_profile(cube, nearly);
    REQUIRE_THAT(p.ipr, WithinAbs(1.0, 1e-9));
    REQUIRE(p.center == 3);
}

TEST_CASE("localized low-energy states under strong disorder", "[spectra][localize][slow]") {
    // d=1, alpha>0, E near inf Sigma: median decay fit over 20 realizations
    const int n = 20;
    Cube cube = build_cube(1, n);
    LengthDistribution dist{DistKind::uniform, 0.6, 1.4};
    double e0 = inf_sigma(2.0, 1, 0.6, 1.4).value;
    std::vector<double> rates, r2s;
    for (std::uint64_t r = 0; r < 20; ++r) {
        LengthField f = sample_lengths(dist, cube, 900 + r);
        SpectrumResult sp = spectrum_H(cube, f, 2.0, {e0 - 0.05, e0 + 0.45});
        if (sp.eigenvalues.empty()) continue;
        Eigen::VectorXd vec = vertex_eigenvector(cube, f, sp.eigenvalues.front().E, 2.0);
        vec.normalize();
        LocalizationProfile p = localization_profile(cube, vec);
        rates.push_back(p.decay_rate);
        r2s.push_back(p.r2);
    }
    REQUIRE(rates.size() >= 15);
    std::sort(rates.begin(), rates.end());
    std::sort(r2s.begin(), r2s.end());
    REQUIRE(rates[rates.size() / 2] > 0.0);
    REQUIRE(r2s[r2s.size() / 2] > 0.8);
}
