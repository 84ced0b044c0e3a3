#pragma once

// Length distributions on [l_min, l_max] and i.i.d. sampling of length fields.
// The raised-cosine default has a density that is Lipschitz on all of R; the
// uniform density is Lipschitz on its support only (flagged); `constant` is a
// point mass used for periodic references.

#include <cmath>
#include <stdexcept>
#include <string>

#include "qgl/length_field.hpp"
#include "qgl/rng.hpp"

namespace qgl {

enum class DistKind { uniform, triangular, raised_cosine, constant };

struct LengthDistribution {
    DistKind kind = DistKind::raised_cosine;
    double l_min = 0.8;
    double l_max = 1.2;

    double width() const { return l_max - l_min; }
    double mid() const { return 0.5 * (l_min + l_max); }

    void validate() const {
        if (kind == DistKind::constant) {
            if (!(l_min > 0.0) || l_min != l_max)
                throw std::invalid_argument("constant distribution: l_min == l_max > 0 required");
            return;
        }
        if (!(0.0 < l_min && l_min < l_max))
            throw std::invalid_argument("distribution: 0 < l_min < l_max violated");
    }

    // true if the density extends Lipschitz-continuously to all of R
    bool lipschitz_on_r() const {
        return kind == DistKind::triangular || kind == DistKind::raised_cosine;
    }

    double density(double x) const {
        if (x < l_min || x > l_max || kind == DistKind::constant) return 0.0;
        double w = width();
        switch (kind) {
            case DistKind::uniform:
                return 1.0 / w;
            case DistKind::triangular: {
                double c = mid();
                return x <= c ? 4.0 * (x - l_min) / (w * w) : 4.0 * (l_max - x) / (w * w);
            }
            case DistKind::raised_cosine:
                return (1.0 + std::cos(2.0 * M_PI * (x - mid()) / w)) / w;
            default:
                return 0.0;
        }
    }

    double cdf(double x) const {
        if (x <= l_min) return 0.0;
        if (x >= l_max) return 1.0;
        double w = width();
        switch (kind) {
            case DistKind::uniform:
                return (x - l_min) / w;
            case DistKind::triangular: {
                double c = mid();
                if (x <= c) return 2.0 * sq((x - l_min) / w);
                return 1.0 - 2.0 * sq((l_max - x) / w);
            }
            case DistKind::raised_cosine:
                return (x - l_min) / w + std::sin(2.0 * M_PI * (x - mid()) / w) / (2.0 * M_PI);
            case DistKind::constant:
                return x < l_min ? 0.0 : 1.0;
        }
        return 0.0;
    }

    double quantile(double u) const {
        if (kind == DistKind::constant) return l_min;
        if (u <= 0.0) return l_min;
        if (u >= 1.0) return l_max;
        switch (kind) {
            case DistKind::uniform:
                return l_min + u * width();
            case DistKind::triangular: {
                double w = width();
                if (u <= 0.5) return l_min + w * std::sqrt(u / 2.0);
                return l_max - w * std::sqrt((1.0 - u) / 2.0);
            }
            case DistKind::raised_cosine: {
                // cdf is strictly increasing; plain bisection is plenty
                double a = l_min, b = l_max;
                for (int it = 0; it < 60; ++it) {
                    double m = 0.5 * (a + b);
                    (cdf(m) < u ? a : b) = m;
                }
                return 0.5 * (a + b);
            }
            default:
                return l_min;
        }
    }

    double mean() const { return mid(); }  // all kinds are symmetric

    double variance() const {
        double w = width();
        switch (kind) {
            case DistKind::uniform:
                return w * w / 12.0;
            case DistKind::triangular:
                return w * w / 24.0;
            case DistKind::raised_cosine:
                return w * w * (1.0 / 12.0 - 1.0 / (2.0 * M_PI * M_PI));
            case DistKind::constant:
                return 0.0;
        }
        return 0.0;
    }
};

inline DistKind parse_dist_kind(const std::string& name) {
    if (name == "uniform") return DistKind::uniform;
    if (name == "triangular") return DistKind::triangular;
    if (name == "raised_cosine" || name == "raised-cosine") return DistKind::raised_cosine;
    if (name == "constant") return DistKind::constant;
    throw std::invalid_argument("unknown distribution kind: " + name);
}

inline std::string dist_kind_name(DistKind k) {
    switch (k) {
        case DistKind::uniform: return "uniform";
        case DistKind::triangular: return "triangular";
        case DistKind::raised_cosine: return "raised_cosine";
        case DistKind::constant: return "constant";
    }
    return "?";
}

// One i.i.d. draw per edge by inverse CDF; the draw for an edge depends only
// on (seed, edge identity), independent across edges.
inline LengthField sample_lengths(const LengthDistribution& dist, const Cube& cube,
                                  std::uint64_t seed) {
    dist.validate();
    LengthField f;
    f.l_min = dist.l_min;
    f.l_max = dist.l_max;
    f.value.resize(cube.n_edges());
    for (std::size_t e = 0; e < cube.n_edges(); ++e) {
        std::uint64_t h = rng::combine(rng::mix64(seed), rng::edge_key(cube.edges[e]));
        f.value[e] = dist.quantile(rng::to_unit_open(h));
    }
    return f;
}

}  // namespace qgl
