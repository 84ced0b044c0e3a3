#pragma once

// Combinatorics of the Z^d lattice graph and its finite cubes: the edge set
// is all (m, m+h_j); a cube of radius n keeps every edge having at least one
// endpoint with sup-norm distance <= n from the center.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qgl/common.hpp"

namespace qgl {

struct Vertex {
    std::vector<int> coords;

    auto operator<=>(const Vertex&) const = default;

    Vertex shifted(int axis, int by) const {
        Vertex v = *this;
        v.coords[static_cast<std::size_t>(axis)] += by;
        return v;
    }

    int sup_norm_to(const Vertex& o) const {
        int m = 0;
        for (std::size_t i = 0; i < coords.size(); ++i)
            m = std::max(m, std::abs(coords[i] - o.coords[i]));
        return m;
    }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(coords[i]);
        }
        return s + ")";
    }
};

// Directed edge (base, base + h_direction); direction is 1-based as in h_1..h_d.
struct Edge {
    Vertex base;
    int direction = 1;

    auto operator<=>(const Edge&) const = default;

    Vertex iota() const { return base; }
    Vertex tau() const { return base.shifted(direction - 1, +1); }
};

class Cube {
   public:
    int d = 1;
    int n = 0;
    Vertex center;
    std::vector<Edge> edges;        // lexicographic by (base, direction)
    std::vector<Vertex> vertices;   // lexicographic
    std::vector<std::pair<int, int>> ends;  // (iota id, tau id) per edge
    std::vector<int> degrees;

    std::size_t n_vertices() const { return vertices.size(); }
    std::size_t n_edges() const { return edges.size(); }

    int vertex_id(const Vertex& v) const {
        auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
        if (it == vertices.end() || *it != v)
            throw std::invalid_argument("unknown vertex " + v.str());
        return static_cast<int>(it - vertices.begin());
    }

    bool has_vertex(const Vertex& v) const {
        auto it = std::lower_bound(vertices.begin(), vertices.end(), v);
        return it != vertices.end() && *it == v;
    }

    int edge_id(const Edge& e) const {
        auto it = std::lower_bound(edges.begin(), edges.end(), e);
        if (it == edges.end() || *it != e)
            throw std::invalid_argument("unknown edge " + e.base.str() + "+h" +
                                        std::to_string(e.direction));
        return static_cast<int>(it - edges.begin());
    }

    // Vertex adjacency as (neighbor vertex id, incident edge id) lists.
    std::vector<std::vector<std::pair<int, int>>> adjacency() const {
        std::vector<std::vector<std::pair<int, int>>> adj(n_vertices());
        for (std::size_t k = 0; k < edges.size(); ++k) {
            auto [i, j] = ends[k];
            adj[static_cast<std::size_t>(i)].push_back({j, static_cast<int>(k)});
            adj[static_cast<std::size_t>(j)].push_back({i, static_cast<int>(k)});
        }
        return adj;
    }
};

inline Cube build_cube(int d, int n, const Vertex& center) {
    if (d < 1) throw std::invalid_argument("build_cube: d >= 1 violated");
    if (n < 0) throw std::invalid_argument("build_cube: n >= 0 violated");
    if (static_cast<int>(center.coords.size()) != d)
        throw std::invalid_argument("build_cube: center dimension mismatch");

    Cube cube;
    cube.d = d;
    cube.n = n;
    cube.center = center;

    // An edge (m, m+h_j) touches the cube iff m or m+h_j lies in the box,
    // i.e. m ranges over the box extended by one step backwards along axis j.
    std::vector<int> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int j = 1; j <= d; ++j) {
        for (int a = 0; a < d; ++a) {
            lo[static_cast<std::size_t>(a)] = center.coords[static_cast<std::size_t>(a)] - n -
                                              (a == j - 1 ? 1 : 0);
            hi[static_cast<std::size_t>(a)] = center.coords[static_cast<std::size_t>(a)] + n;
        }
        Vertex m;
        m.coords = lo;
        while (true) {
            cube.edges.push_back(Edge{m, j});
            int a = d - 1;
            while (a >= 0) {
                auto ai = static_cast<std::size_t>(a);
                if (++m.coords[ai] <= hi[ai]) break;
                m.coords[ai] = lo[ai];
                --a;
            }
            if (a < 0) break;
        }
    }
    std::sort(cube.edges.begin(), cube.edges.end());

    cube.vertices.reserve(2 * cube.edges.size());
    for (const auto& e : cube.edges) {
        cube.vertices.push_back(e.iota());
        cube.vertices.push_back(e.tau());
    }
    std::sort(cube.vertices.begin(), cube.vertices.end());
    cube.vertices.erase(std::unique(cube.vertices.begin(), cube.vertices.end()),
                        cube.vertices.end());

    cube.ends.reserve(cube.edges.size());
    cube.degrees.assign(cube.n_vertices(), 0);
    for (const auto& e : cube.edges) {
        int i = cube.vertex_id(e.iota());
        int j = cube.vertex_id(e.tau());
        cube.ends.push_back({i, j});
        ++cube.degrees[static_cast<std::size_t>(i)];
        ++cube.degrees[static_cast<std::size_t>(j)];
    }
    return cube;
}

inline Cube build_cube(int d, int n) {
    Vertex c;
    c.coords.assign(static_cast<std::size_t>(d), 0);
    return build_cube(d, n, c);
}

inline int degree(const Cube& cube, const Vertex& v) {
    return cube.degrees[static_cast<std::size_t>(cube.vertex_id(v))];
}

}  // namespace qgl
