#pragma once

// Edge -> length assignment on a cube, with its support bounds.

#include <stdexcept>
#include <vector>

#include "qgl/lattice.hpp"

namespace qgl {

struct LengthField {
    std::vector<double> value;  // by dense edge index
    double l_min = 0.0;
    double l_max = 0.0;

    double operator[](std::size_t e) const { return value[e]; }

    void validate() const {
        if (!(0.0 < l_min && l_min <= l_max))
            throw std::invalid_argument("LengthField: 0 < l_min <= l_max violated");
        for (double v : value)
            if (!(l_min <= v && v <= l_max))
                throw std::invalid_argument("LengthField: value outside [l_min, l_max]");
    }
};

inline LengthField make_constant_field(const Cube& cube, double u) {
    if (!(u > 0.0)) throw std::invalid_argument("constant length must be positive");
    LengthField f;
    f.value.assign(cube.n_edges(), u);
    f.l_min = f.l_max = u;
    return f;
}

inline LengthField make_field(const Cube& cube, std::vector<double> values, double l_min,
                              double l_max) {
    if (values.size() != cube.n_edges())
        throw std::invalid_argument("LengthField: one value per edge required");
    LengthField f;
    f.value = std::move(values);
    f.l_min = l_min;
    f.l_max = l_max;
    f.validate();
    return f;
}

}  // namespace qgl
