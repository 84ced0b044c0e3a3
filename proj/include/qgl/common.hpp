#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgl {

struct QglError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Energy too close to the Dirichlet spectrum of the edge set.
struct DirichletProximity : QglError {
    using QglError::QglError;
};

// Requested energy interval intersects the forbidden set.
struct IntervalMeetsDelta : QglError {
    using QglError::QglError;
};

// Two sorted eigenvalue branches cannot be disentangled above the minimal grid step.
struct BranchAmbiguity : QglError {
    using QglError::QglError;
};

// Root bracketing failed; the input parameters are inconsistent.
struct BracketingFailure : QglError {
    using QglError::QglError;
};

// An eigensolver did not converge.
struct SolverError : QglError {
    using QglError::QglError;
};

// Invalid or inconsistent run configuration; the message names the violated invariant.
struct ConfigError : QglError {
    using QglError::QglError;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

inline double sq(double x) { return x * x; }

// Locale-independent shortest-roundtrip-ish formatting, 17 significant digits.
inline std::string fmt_g17(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace qgl
