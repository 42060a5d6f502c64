#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "feec/geometry.hpp"

namespace feec {

/// Scalar data sampled at a physical point inside a given triangle. The
/// triangle id lets piecewise-defined data (tabulated per element) evaluate
/// without point location; analytic data ignores it.
using ScalarOnMesh = std::function<double(int tri, Vec2 p)>;

using VectorXY = std::function<Vec2(double x, double y)>;

inline ScalarOnMesh from_xy(std::function<double(double, double)> f) {
    return [f = std::move(f)](int, Vec2 p) { return f(p.x, p.y); };
}

/// Builtin benchmark data:
///   const1   - f = 1 (pure-jump estimator regime, zero oscillation)
///   sinsin   - f = 2 pi^2 sin(pi x) sin(pi y) (smooth manufactured problem)
///   linex    - f = x (analytic oscillation)
///   signstep - f = sign(x - 0.5) (discontinuous; stresses data approximation)
inline ScalarOnMesh builtin_field(const std::string& name) {
    const double pi = M_PI;
    if (name == "const1") return from_xy([](double, double) { return 1.0; });
    if (name == "sinsin")
        return from_xy([pi](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
    if (name == "linex") return from_xy([](double x, double) { return x; });
    if (name == "signstep")
        return from_xy([](double x, double) { return x >= 0.5 ? 1.0 : -1.0; });
    throw std::invalid_argument("unknown data function: " + name);
}

/// Manufactured solution matching sinsin data on the unit square. The scalar
/// proxy is ubar = sin(pi x) sin(pi y) with ubar = 0 on the boundary; the flux
/// convention <sigma, tau> = <ubar, div tau> fixes sigma = -grad(ubar).
inline VectorXY sinsin_exact_sigma() {
    return [](double x, double y) -> Vec2 {
        const double pi = M_PI;
        return {-pi * std::cos(pi * x) * std::sin(pi * y),
                -pi * std::sin(pi * x) * std::cos(pi * y)};
    };
}

}  // namespace feec
