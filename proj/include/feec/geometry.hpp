#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace feec {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

/// Counterclockwise quarter turn; fixes the orientation convention shared by
/// the rotated gradient and the global edge normals.
inline Vec2 rot90(Vec2 a) { return {-a.y, a.x}; }

inline double signed_area(Vec2 a, Vec2 b, Vec2 c) {
    return 0.5 * cross(b - a, c - a);
}

inline Vec2 midpoint(Vec2 a, Vec2 b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

/// Symmetric 6-point triangle rule, exact for polynomials of degree 4, with
/// integral(g) ~= area * sum(w_i * g(x_i)). Every area integral in the
/// library goes through this one rule; assembled operators are reproducible
/// bit for bit.
struct TriQuadRule {
    static constexpr int npoints = 6;
    // barycentric coordinates (l0, l1, l2) and weights
    std::array<std::array<double, 3>, npoints> bary;
    std::array<double, npoints> weights;

    TriQuadRule() {
        const double a1 = 0.445948490915965;
        const double w1 = 0.223381589678011;
        const double a2 = 0.091576213509771;
        const double w2 = 0.109951743655322;
        bary = {{{a1, a1, 1 - 2 * a1},
                 {a1, 1 - 2 * a1, a1},
                 {1 - 2 * a1, a1, a1},
                 {a2, a2, 1 - 2 * a2},
                 {a2, 1 - 2 * a2, a2},
                 {1 - 2 * a2, a2, a2}}};
        weights = {w1, w1, w1, w2, w2, w2};
    }

    Vec2 point(int q, Vec2 p0, Vec2 p1, Vec2 p2) const {
        return bary[q][0] * p0 + bary[q][1] * p1 + bary[q][2] * p2;
    }
};

inline const TriQuadRule& tri_quadrature() {
    static const TriQuadRule rule;
    return rule;
}

/// 3-point Gauss rule on a segment, exact for polynomials of degree 5.
/// Normalized so that integral(g) ~= length * sum(w_i * g(x_i)).
struct EdgeQuadRule {
    static constexpr int npoints = 3;
    std::array<double, npoints> t;  // positions in [0,1]
    std::array<double, npoints> weights;

    EdgeQuadRule() {
        const double s = std::sqrt(3.0 / 5.0);
        t = {0.5 * (1 - s), 0.5, 0.5 * (1 + s)};
        weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    }

    Vec2 point(int q, Vec2 a, Vec2 b) const { return (1 - t[q]) * a + t[q] * b; }
};

inline const EdgeQuadRule& edge_quadrature() {
    static const EdgeQuadRule rule;
    return rule;
}

}  // namespace feec
