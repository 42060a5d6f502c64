#pragma once

#include "feec/solver.hpp"

namespace feec {

/// Per-element values of the three estimator terms and of data oscillation:
///   jump     = h_T * ||[[tangential trace of sigma]]||^2 over the element boundary
///   corot    = h_T^2 * ||rot sigma||^2 (identically zero for the lowest-order space)
///   residual = h_T^2 * ||f - div sigma||^2
///   eta_sq   = jump + corot + residual
///   osc_sq   = h_T^2 * ||f - P_h f||^2
struct ErrorIndicators {
    Eigen::VectorXd jump, corot, residual, eta_sq, osc_sq;
    long mesh_stamp = 0;

    void save_csv(const std::string& path) const;
};

/// Indicators of an arbitrary degree-1 field (used both for solutions and for
/// coarse solutions re-evaluated on a refinement). Boundary edges contribute
/// their full tangential trace; each element weighs its own boundary with its
/// own h_T, so interior edges are integrated once per side.
ErrorIndicators estimate_field(const DeRhamComplex& complex, const FeFunction& sigma,
                               const ScalarOnMesh& f);

ErrorIndicators estimate(const DeRhamComplex& complex, const MixedSolution& solution,
                         const ScalarOnMesh& f);

/// Sum of eta_sq over a subset (or over everything).
double eta_total_sq(const ErrorIndicators& ind, const MarkedSet* subset = nullptr);

Eigen::VectorXd oscillation_sq_per_element(const DeRhamComplex& complex, const ScalarOnMesh& f);

/// osc(f, T_h) with the projection taken elementwise (top-degree case).
double oscillation(const DeRhamComplex& complex, const ScalarOnMesh& f);

/// osc(f_h, T_H) for a fine piecewise constant measured over a coarse mesh;
/// every integral is an exact sum over descendant elements.
double oscillation_on_coarse(const FeFunction& f_fine, const DeRhamComplex& fine,
                             const DeRhamComplex& coarse);

}  // namespace feec
