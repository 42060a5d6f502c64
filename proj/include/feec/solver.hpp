#pragma once

#include "feec/complex.hpp"

namespace feec {

class solve_failure : public std::runtime_error {
public:
    explicit solve_failure(const std::string& what) : std::runtime_error(what) {}
};

/// Solution of the discrete mixed system at top degree:
///   <sigma, tau> - <u, div tau> = 0          for all discrete tau,
///   div sigma = P_h f                        elementwise.
/// The harmonic block is absent: there are no harmonic forms at top degree.
struct MixedSolution {
    FeFunction sigma;  // degree 1
    FeFunction u;      // degree 2
    FeFunction f_h;    // degree 2, the data the solve actually used
    double residual_first = 0;       // ||M1 sigma - D1^T M2 u||
    double residual_constraint = 0;  // max_T |div sigma - f_h|
};

MixedSolution solve_mixed(const DeRhamComplex& complex, const FeFunction& f_h);
MixedSolution solve_mixed(const DeRhamComplex& complex, const ScalarOnMesh& f);

/// The three solves every nested-mesh comparison needs:
///   sigma_h     on the fine mesh with fine data P_h f,
///   sigma_tilde on the fine mesh with coarse data P_H f,
///   sigma_H     on the coarse mesh with coarse data P_H f.
struct DataVariantSolves {
    MixedSolution fine;         // sigma_h
    MixedSolution fine_coarse;  // sigma_tilde_h
    MixedSolution coarse;       // sigma_H
};

DataVariantSolves solve_with_data_variants(const DeRhamComplex& fine, const DeRhamComplex& coarse,
                                           const ScalarOnMesh& f);

}  // namespace feec
