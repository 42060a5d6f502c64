#pragma once

#include "feec/complex.hpp"

namespace feec {

/// Columns spanning a subspace of a discrete space, kept M-orthonormal.
struct SubspaceBasis {
    int degree = 1;
    Eigen::MatrixXd columns;  // dof_count x dim
    long mesh_stamp = 0;

    int dim() const { return static_cast<int>(columns.cols()); }

    void save_csv(const std::string& path) const;
};

/// M1-orthonormal basis of the discrete harmonic space at degree 1,
///   { x : D1 x = 0 and D0^T M1 x = 0 };
/// its dimension equals the first Betti number of the domain. Null spaces are
/// computed densely with a relative singular-value cutoff of 1e-9.
SubspaceBasis harmonic_basis(const DeRhamComplex& complex);

/// x = exact + harmonic + coexact_perp, pairwise M1-orthogonal:
/// exact in range(D0), harmonic as above, coexact_perp orthogonal to ker(D1).
struct HodgeParts {
    FeFunction exact, harmonic, coexact_perp;
};

HodgeParts hodge_decompose(const DeRhamComplex& complex, const FeFunction& x);

/// Gap delta(A,B) = sup_{x in A, |x|=1} |x - P_B x|, via the smallest singular
/// value of the cross-Gram matrix of the orthonormalized bases. Throws if the
/// dimensions differ (the gap is only symmetric for equal dimensions).
double subspace_gap(const DeRhamComplex& complex, const SubspaceBasis& a, const SubspaceBasis& b);

/// Prolongs every column to a nested finer complex (exact inclusion) and
/// re-orthonormalizes there.
SubspaceBasis prolong_basis(const SubspaceBasis& basis, const DeRhamComplex& coarse,
                            const DeRhamComplex& fine);

/// Discrete Poincare constant at degree k in {0,1}: sqrt(1 + 1/lambda_min)
/// with lambda_min the smallest nonzero eigenvalue of D_k^T M_{k+1} D_k
/// against M_k. Optionally returns the extremal eigenvector.
double poincare_constant(const DeRhamComplex& complex, int degree,
                         Eigen::VectorXd* extremal = nullptr);

}  // namespace feec
