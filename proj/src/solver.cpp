#include "feec/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace feec {

namespace {

/// Assembles the saddle system
///   [ M1   -D1^T M2 ] [sigma]   [   0    ]
///   [ M2 D1     0   ] [  u  ] = [ M2 f_h ]
/// The constraint block is written directly from the orientation signs, so its
/// entries are exact +-1 and the elementwise identity div sigma = f_h holds to
/// solver accuracy.
Eigen::SparseMatrix<double> saddle_matrix(const DeRhamComplex& c) {
    const Mesh& mesh = c.mesh();
    const int ne = mesh.edge_count();
    const int nt = mesh.triangle_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * nt + 6 * nt);

    const auto& m1 = c.mass(1);
    for (int k = 0; k < m1.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m1, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());

    for (int t = 0; t < nt; ++t) {
        const auto te = mesh.tri_edges(t);
        const auto ts = mesh.tri_edge_signs(t);
        for (int i = 0; i < 3; ++i) {
            trips.emplace_back(ne + t, te[i], double(ts[i]));   // M2*D1 row
            trips.emplace_back(te[i], ne + t, -double(ts[i]));  // -(M2*D1)^T
        }
    }
    Eigen::SparseMatrix<double> A(ne + nt, ne + nt);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

}  // namespace

MixedSolution solve_mixed(const DeRhamComplex& complex, const FeFunction& f_h) {
    complex.check_tag(f_h);
    if (f_h.degree != 2) throw std::invalid_argument("solve_mixed expects degree-2 data");
    const Mesh& mesh = complex.mesh();
    const int ne = mesh.edge_count();
    const int nt = mesh.triangle_count();

    const Eigen::SparseMatrix<double> A = saddle_matrix(complex);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ne + nt);
    for (int t = 0; t < nt; ++t) rhs[ne + t] = mesh.area(t) * f_h.coeffs[t];

    Eigen::VectorXd x;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() == Eigen::Success) {
        x = lu.solve(rhs);
    } else if (ne + nt <= 2000) {
        // Dense fallback for desk-size systems; the top-degree saddle system is
        // nonsingular, so a failure here signals a broken mesh or complex.
        const Eigen::FullPivLU<Eigen::MatrixXd> dense{Eigen::MatrixXd(A)};
        if (!dense.isInvertible()) throw solve_failure("saddle system is singular");
        x = dense.solve(rhs);
    } else {
        throw solve_failure("sparse factorization of the saddle system failed");
    }

    MixedSolution out;
    out.sigma = {1, x.head(ne), complex.stamp()};
    out.u = {2, x.tail(nt), complex.stamp()};
    out.f_h = f_h;
    out.residual_first =
        (complex.mass(1) * out.sigma.coeffs - complex.D1().transpose() * (complex.mass(2) * out.u.coeffs))
            .norm();
    double worst = 0;
    for (int t = 0; t < nt; ++t)
        worst = std::max(worst, std::abs(complex.div_rt(out.sigma, t) - f_h.coeffs[t]));
    out.residual_constraint = worst;
    return out;
}

MixedSolution solve_mixed(const DeRhamComplex& complex, const ScalarOnMesh& f) {
    return solve_mixed(complex, complex.project(f, 2));
}

DataVariantSolves solve_with_data_variants(const DeRhamComplex& fine, const DeRhamComplex& coarse,
                                           const ScalarOnMesh& f) {
    if (!fine.mesh().refines(coarse.mesh()))
        throw std::invalid_argument("solve_with_data_variants needs nested meshes");
    DataVariantSolves out;
    const FeFunction f_h = fine.project(f, 2);
    const FeFunction f_H = coarse.project(f, 2);
    out.fine = solve_mixed(fine, f_h);
    out.fine_coarse = solve_mixed(fine, prolong(f_H, coarse, fine));
    out.coarse = solve_mixed(coarse, f_H);
    return out;
}

}  // namespace feec
