#include "feec/hodge.hpp"

#include <Eigen/Dense>
#include <fstream>

namespace feec {

namespace {

/// M-orthonormalizes columns in place (Gram Cholesky; the inputs here are
/// always well conditioned).
Eigen::MatrixXd m_orthonormalize(const Eigen::MatrixXd& cols, const Eigen::SparseMatrix<double>& m) {
    if (cols.cols() == 0) return cols;
    const Eigen::MatrixXd gram = cols.transpose() * (m * cols);
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("subspace basis is numerically degenerate");
    // cols * U^{-1} computed as a lower-triangular solve on the transpose
    const Eigen::MatrixXd lower = llt.matrixL();
    return lower.triangularView<Eigen::Lower>().solve(cols.transpose()).transpose();
}

}  // namespace

SubspaceBasis harmonic_basis(const DeRhamComplex& complex) {
    const int ne = complex.dof_count(1);
    const Eigen::MatrixXd d1 = Eigen::MatrixXd(complex.D1());
    const Eigen::MatrixXd dual = Eigen::MatrixXd(complex.D0()).transpose() * Eigen::MatrixXd(complex.mass(1));
    Eigen::MatrixXd stacked(d1.rows() + dual.rows(), ne);
    stacked << d1, dual;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cutoff = (sv.size() ? sv[0] : 0.0) * 1e-9;
    int rank = 0;
    while (rank < sv.size() && sv[rank] > cutoff) ++rank;
    const int null_dim = ne - rank;

    SubspaceBasis basis;
    basis.degree = 1;
    basis.mesh_stamp = complex.stamp();
    basis.columns = m_orthonormalize(svd.matrixV().rightCols(null_dim), complex.mass(1));
    return basis;
}

HodgeParts hodge_decompose(const DeRhamComplex& complex, const FeFunction& x) {
    complex.check_tag(x);
    if (x.degree != 1) throw std::invalid_argument("hodge_decompose expects degree 1");
    const auto& m1 = complex.mass(1);

    // exact part: least-squares potential of x in range(D0); the constant
    // kernel of D0 is handled by the complete orthogonal decomposition
    const Eigen::MatrixXd d0 = Eigen::MatrixXd(complex.D0());
    const Eigen::MatrixXd normal = d0.transpose() * (m1 * d0);
    const Eigen::VectorXd rhs = d0.transpose() * (m1 * x.coeffs);
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(normal);
    FeFunction b{1, d0 * cod.solve(rhs), complex.stamp()};

    const SubspaceBasis h_basis = harmonic_basis(complex);
    FeFunction h{1, Eigen::VectorXd::Zero(x.coeffs.size()), complex.stamp()};
    if (h_basis.dim() > 0)
        h.coeffs = h_basis.columns * (h_basis.columns.transpose() * (m1 * x.coeffs));

    FeFunction z{1, x.coeffs - b.coeffs - h.coeffs, complex.stamp()};
    return {std::move(b), std::move(h), std::move(z)};
}

double subspace_gap(const DeRhamComplex& complex, const SubspaceBasis& a, const SubspaceBasis& b) {
    if (a.mesh_stamp != complex.stamp() || b.mesh_stamp != complex.stamp())
        throw std::invalid_argument("gap requires both bases on this complex (prolong first)");
    if (a.degree != b.degree) throw std::invalid_argument("gap requires equal degrees");
    if (a.dim() != b.dim())
        throw std::invalid_argument("gap requires equal dimensions (got " + std::to_string(a.dim()) +
                                    " and " + std::to_string(b.dim()) + ")");
    if (a.dim() == 0) return 0.0;
    const auto& m = complex.mass(a.degree);
    const Eigen::MatrixXd qa = m_orthonormalize(a.columns, m);
    const Eigen::MatrixXd qb = m_orthonormalize(b.columns, m);
    const Eigen::MatrixXd cross = qa.transpose() * (m * qb);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross);
    const double smin = svd.singularValues().minCoeff();
    return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

SubspaceBasis prolong_basis(const SubspaceBasis& basis, const DeRhamComplex& coarse,
                            const DeRhamComplex& fine) {
    SubspaceBasis out;
    out.degree = basis.degree;
    out.mesh_stamp = fine.stamp();
    out.columns.resize(fine.dof_count(basis.degree), basis.dim());
    for (int j = 0; j < basis.dim(); ++j) {
        FeFunction col{basis.degree, basis.columns.col(j), coarse.stamp()};
        out.columns.col(j) = prolong(col, coarse, fine).coeffs;
    }
    out.columns = m_orthonormalize(out.columns, fine.mass(basis.degree));
    return out;
}

double poincare_constant(const DeRhamComplex& complex, int degree, Eigen::VectorXd* extremal) {
    if (degree != 0 && degree != 1) throw std::invalid_argument("poincare_constant needs degree 0 or 1");
    const Eigen::MatrixXd d = Eigen::MatrixXd(degree == 0 ? complex.D0() : complex.D1());
    const Eigen::MatrixXd mk = Eigen::MatrixXd(complex.mass(degree));
    const Eigen::MatrixXd mk1 = Eigen::MatrixXd(complex.mass(degree + 1));
    const Eigen::MatrixXd a = d.transpose() * mk1 * d;

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, mk);
    if (eig.info() != Eigen::Success) throw std::runtime_error("generalized eigensolve failed");
    const auto& vals = eig.eigenvalues();
    const double cutoff = std::max(vals.cwiseAbs().maxCoeff(), 1.0) * 1e-9;
    for (int i = 0; i < vals.size(); ++i) {
        if (vals[i] > cutoff) {
            if (extremal) *extremal = eig.eigenvectors().col(i);
            return std::sqrt(1.0 + 1.0 / vals[i]);
        }
    }
    throw std::runtime_error("d-Laplacian has no nonzero eigenvalue");
}

void SubspaceBasis::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "dof";
    for (int j = 0; j < dim(); ++j) out << ",basis" << j;
    out << "\n";
    for (int i = 0; i < columns.rows(); ++i) {
        out << i;
        char buf[64];
        for (int j = 0; j < dim(); ++j) {
            std::snprintf(buf, sizeof(buf), ",%.17g", columns(i, j));
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace feec
