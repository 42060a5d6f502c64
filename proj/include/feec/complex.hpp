#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "feec/fields.hpp"
#include "feec/mesh.hpp"

namespace feec {

/// Coefficient vector of a discrete k-form, tagged with the stamp of the mesh
/// it lives on. Degree 0 = nodal P1, degree 1 = edge-flux RT (H(div) proxy of
/// lowest-order 1-forms), degree 2 = element mean values (P0).
struct FeFunction {
    int degree = 2;
    Eigen::VectorXd coeffs;
    long mesh_stamp = 0;
};

/// The discrete de Rham subcomplex on one mesh: the three spaces, the two
/// exterior-derivative matrices and the three mass matrices.
///
/// The degree-1 space is handled through the H(div) proxy, so D0 is the
/// rotated gradient (flux of the perp-gradient through each global edge) and
/// D1 is the elementwise divergence. With edge-flux and mean-value dofs both
/// matrices have integer incidence content: D0 entries are +-1 and D1 entries
/// are +-1/|T|, which makes D1*D0 = 0 exact in floating point.
class DeRhamComplex {
public:
    static DeRhamComplex build(const Mesh& mesh);

    const Mesh& mesh() const { return mesh_; }
    long stamp() const { return mesh_.stamp(); }

    int dof_count(int degree) const;

    const Eigen::SparseMatrix<double>& D0() const { return D0_; }
    const Eigen::SparseMatrix<double>& D1() const { return D1_; }
    const Eigen::SparseMatrix<double>& mass(int degree) const;

    // --- projections and interpolation ---------------------------------------
    /// L2 projection of scalar data onto degree 0 or 2.
    FeFunction project(const ScalarOnMesh& f, int degree) const;
    /// L2 projection of a vector field onto the degree-1 space (M1 solve).
    FeFunction project_vector(const VectorXY& v) const;
    /// Canonical (edge flux) interpolation into the degree-1 space.
    FeFunction interp_rt(const VectorXY& v) const;

    // --- pointwise evaluation -------------------------------------------------
    double eval_p0_scalar(const FeFunction& f, int tri, Vec2 p) const;  // degree 0
    double eval_const(const FeFunction& f, int tri) const;             // degree 2
    Vec2 eval_rt(const FeFunction& f, int tri, Vec2 p) const;          // degree 1
    /// Elementwise div of a degree-1 function (constant per element).
    double div_rt(const FeFunction& f, int tri) const;
    /// Elementwise rot (the coderivative proxy) of a degree-1 function. The
    /// lowest-order space is irrotational per element, so this is identically
    /// zero; the code path stays live for higher-order extensions.
    double rot_rt(const FeFunction& f, int tri) const;

    // --- norms ----------------------------------------------------------------
    double norm(const FeFunction& f) const;
    double inner(const FeFunction& a, const FeFunction& b) const;

    /// Adapts a discrete function to the ScalarOnMesh interface (degree 0 or 2).
    ScalarOnMesh as_field(const FeFunction& f) const;

    /// Writes a sparse operator as "row col value" text for debugging.
    static void export_coordinate(const Eigen::SparseMatrix<double>& m, const std::string& path);

    void check_tag(const FeFunction& f) const;

private:
    Mesh mesh_;
    Eigen::SparseMatrix<double> D0_, D1_, M0_, M1_, M2_;
};

// --- operations between nested complexes -------------------------------------

/// Canonical interpolation of a fine piecewise constant onto a coarse mesh:
/// on each coarse element the area-weighted mean of the fine values, so the
/// element integrals are preserved exactly.
FeFunction canonical_interp_top(const FeFunction& f_fine, const DeRhamComplex& fine,
                                const DeRhamComplex& coarse);

/// Represents a coarse function exactly on a refinement (degrees 1 and 2).
FeFunction prolong(const FeFunction& f, const DeRhamComplex& coarse, const DeRhamComplex& fine);

/// M-norm of (prolong(coarse) - fine_fun) evaluated on the fine complex.
double diff_norm(const FeFunction& coarse_fun, const DeRhamComplex& coarse,
                 const FeFunction& fine_fun, const DeRhamComplex& fine);

}  // namespace feec
