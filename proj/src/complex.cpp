#include "feec/complex.hpp"

#include <Eigen/SparseLU>
#include <fstream>

namespace feec {

DeRhamComplex DeRhamComplex::build(const Mesh& mesh) {
    DeRhamComplex c;
    c.mesh_ = mesh;
    const int nv = mesh.vertex_count();
    const int ne = mesh.edge_count();
    const int nt = mesh.triangle_count();
    const auto& quad = tri_quadrature();

    using T = Eigen::Triplet<double>;
    std::vector<T> d0, d1, m0, m1;

    // D0: flux of the rotated gradient of a hat function through an edge is the
    // tangential increment of the hat function, i.e. value at head minus tail.
    d0.reserve(2 * ne);
    for (int e = 0; e < ne; ++e) {
        const auto [lo, hi] = mesh.edge(e);
        d0.emplace_back(e, hi, 1.0);
        d0.emplace_back(e, lo, -1.0);
    }

    d1.reserve(3 * nt);
    m0.reserve(9 * nt);
    m1.reserve(9 * nt);
    for (int t = 0; t < nt; ++t) {
        const auto& tv = mesh.tri(t).v;
        const auto te = mesh.tri_edges(t);
        const auto ts = mesh.tri_edge_signs(t);
        const double at = mesh.area(t);
        const Vec2 p[3] = {mesh.vertex(tv[0]), mesh.vertex(tv[1]), mesh.vertex(tv[2])};

        for (int i = 0; i < 3; ++i) d1.emplace_back(t, te[i], ts[i] / at);

        // Local RT basis for edge i (opposite vertex i): s_i (x - p_i) / (2|T|).
        double lm1[3][3] = {};
        double lm0[3][3] = {};
        for (int q = 0; q < quad.npoints; ++q) {
            const Vec2 x = quad.point(q, p[0], p[1], p[2]);
            const double w = quad.weights[q] * at;
            Vec2 psi[3];
            for (int i = 0; i < 3; ++i) psi[i] = (ts[i] / (2 * at)) * (x - p[i]);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    lm1[i][j] += w * dot(psi[i], psi[j]);
                    lm0[i][j] += w * quad.bary[q][i] * quad.bary[q][j];
                }
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                m1.emplace_back(te[i], te[j], lm1[i][j]);
                m0.emplace_back(tv[i], tv[j], lm0[i][j]);
            }
    }

    c.D0_.resize(ne, nv);
    c.D0_.setFromTriplets(d0.begin(), d0.end());
    c.D1_.resize(nt, ne);
    c.D1_.setFromTriplets(d1.begin(), d1.end());
    c.M0_.resize(nv, nv);
    c.M0_.setFromTriplets(m0.begin(), m0.end());
    c.M1_.resize(ne, ne);
    c.M1_.setFromTriplets(m1.begin(), m1.end());

    std::vector<T> m2;
    m2.reserve(nt);
    for (int t = 0; t < nt; ++t) m2.emplace_back(t, t, mesh.area(t));
    c.M2_.resize(nt, nt);
    c.M2_.setFromTriplets(m2.begin(), m2.end());
    return c;
}

int DeRhamComplex::dof_count(int degree) const {
    switch (degree) {
        case 0: return mesh_.vertex_count();
        case 1: return mesh_.edge_count();
        case 2: return mesh_.triangle_count();
    }
    throw std::invalid_argument("degree must be 0, 1 or 2");
}

const Eigen::SparseMatrix<double>& DeRhamComplex::mass(int degree) const {
    switch (degree) {
        case 0: return M0_;
        case 1: return M1_;
        case 2: return M2_;
    }
    throw std::invalid_argument("degree must be 0, 1 or 2");
}

void DeRhamComplex::check_tag(const FeFunction& f) const {
    if (f.mesh_stamp != stamp())
        throw std::invalid_argument("FeFunction belongs to a different mesh generation");
    if (f.coeffs.size() != dof_count(f.degree))
        throw std::invalid_argument("FeFunction coefficient length does not match its space");
}

FeFunction DeRhamComplex::project(const ScalarOnMesh& f, int degree) const {
    const auto& quad = tri_quadrature();
    const int nt = mesh_.triangle_count();
    if (degree == 2) {
        FeFunction out{2, Eigen::VectorXd(nt), stamp()};
        for (int t = 0; t < nt; ++t) {
            const auto& tv = mesh_.tri(t).v;
            const Vec2 p0 = mesh_.vertex(tv[0]), p1 = mesh_.vertex(tv[1]), p2 = mesh_.vertex(tv[2]);
            double mean = 0;
            for (int q = 0; q < quad.npoints; ++q)
                mean += quad.weights[q] * f(t, quad.point(q, p0, p1, p2));
            out.coeffs[t] = mean;  // weights sum to 1
        }
        return out;
    }
    if (degree == 0) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh_.vertex_count());
        for (int t = 0; t < nt; ++t) {
            const auto& tv = mesh_.tri(t).v;
            const Vec2 p0 = mesh_.vertex(tv[0]), p1 = mesh_.vertex(tv[1]), p2 = mesh_.vertex(tv[2]);
            const double at = mesh_.area(t);
            for (int q = 0; q < quad.npoints; ++q) {
                const double fv = f(t, quad.point(q, p0, p1, p2)) * quad.weights[q] * at;
                for (int i = 0; i < 3; ++i) rhs[tv[i]] += fv * quad.bary[q][i];
            }
        }
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mass_solver(M0_);
        if (mass_solver.info() != Eigen::Success)
            throw std::runtime_error("mass matrix factorization failed");
        FeFunction out{0, mass_solver.solve(rhs), stamp()};
        return out;
    }
    throw std::invalid_argument("scalar projection targets degree 0 or 2");
}

FeFunction DeRhamComplex::project_vector(const VectorXY& v) const {
    const auto& quad = tri_quadrature();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh_.edge_count());
    for (int t = 0; t < mesh_.triangle_count(); ++t) {
        const auto& tv = mesh_.tri(t).v;
        const auto te = mesh_.tri_edges(t);
        const auto ts = mesh_.tri_edge_signs(t);
        const double at = mesh_.area(t);
        const Vec2 p[3] = {mesh_.vertex(tv[0]), mesh_.vertex(tv[1]), mesh_.vertex(tv[2])};
        for (int q = 0; q < quad.npoints; ++q) {
            const Vec2 x = quad.point(q, p[0], p[1], p[2]);
            const Vec2 val = v(x.x, x.y);
            const double w = quad.weights[q] * at;
            for (int i = 0; i < 3; ++i)
                rhs[te[i]] += w * dot(val, (ts[i] / (2 * at)) * (x - p[i]));
        }
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> mass_solver(M1_);
    if (mass_solver.info() != Eigen::Success)
        throw std::runtime_error("mass matrix factorization failed");
    return {1, mass_solver.solve(rhs), stamp()};
}

FeFunction DeRhamComplex::interp_rt(const VectorXY& v) const {
    const auto& eq = edge_quadrature();
    Eigen::VectorXd coeffs(mesh_.edge_count());
    for (int e = 0; e < mesh_.edge_count(); ++e) {
        const auto [lo, hi] = mesh_.edge(e);
        const Vec2 a = mesh_.vertex(lo), b = mesh_.vertex(hi);
        const Vec2 n = mesh_.edge_normal(e);
        double flux = 0;
        for (int q = 0; q < eq.npoints; ++q) {
            const Vec2 x = eq.point(q, a, b);
            flux += eq.weights[q] * dot(v(x.x, x.y), n);
        }
        coeffs[e] = flux * mesh_.edge_length(e);
    }
    return {1, std::move(coeffs), stamp()};
}

double DeRhamComplex::eval_p0_scalar(const FeFunction& f, int tri, Vec2 p) const {
    check_tag(f);
    const auto& tv = mesh_.tri(tri).v;
    const Vec2 p0 = mesh_.vertex(tv[0]), p1 = mesh_.vertex(tv[1]), p2 = mesh_.vertex(tv[2]);
    const double at = mesh_.area(tri);
    const double l0 = signed_area(p, p1, p2) / at;
    const double l1 = signed_area(p0, p, p2) / at;
    const double l2 = 1.0 - l0 - l1;
    return f.coeffs[tv[0]] * l0 + f.coeffs[tv[1]] * l1 + f.coeffs[tv[2]] * l2;
}

double DeRhamComplex::eval_const(const FeFunction& f, int tri) const {
    check_tag(f);
    return f.coeffs[tri];
}

Vec2 DeRhamComplex::eval_rt(const FeFunction& f, int tri, Vec2 p) const {
    check_tag(f);
    const auto& tv = mesh_.tri(tri).v;
    const auto te = mesh_.tri_edges(tri);
    const auto ts = mesh_.tri_edge_signs(tri);
    const double at = mesh_.area(tri);
    Vec2 out{0, 0};
    for (int i = 0; i < 3; ++i)
        out = out + (f.coeffs[te[i]] * ts[i] / (2 * at)) * (p - mesh_.vertex(tv[i]));
    return out;
}

double DeRhamComplex::div_rt(const FeFunction& f, int tri) const {
    check_tag(f);
    const auto te = mesh_.tri_edges(tri);
    const auto ts = mesh_.tri_edge_signs(tri);
    double d = 0;
    for (int i = 0; i < 3; ++i) d += f.coeffs[te[i]] * ts[i];
    return d / mesh_.area(tri);
}

double DeRhamComplex::rot_rt(const FeFunction& f, int tri) const {
    // rot(s(x - p)/(2|T|)) vanishes for every basis function of the
    // lowest-order space.
    const auto te = mesh_.tri_edges(tri);
    double r = 0;
    for (int i = 0; i < 3; ++i) r += f.coeffs[te[i]] * 0.0;
    return r;
}

double DeRhamComplex::norm(const FeFunction& f) const {
    check_tag(f);
    return std::sqrt(std::max(0.0, f.coeffs.dot(mass(f.degree) * f.coeffs)));
}

double DeRhamComplex::inner(const FeFunction& a, const FeFunction& b) const {
    check_tag(a);
    check_tag(b);
    if (a.degree != b.degree) throw std::invalid_argument("inner product across degrees");
    return a.coeffs.dot(mass(a.degree) * b.coeffs);
}

ScalarOnMesh DeRhamComplex::as_field(const FeFunction& f) const {
    check_tag(f);
    if (f.degree == 2)
        return [this, f](int tri, Vec2) { return f.coeffs[tri]; };
    if (f.degree == 0)
        return [this, f](int tri, Vec2 p) { return eval_p0_scalar(f, tri, p); };
    throw std::invalid_argument("as_field supports degrees 0 and 2");
}

void DeRhamComplex::export_coordinate(const Eigen::SparseMatrix<double>& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    char buf[96];
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n", long(it.row()), long(it.col()),
                          it.value());
            out << buf;
        }
}

FeFunction canonical_interp_top(const FeFunction& f_fine, const DeRhamComplex& fine,
                                const DeRhamComplex& coarse) {
    fine.check_tag(f_fine);
    if (f_fine.degree != 2) throw std::invalid_argument("canonical_interp_top expects degree 2");
    const Mesh& mf = fine.mesh();
    const Mesh& mc = coarse.mesh();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mc.triangle_count());
    for (int t = 0; t < mf.triangle_count(); ++t) {
        const int anc = mf.ancestor_in(mc, t);
        if (anc < 0) throw std::invalid_argument("meshes are not nested");
        acc[anc] += mf.area(t) * f_fine.coeffs[t];
    }
    for (int t = 0; t < mc.triangle_count(); ++t) acc[t] /= mc.area(t);
    return {2, std::move(acc), coarse.stamp()};
}

FeFunction prolong(const FeFunction& f, const DeRhamComplex& coarse, const DeRhamComplex& fine) {
    coarse.check_tag(f);
    const Mesh& mf = fine.mesh();
    const Mesh& mc = coarse.mesh();
    if (f.degree == 2) {
        Eigen::VectorXd out(mf.triangle_count());
        for (int t = 0; t < mf.triangle_count(); ++t) {
            const int anc = mf.ancestor_in(mc, t);
            if (anc < 0) throw std::invalid_argument("meshes are not nested");
            out[t] = f.coeffs[anc];
        }
        return {2, std::move(out), fine.stamp()};
    }
    if (f.degree == 1) {
        // The coarse field has a constant normal component along any straight
        // segment, so the flux through a fine edge is the midpoint normal trace
        // times the length. Each fine edge is evaluated inside the coarse
        // ancestor of one of its adjacent fine triangles; on coarse interfaces
        // both sides agree by H(div) conformity.
        Eigen::VectorXd out(mf.edge_count());
        std::vector<int> tri_anc(mf.triangle_count());
        for (int t = 0; t < mf.triangle_count(); ++t) {
            tri_anc[t] = mf.ancestor_in(mc, t);
            if (tri_anc[t] < 0) throw std::invalid_argument("meshes are not nested");
        }
        for (int e = 0; e < mf.edge_count(); ++e) {
            const auto [lo, hi] = mf.edge(e);
            const Vec2 mid = midpoint(mf.vertex(lo), mf.vertex(hi));
            const int host = tri_anc[mf.edge_tris(e)[0]];
            const Vec2 v = coarse.eval_rt(f, host, mid);
            out[e] = dot(v, mf.edge_normal(e)) * mf.edge_length(e);
        }
        return {1, std::move(out), fine.stamp()};
    }
    throw std::invalid_argument("prolong supports degrees 1 and 2");
}

double diff_norm(const FeFunction& coarse_fun, const DeRhamComplex& coarse,
                 const FeFunction& fine_fun, const DeRhamComplex& fine) {
    FeFunction lifted = prolong(coarse_fun, coarse, fine);
    lifted.coeffs -= fine_fun.coeffs;
    return fine.norm(lifted);
}

}  // namespace feec
