#include "feec/estimator.hpp"

#include <cstdio>
#include <fstream>

namespace feec {

ErrorIndicators estimate_field(const DeRhamComplex& complex, const FeFunction& sigma,
                               const ScalarOnMesh& f) {
    complex.check_tag(sigma);
    if (sigma.degree != 1) throw std::invalid_argument("estimate_field expects a degree-1 field");
    const Mesh& mesh = complex.mesh();
    const int nt = mesh.triangle_count();
    const auto& quad = tri_quadrature();
    const auto& eq = edge_quadrature();

    ErrorIndicators ind;
    ind.jump = Eigen::VectorXd::Zero(nt);
    ind.corot = Eigen::VectorXd::Zero(nt);
    ind.residual = Eigen::VectorXd::Zero(nt);
    ind.osc_sq = Eigen::VectorXd::Zero(nt);
    ind.mesh_stamp = complex.stamp();

    for (int t = 0; t < nt; ++t) {
        const auto& tv = mesh.tri(t).v;
        const auto te = mesh.tri_edges(t);
        const double at = mesh.area(t);
        const double h = mesh.element_size(t);
        const Vec2 p[3] = {mesh.vertex(tv[0]), mesh.vertex(tv[1]), mesh.vertex(tv[2])};

        // tangential-jump term, accumulated edge by edge with this element's h
        double jump_energy = 0;
        for (int i = 0; i < 3; ++i) {
            const int e = te[i];
            const auto [lo, hi] = mesh.edge(e);
            const Vec2 a = mesh.vertex(lo), b = mesh.vertex(hi);
            const Vec2 tang = mesh.edge_tangent(e);
            const auto at_e = mesh.edge_tris(e);
            const int other = (at_e[0] == t) ? at_e[1] : at_e[0];
            double sq = 0;
            for (int q = 0; q < eq.npoints; ++q) {
                const Vec2 x = eq.point(q, a, b);
                double trace = dot(complex.eval_rt(sigma, t, x), tang);
                if (other >= 0) trace -= dot(complex.eval_rt(sigma, other, x), tang);
                sq += eq.weights[q] * trace * trace;
            }
            jump_energy += sq * mesh.edge_length(e);
        }
        ind.jump[t] = h * jump_energy;

        const double rot = complex.rot_rt(sigma, t);
        ind.corot[t] = h * h * rot * rot * at;

        const double div = complex.div_rt(sigma, t);
        std::array<double, TriQuadRule::npoints> fv;
        double res = 0, fint = 0;
        for (int q = 0; q < quad.npoints; ++q) {
            fv[q] = f(t, quad.point(q, p[0], p[1], p[2]));
            res += quad.weights[q] * (fv[q] - div) * (fv[q] - div);
            fint += quad.weights[q] * fv[q];
        }
        ind.residual[t] = h * h * res * at;
        double var = 0;
        for (int q = 0; q < quad.npoints; ++q)
            var += quad.weights[q] * (fv[q] - fint) * (fv[q] - fint);
        ind.osc_sq[t] = h * h * var * at;
    }
    ind.eta_sq = ind.jump + ind.corot + ind.residual;
    return ind;
}

ErrorIndicators estimate(const DeRhamComplex& complex, const MixedSolution& solution,
                         const ScalarOnMesh& f) {
    complex.check_tag(solution.sigma);
    return estimate_field(complex, solution.sigma, f);
}

double eta_total_sq(const ErrorIndicators& ind, const MarkedSet* subset) {
    if (!subset) return ind.eta_sq.sum();
    double sum = 0;
    for (int id : *subset) {
        if (id < 0 || id >= ind.eta_sq.size())
            throw std::invalid_argument("subset element " + std::to_string(id) + " out of range");
        sum += ind.eta_sq[id];
    }
    return sum;
}

Eigen::VectorXd oscillation_sq_per_element(const DeRhamComplex& complex, const ScalarOnMesh& f) {
    const Mesh& mesh = complex.mesh();
    const auto& quad = tri_quadrature();
    Eigen::VectorXd osc(mesh.triangle_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tv = mesh.tri(t).v;
        const Vec2 p0 = mesh.vertex(tv[0]), p1 = mesh.vertex(tv[1]), p2 = mesh.vertex(tv[2]);
        const double h = mesh.element_size(t);
        std::array<double, TriQuadRule::npoints> fv;
        double fint = 0;
        for (int q = 0; q < quad.npoints; ++q) {
            fv[q] = f(t, quad.point(q, p0, p1, p2));
            fint += quad.weights[q] * fv[q];
        }
        double var = 0;
        for (int q = 0; q < quad.npoints; ++q)
            var += quad.weights[q] * (fv[q] - fint) * (fv[q] - fint);
        osc[t] = h * h * var * mesh.area(t);
    }
    return osc;
}

double oscillation(const DeRhamComplex& complex, const ScalarOnMesh& f) {
    return std::sqrt(oscillation_sq_per_element(complex, f).sum());
}

double oscillation_on_coarse(const FeFunction& f_fine, const DeRhamComplex& fine,
                             const DeRhamComplex& coarse) {
    fine.check_tag(f_fine);
    if (f_fine.degree != 2) throw std::invalid_argument("oscillation_on_coarse expects degree 2");
    const FeFunction f_H = canonical_interp_top(f_fine, fine, coarse);
    const Mesh& mf = fine.mesh();
    const Mesh& mc = coarse.mesh();
    double total = 0;
    for (int t = 0; t < mf.triangle_count(); ++t) {
        const int anc = mf.ancestor_in(mc, t);
        const double h = mc.element_size(anc);
        const double d = f_fine.coeffs[t] - f_H.coeffs[anc];
        total += h * h * d * d * mf.area(t);
    }
    return std::sqrt(total);
}

void ErrorIndicators::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "element,jump,corot,residual,eta_sq,osc_sq\n";
    char buf[256];
    for (int t = 0; t < eta_sq.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", t, jump[t], corot[t],
                      residual[t], eta_sq[t], osc_sq[t]);
        out << buf;
    }
}

}  // namespace feec
