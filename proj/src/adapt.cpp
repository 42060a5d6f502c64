#include "feec/adapt.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace feec {

MarkedSet dorfler_mark(const Eigen::VectorXd& eta_sq, double theta) {
    if (eta_sq.size() == 0) throw std::invalid_argument("no indicators to mark");
    if (!(theta > 0.0) || theta > 1.0) throw std::invalid_argument("theta must lie in (0,1]");

    std::vector<int> order(eta_sq.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (eta_sq[a] != eta_sq[b]) return eta_sq[a] > eta_sq[b];
        return a < b;
    });

    // Summing the target in the same descending order keeps theta = 1 exact.
    double total = 0;
    for (int id : order) total += eta_sq[id];
    const double goal = theta * total;

    MarkedSet marked;
    double sum = 0;
    for (int id : order) {
        if (sum >= goal) break;
        if (eta_sq[id] <= 0.0) break;  // only zeros left, sum cannot grow
        marked.push_back(id);
        sum += eta_sq[id];
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

MarkedSet dorfler_mark(const ErrorIndicators& ind, double theta) {
    return dorfler_mark(ind.eta_sq, theta);
}

AmfemResult amfem(const Mesh& mesh0, const ScalarOnMesh& f, const AmfemParams& params) {
    if (!(params.eps > 0)) throw std::invalid_argument("eps must be positive");
    if (!(params.theta > 0) || params.theta > 1) throw std::invalid_argument("theta must lie in (0,1]");

    ConvergenceHistory history;
    history.theta = params.theta;
    history.eps = params.eps;
    history.delta = params.delta;
    history.beta_q = params.beta_q;

    std::vector<Mesh> meshes{mesh0};
    std::vector<DeRhamComplex> complexes;
    std::vector<MixedSolution> solutions;
    bool reached = false;

    for (int k = 0;; ++k) {
        complexes.push_back(DeRhamComplex::build(meshes[k]));
        const DeRhamComplex& ck = complexes.back();
        solutions.push_back(solve_mixed(ck, f));
        const ErrorIndicators ind = estimate(ck, solutions.back(), f);

        HistoryRecord rec;
        rec.k = k;
        rec.cells = meshes[k].triangle_count();
        rec.dofs_sigma = ck.dof_count(1);
        rec.dofs_u = ck.dof_count(2);
        rec.eta_sq = eta_total_sq(ind);
        rec.osc_sq = ind.osc_sq.sum();
        history.records.push_back(rec);

        if (k > 0) {
            // retroactive entries for the previous iteration
            HistoryRecord& prev = history.records[k - 1];
            FeFunction lifted = prolong(solutions[k - 1].sigma, complexes[k - 1], ck);
            lifted.coeffs -= solutions[k].sigma.coeffs;
            prev.E_sq = ck.norm(lifted);
            prev.E_sq *= prev.E_sq;
            const double oh = oscillation_on_coarse(solutions[k].f_h, ck, complexes[k - 1]);
            prev.osc_hat_sq = oh * oh;
        }

        if (std::sqrt(rec.eta_sq) <= params.eps) {
            reached = true;
            break;
        }
        if (k >= params.max_iters) break;

        const MarkedSet marked = dorfler_mark(ind, params.theta);
        if (marked.empty()) {  // estimator identically zero: nothing to refine
            reached = true;
            break;
        }
        history.records[k].marked = static_cast<int>(marked.size());
        meshes.push_back(meshes[k].bisect(marked));
    }
    history.reached_tolerance = reached;

    if (params.compute_error) {
        const Mesh ref_mesh = uniform_refine(meshes.back(), 2 * params.ref_depth);
        const DeRhamComplex ref = DeRhamComplex::build(ref_mesh);
        const MixedSolution ref_sol = solve_mixed(ref, f);
        for (size_t k = 0; k < solutions.size(); ++k) {
            const double e = diff_norm(solutions[k].sigma, complexes[k], ref_sol.sigma, ref);
            HistoryRecord& rec = history.records[k];
            rec.error_sq = e * e;
            rec.q = (1 - params.delta) * rec.error_sq + params.beta_q * rec.eta_sq;
        }
    }

    return {meshes.back(), solutions.back(), std::move(history)};
}

ApproxResult approx_data(const ScalarOnMesh& f, const Mesh& mesh0, double eps, int max_iters) {
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    ApproxResult out;
    out.mesh = mesh0;
    for (int k = 0;; ++k) {
        const DeRhamComplex c = DeRhamComplex::build(out.mesh);
        const Eigen::VectorXd osc = oscillation_sq_per_element(c, f);
        out.osc = std::sqrt(osc.sum());
        out.iterations = k;
        if (out.osc <= eps) {
            out.reached_tolerance = true;
            break;
        }
        if (k >= max_iters) break;
        const MarkedSet marked = dorfler_mark(osc, 0.5);
        if (marked.empty()) break;
        out.mesh = out.mesh.bisect(marked);
    }
    out.cells_added = out.mesh.triangle_count() - mesh0.triangle_count();
    return out;
}

double fit_rate(const ConvergenceHistory& history, RateAxis x, RateQuantity y) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : history.records) {
        const double xv = (x == RateAxis::dofs) ? double(r.dofs_sigma + r.dofs_u) : double(r.cells);
        const double yv = std::sqrt(y == RateQuantity::error ? r.error_sq : r.eta_sq);
        if (xv > 0 && yv > 0) pts.emplace_back(std::log(xv), std::log(yv));
    }
    const int n = static_cast<int>(pts.size());
    if (n < 3) throw std::invalid_argument("fit_rate needs at least 3 positive records");
    const int use = std::max(3, n / 2);
    pts.erase(pts.begin(), pts.end() - use);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [px, py] : pts) {
        sx += px;
        sy += py;
        sxx += px * px;
        sxy += px * py;
    }
    const double m = use;
    const double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) throw std::invalid_argument("fit_rate: degenerate abscissa");
    return (m * sxy - sx * sy) / denom;
}

ContractionReport contraction_report(const ConvergenceHistory& history, double delta,
                                     const std::vector<double>& beta_grid) {
    const auto& rec = history.records;
    if (rec.size() < 4) throw std::invalid_argument("contraction_report needs >= 4 iterations");
    if (!(delta > 0) || delta >= 1) throw std::invalid_argument("delta must lie in (0,1)");
    if (beta_grid.empty()) throw std::invalid_argument("empty beta grid");

    ContractionReport out;
    out.delta = delta;
    out.best_gamma = std::numeric_limits<double>::infinity();
    for (double beta : beta_grid) {
        double worst = 0;
        for (size_t k = 1; k + 1 < rec.size(); ++k) {
            const double qk = (1 - delta) * rec[k].error_sq + beta * rec[k].eta_sq;
            const double qk1 = (1 - delta) * rec[k + 1].error_sq + beta * rec[k + 1].eta_sq;
            if (qk <= 0) continue;
            worst = std::max(worst, qk1 / qk);
        }
        out.gamma_per_beta.emplace_back(beta, worst);
        if (worst < out.best_gamma) {
            out.best_gamma = worst;
            out.best_beta = beta;
        }
    }
    out.contracting = out.best_gamma < 1.0;

    // implied marking constant per step from the estimator-reduction relation
    out.lambda_min = std::numeric_limits<double>::infinity();
    out.lambda_max = -std::numeric_limits<double>::infinity();
    const double beta = out.best_beta;
    for (size_t k = 0; k + 1 < rec.size(); ++k) {
        if (rec[k].eta_sq <= 0) continue;
        const double lam = (beta * (rec[k].eta_sq - rec[k + 1].eta_sq) + rec[k].E_sq + rec[k].osc_hat_sq) /
                           (beta * history.theta * rec[k].eta_sq);
        out.lambda_min = std::min(out.lambda_min, lam);
        out.lambda_max = std::max(out.lambda_max, lam);
    }

    double worst = 0;
    for (size_t k = 1; k + 1 < rec.size(); ++k) {
        const double qk = (1 - delta) * rec[k].error_sq + beta * rec[k].eta_sq + rec[k].osc_sq;
        const double qk1 = (1 - delta) * rec[k + 1].error_sq + beta * rec[k + 1].eta_sq + rec[k + 1].osc_sq;
        if (qk > 0) worst = std::max(worst, qk1 / qk);
    }
    out.gamma_q_plus_osc = worst;
    return out;
}

void ConvergenceHistory::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "k,cells,dofs_sigma,dofs_u,error_sq,E_sq,eta_sq,osc_sq,osc_hat_sq,marked,q\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", r.k,
                      r.cells, r.dofs_sigma, r.dofs_u, r.error_sq, r.E_sq, r.eta_sq, r.osc_sq,
                      r.osc_hat_sq, r.marked, r.q);
        out << buf;
    }
}

ConvergenceHistory ConvergenceHistory::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read history file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("k,cells,", 0) != 0)
        throw std::invalid_argument("not a history CSV: " + path);
    ConvergenceHistory h;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        HistoryRecord r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        if (!(ss >> r.k >> r.cells >> r.dofs_sigma >> r.dofs_u >> r.error_sq >> r.E_sq >> r.eta_sq >>
              r.osc_sq >> r.osc_hat_sq >> r.marked >> r.q))
            throw std::invalid_argument("malformed history row in " + path);
        h.records.push_back(r);
    }
    if (h.records.empty()) throw std::invalid_argument("history file has no records: " + path);
    return h;
}

// --- verification --------------------------------------------------------------

void VerifyOutcome::check(bool ok, const std::string& name) {
    report[name + ".ok"] = ok ? 1.0 : 0.0;
    if (!ok && pass) {
        pass = false;
        first_failure = name;
    }
}

RunMatrix build_run_matrix(const Mesh& mesh0, const ScalarOnMesh& f, int levels, int ref_extra) {
    if (levels < 2) throw std::invalid_argument("run matrix needs at least 2 levels");
    std::vector<Mesh> meshes{mesh0};
    for (int l = 1; l < levels; ++l) meshes.push_back(uniform_refine(meshes.back(), 2));
    std::vector<DeRhamComplex> complexes;
    for (const auto& m : meshes) complexes.push_back(DeRhamComplex::build(m));

    std::vector<NestedPair> pairs;
    for (int l = 0; l + 1 < levels; ++l)
        pairs.push_back({complexes[l], complexes[l + 1],
                         solve_with_data_variants(complexes[l + 1], complexes[l], f)});
    DeRhamComplex ref = DeRhamComplex::build(uniform_refine(meshes.back(), 2 * ref_extra));
    MixedSolution ref_solution = solve_mixed(ref, f);
    return {std::move(pairs), std::move(ref), std::move(ref_solution)};
}

namespace {

double sq(double x) { return x * x; }

/// ||sigma_ref - lift(fun)||^2 on the reference complex.
double ref_error_sq(const RunMatrix& m, const FeFunction& fun, const DeRhamComplex& from) {
    const double e = diff_norm(fun, from, m.ref_solution.sigma, m.ref);
    return e * e;
}

}  // namespace

VerifyOutcome verify_quasi_orthogonality(const RunMatrix& m, double delta) {
    VerifyOutcome out;
    double c0_cal = 0;
    for (size_t j = 0; j < m.pairs.size(); ++j) {
        const auto& p = m.pairs[j];
        const std::string tag = "quasi.pair" + std::to_string(j);

        // normalized cross inner product <sigma_ref - sigma_h, sigma_tilde - sigma_H>
        FeFunction a = prolong(p.solves.fine.sigma, p.fine, m.ref);
        a.coeffs = m.ref_solution.sigma.coeffs - a.coeffs;
        FeFunction d_fine = p.solves.fine_coarse.sigma;
        d_fine.coeffs -= prolong(p.solves.coarse.sigma, p.coarse, p.fine).coeffs;
        const FeFunction b = prolong(d_fine, p.fine, m.ref);
        const double na = m.ref.norm(a), nb = m.ref.norm(b);
        const double scale = m.ref.norm(m.ref_solution.sigma);
        double nip = 0;
        if (na > 1e-14 * scale && nb > 1e-14 * scale)
            nip = std::abs(m.ref.inner(a, b)) / (na * nb);
        out.report[tag + ".normalized_inner_product"] = nip;
        out.check(nip <= 0.05, tag + ".orthogonality");

        // quasi-orthogonality inequality at the given delta
        const double e_h = sq(na);
        const double e_H = ref_error_sq(m, p.solves.coarse.sigma, p.coarse);
        const double d_hH = sq(diff_norm(p.solves.coarse.sigma, p.coarse, p.solves.fine.sigma, p.fine));
        const double osc2 = sq(oscillation_on_coarse(p.solves.fine.f_h, p.fine, p.coarse));
        const double slack = (1 - delta) * e_h - (e_H - d_hH);
        const double required_c0 = (osc2 > 1e-300) ? std::max(0.0, delta * slack / osc2) : 0.0;
        out.report[tag + ".required_C0"] = required_c0;
        if (j == 0) {
            c0_cal = std::max(required_c0, 1e-6);
            out.report["quasi.C0_calibrated"] = c0_cal;
        } else {
            const bool holds = (1 - delta) * e_h <= e_H - d_hH + (c0_cal / delta) * osc2 + 1e-12 * e_h + 1e-300;
            out.check(holds, tag + ".inequality");
        }
    }
    return out;
}

VerifyOutcome verify_discrete_stability(const RunMatrix& m) {
    VerifyOutcome out;
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0;
    double umax_all = 0, umin_all = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < m.pairs.size(); ++j) {
        const auto& p = m.pairs[j];
        const std::string tag = "stability.pair" + std::to_string(j);

        FeFunction d = p.solves.fine.sigma;
        d.coeffs -= p.solves.fine_coarse.sigma.coeffs;
        const double s = p.fine.norm(d);
        const double osc = oscillation_on_coarse(p.solves.fine.f_h, p.fine, p.coarse);
        // exact-data case: both sides vanish to solver precision, report 0
        const bool degenerate = s <= 1e-10 * std::max(1.0, p.fine.norm(p.solves.fine.sigma));
        const double ratio = degenerate ? 0.0 : s / osc;
        out.report[tag + ".ratio"] = ratio;
        if (!degenerate) {
            rmin = std::min(rmin, ratio);
            rmax = std::max(rmax, ratio);
        }

        // per-coarse-element audit of ||u_h - I_H u_h||_T <= sqrt(C0) h_T ||sigma_h||_T
        const Mesh& mf = p.fine.mesh();
        const Mesh& mc = p.coarse.mesh();
        const FeFunction iH = canonical_interp_top(p.solves.fine.u, p.fine, p.coarse);
        Eigen::VectorXd unum = Eigen::VectorXd::Zero(mc.triangle_count());
        Eigen::VectorXd sden = Eigen::VectorXd::Zero(mc.triangle_count());
        const auto& quad = tri_quadrature();
        for (int t = 0; t < mf.triangle_count(); ++t) {
            const int anc = mf.ancestor_in(mc, t);
            unum[anc] += mf.area(t) * sq(p.solves.fine.u.coeffs[t] - iH.coeffs[anc]);
            const auto& tv = mf.tri(t).v;
            const Vec2 p0 = mf.vertex(tv[0]), p1 = mf.vertex(tv[1]), p2 = mf.vertex(tv[2]);
            double acc = 0;
            for (int q = 0; q < quad.npoints; ++q) {
                const Vec2 v = p.fine.eval_rt(p.solves.fine.sigma, t, quad.point(q, p0, p1, p2));
                acc += quad.weights[q] * dot(v, v);
            }
            sden[anc] += mf.area(t) * acc;
        }
        double umax = 0;
        for (int T = 0; T < mc.triangle_count(); ++T) {
            const double den = mc.element_size(T) * std::sqrt(sden[T]);
            if (den > 1e-300) umax = std::max(umax, std::sqrt(unum[T]) / den);
        }
        out.report[tag + ".u_interp_max_ratio"] = umax;
        // vacuous when u_h is already coarse-resolved on every element
        if (umax > 1e-10) {
            umax_all = std::max(umax_all, umax);
            umin_all = std::min(umin_all, umax);
        }
    }
    out.report["stability.ratio_drift"] = (rmin < rmax && rmin > 0) ? rmax / rmin : 1.0;
    out.check(!(rmin < std::numeric_limits<double>::infinity()) || rmax <= 2.0 * rmin,
              "stability.drift_le_2");
    out.report["stability.u_interp_drift"] = (umin_all > 0) ? umax_all / umin_all : 1.0;
    out.check(umin_all <= 0 || umax_all <= 4.0 * umin_all, "stability.u_interp_bounded");
    return out;
}

VerifyOutcome verify_upper_bounds(const RunMatrix& m, const ScalarOnMesh& f) {
    VerifyOutcome out;
    double disc_min = std::numeric_limits<double>::infinity(), disc_max = 0;
    double c1_cal = 0;
    for (size_t j = 0; j < m.pairs.size(); ++j) {
        const auto& p = m.pairs[j];
        const std::string tag = "bounds.pair" + std::to_string(j);

        const ErrorIndicators ind_H = estimate(p.coarse, p.solves.coarse, f);
        const double eta2 = eta_total_sq(ind_H);
        const double d_hH = sq(diff_norm(p.solves.coarse.sigma, p.coarse, p.solves.fine.sigma, p.fine));
        const double disc = d_hH / eta2;
        out.report[tag + ".discrete_ratio"] = disc;
        disc_min = std::min(disc_min, disc);
        disc_max = std::max(disc_max, disc);

        const double e_H = ref_error_sq(m, p.solves.coarse.sigma, p.coarse);
        const double cont = e_H / eta2;
        out.report[tag + ".continuous_ratio"] = cont;
        if (j == 0) {
            c1_cal = cont;
            out.report["bounds.C1_calibrated"] = c1_cal;
        } else {
            out.check(cont <= 1.1 * c1_cal, tag + ".continuous_within_margin");
        }

        // continuous stability: reference solves with data f versus data P_h f
        const MixedSolution tilde_ref =
            solve_mixed(m.ref, prolong(p.solves.fine.f_h, p.fine, m.ref));
        FeFunction dref = m.ref_solution.sigma;
        dref.coeffs -= tilde_ref.sigma.coeffs;
        const double osc_fine = oscillation(p.fine, f);
        out.report[tag + ".projected_data_ratio"] =
            (osc_fine > 1e-300) ? m.ref.norm(dref) / osc_fine : 0.0;

        // efficiency (lower bound) constant
        const double osc_H = oscillation(p.coarse, f);
        out.report[tag + ".efficiency_ratio"] = eta2 / (e_H + sq(osc_H) + 1e-300);

        // discrete efficiency of the difference field (jump and corot terms)
        FeFunction diff = p.solves.fine.sigma;
        diff.coeffs -= prolong(p.solves.coarse.sigma, p.coarse, p.fine).coeffs;
        const ErrorIndicators ind_diff =
            estimate_field(p.fine, diff, from_xy([](double, double) { return 0.0; }));
        const double lhs = ind_diff.jump.sum() + ind_diff.corot.sum();
        out.report[tag + ".difference_field_ratio"] = (d_hH > 1e-300) ? lhs / d_hH : 0.0;
    }
    out.report["bounds.discrete_drift"] = (disc_min > 0) ? disc_max / disc_min : 1.0;
    out.check(disc_min <= 0 || disc_max <= 4.0 * disc_min, "bounds.discrete_drift_le_4");
    return out;
}

VerifyOutcome verify_estimator_continuity(const RunMatrix& m, const ScalarOnMesh& f) {
    VerifyOutcome out;
    double beta_cal = -1;
    double bmin = std::numeric_limits<double>::infinity(), bmax = 0;
    for (size_t j = 0; j < m.pairs.size(); ++j) {
        const auto& p = m.pairs[j];
        const std::string tag = "continuity.pair" + std::to_string(j);

        const double eta_h = eta_total_sq(estimate_field(p.fine, p.solves.fine.sigma, f));
        const FeFunction lifted = prolong(p.solves.coarse.sigma, p.coarse, p.fine);
        const double eta_H_on_fine = eta_total_sq(estimate_field(p.fine, lifted, f));
        const double diff = eta_h - eta_H_on_fine;
        const double d_hH = sq(diff_norm(p.solves.coarse.sigma, p.coarse, p.solves.fine.sigma, p.fine));
        const double rhs = d_hH + sq(oscillation_on_coarse(p.solves.fine.f_h, p.fine, p.coarse));
        out.report[tag + ".eta_diff"] = diff;
        out.report[tag + ".rhs"] = rhs;
        if (diff > 1e-300) {
            const double beta_max = rhs / diff;
            out.report[tag + ".beta_admissible"] = beta_max;
            bmin = std::min(bmin, beta_max);
            bmax = std::max(bmax, beta_max);
            if (beta_cal < 0) {
                beta_cal = beta_max;
                out.report["continuity.beta_calibrated"] = beta_cal;
            } else {
                out.check(beta_cal * diff <= rhs * (1 + 1e-12), tag + ".inequality");
            }
        }
    }
    if (bmin < bmax) {
        out.report["continuity.beta_drift"] = bmax / bmin;
        out.check(bmax <= 2.0 * bmin, "continuity.beta_drift_le_2");
    } else {
        out.report["continuity.beta_drift"] = 1.0;
    }
    return out;
}

VerifyOutcome verify_harmonics() {
    VerifyOutcome out;
    const struct {
        Domain d;
        const char* name;
        int betti;
    } cases[] = {{Domain::square, "square", 0},
                 {Domain::square_one_hole, "one_hole", 1},
                 {Domain::square_two_holes, "two_holes", 2}};
    for (const auto& c : cases) {
        const DeRhamComplex cx = DeRhamComplex::build(Mesh::builtin(c.d));
        const int dim = harmonic_basis(cx).dim();
        out.report[std::string("harmonics.dim_") + c.name] = dim;
        out.check(dim == c.betti, std::string("harmonics.betti_") + c.name);
    }

    // nested-mesh harmonic gap on the one-hole domain
    const Mesh mH = uniform_refine(Mesh::builtin(Domain::square_one_hole), 1);
    const Mesh mh = uniform_refine(mH, 2);
    const DeRhamComplex cH = DeRhamComplex::build(mH);
    const DeRhamComplex ch = DeRhamComplex::build(mh);
    const SubspaceBasis bH = harmonic_basis(cH);
    const SubspaceBasis bh = harmonic_basis(ch);
    out.check(bH.dim() == bh.dim(), "harmonics.dim_refinement_invariant");
    const SubspaceBasis bH_on_h = prolong_basis(bH, cH, ch);
    const double g1 = subspace_gap(ch, bh, bH_on_h);
    const double g2 = subspace_gap(ch, bH_on_h, bh);
    out.report["harmonics.gap"] = g1;
    out.report["harmonics.gap_symmetry"] = std::abs(g1 - g2);
    out.check(std::abs(g1 - g2) <= 1e-8, "harmonics.gap_symmetric");
    out.check(g1 <= 0.9, "harmonics.gap_below_0p9");

    // Hodge decomposition identities on random one-forms
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd x(ch.dof_count(1));
        for (int i = 0; i < x.size(); ++i) x[i] = gauss(rng);
        const FeFunction xf{1, x, ch.stamp()};
        const HodgeParts parts = hodge_decompose(ch, xf);
        const double nx = ch.norm(xf);
        FeFunction recon = parts.exact;
        recon.coeffs += parts.harmonic.coeffs + parts.coexact_perp.coeffs - x;
        out.check(ch.norm(recon) <= 1e-10 * nx, "harmonics.decompose_reconstructs");
        const double pyth = std::abs(sq(nx) - sq(ch.norm(parts.exact)) - sq(ch.norm(parts.harmonic)) -
                                     sq(ch.norm(parts.coexact_perp)));
        out.check(pyth <= 1e-10 * sq(nx), "harmonics.decompose_pythagoras");
        out.check(std::abs(ch.inner(parts.exact, parts.harmonic)) <= 1e-10 * sq(nx) &&
                      std::abs(ch.inner(parts.exact, parts.coexact_perp)) <= 1e-10 * sq(nx) &&
                      std::abs(ch.inner(parts.harmonic, parts.coexact_perp)) <= 1e-10 * sq(nx),
                  "harmonics.decompose_orthogonal");
    }

    // Poincare constant stabilizes under refinement (degree 0, unit square)
    Mesh sq_mesh = Mesh::builtin(Domain::square);
    std::vector<double> cps;
    for (int l = 0; l < 4; ++l) {
        if (l > 0) sq_mesh = uniform_refine(sq_mesh, 2);
        cps.push_back(poincare_constant(DeRhamComplex::build(sq_mesh), 0));
    }
    out.report["harmonics.poincare_L2"] = cps[2];
    out.report["harmonics.poincare_L3"] = cps[3];
    out.check(std::abs(cps[3] - cps[2]) <= 0.05 * cps[3], "harmonics.poincare_stable");
    return out;
}

VerifyOutcome verify_marking(unsigned seed) {
    VerifyOutcome out;
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> size_dist(1, 12);
    std::uniform_real_distribution<double> val(0.0, 1.0);
    const double thetas[] = {0.3, 0.5, 0.9};

    int worst_mismatch = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = size_dist(rng);
        Eigen::VectorXd eta(n);
        for (int i = 0; i < n; ++i) eta[i] = val(rng);
        for (double theta : thetas) {
            const MarkedSet marked = dorfler_mark(eta, theta);
            double sum = 0;
            for (int id : marked) sum += eta[id];
            const double total = eta.sum();
            if (sum < theta * total - 1e-12 * total) worst_mismatch++;

            // brute force: smallest subset cardinality meeting the threshold
            int best = n + 1;
            for (int mask = 0; mask < (1 << n); ++mask) {
                double s = 0;
                int count = 0;
                for (int i = 0; i < n; ++i)
                    if (mask & (1 << i)) {
                        s += eta[i];
                        count++;
                    }
                if (s >= theta * total - 1e-12 * total) best = std::min(best, count);
            }
            if (static_cast<int>(marked.size()) != best) worst_mismatch++;
        }
        // monotonicity in theta
        const size_t c1 = dorfler_mark(eta, 0.3).size();
        const size_t c2 = dorfler_mark(eta, 0.6).size();
        const size_t c3 = dorfler_mark(eta, 1.0).size();
        if (!(c1 <= c2 && c2 <= c3)) worst_mismatch++;
    }
    out.report["marking.mismatches"] = worst_mismatch;
    out.check(worst_mismatch == 0, "marking.brute_force_minimality");
    return out;
}

}  // namespace feec
