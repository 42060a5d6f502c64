#pragma once

#include <map>

#include "feec/estimator.hpp"
#include "feec/hodge.hpp"

namespace feec {

/// Minimal-cardinality set M with sum_{T in M} eta_T^2 >= theta * total,
/// selected by descending eta_T^2 with ties broken by ascending element id.
MarkedSet dorfler_mark(const Eigen::VectorXd& eta_sq, double theta);
MarkedSet dorfler_mark(const ErrorIndicators& ind, double theta);

struct HistoryRecord {
    int k = 0;
    int cells = 0;
    int dofs_sigma = 0;
    int dofs_u = 0;
    double error_sq = 0;    // ||sigma_ref - sigma_k||^2 against the surrogate
    double E_sq = 0;        // ||sigma_{k+1} - sigma_k||^2
    double eta_sq = 0;      // eta^2(sigma_k, T_k)
    double osc_sq = 0;      // osc^2(f, T_k)
    double osc_hat_sq = 0;  // osc^2(f_{k+1}, T_k)
    int marked = 0;
    double q = 0;           // (1-delta) error_sq + beta * eta_sq
};

struct ConvergenceHistory {
    std::vector<HistoryRecord> records;
    bool reached_tolerance = false;
    double theta = 0.5, eps = 0, delta = 0.25, beta_q = 1.0;

    void save_csv(const std::string& path) const;
    static ConvergenceHistory load_csv(const std::string& path);
};

struct AmfemParams {
    double theta = 0.5;
    double eps = 1e-3;
    int max_iters = 50;
    double delta = 0.25;  // quasi-error weight used for the q column
    double beta_q = 1.0;
    int ref_depth = 2;    // extra uniform (h-halving) refinements for the surrogate
    bool compute_error = true;
};

struct AmfemResult {
    Mesh mesh;
    MixedSolution solution;
    ConvergenceHistory history;
};

/// Solve -> Estimate -> Mark -> Refine until eta <= eps or the iteration cap.
/// Hitting the cap is a flagged, non-fatal outcome (reached_tolerance false).
AmfemResult amfem(const Mesh& mesh0, const ScalarOnMesh& f, const AmfemParams& params);

struct ApproxResult {
    Mesh mesh;
    int iterations = 0;
    bool reached_tolerance = false;
    double osc = 0;
    int cells_added = 0;
};

/// Greedy data reduction: Dorfler-mark the per-element oscillation with a
/// fixed internal parameter 0.5 and bisect until osc(f, T_H) <= eps.
ApproxResult approx_data(const ScalarOnMesh& f, const Mesh& mesh0, double eps, int max_iters = 50);

enum class RateAxis { dofs, cells };
enum class RateQuantity { error, eta };

/// Least-squares slope of log y against log x over the last max(3, n/2)
/// records; y is the square root of the stored squared column.
double fit_rate(const ConvergenceHistory& history, RateAxis x, RateQuantity y);

struct ContractionReport {
    double delta = 0;
    std::vector<std::pair<double, double>> gamma_per_beta;  // (beta, max step ratio)
    double best_beta = 0;
    double best_gamma = 0;
    bool contracting = false;
    double lambda_min = 0, lambda_max = 0;  // implied marking constant per step
    double gamma_q_plus_osc = 0;            // ratio of q_k + o_k at the best beta
};

/// Quasi-error contraction audit: for each beta computes q_k = (1-delta) e_k +
/// beta eta_k and the max step ratio q_{k+1}/q_k with the first iteration
/// discarded. Requires error_sq populated (>= 4 iterations).
ContractionReport contraction_report(const ConvergenceHistory& history, double delta,
                                     const std::vector<double>& beta_grid);

// --- verification machinery ---------------------------------------------------

/// One coarse/fine level pair with the three standard solves.
struct NestedPair {
    DeRhamComplex coarse, fine;
    DataVariantSolves solves;
};

/// Ladder of uniformly refined levels, consecutive pairs, and a surrogate
/// reference solution two extra uniform refinements past the finest level.
struct RunMatrix {
    std::vector<NestedPair> pairs;
    DeRhamComplex ref;
    MixedSolution ref_solution;
};

RunMatrix build_run_matrix(const Mesh& mesh0, const ScalarOnMesh& f, int levels = 5,
                           int ref_extra = 2);

/// Flat name -> value report; booleans are stored as 0/1.
using Report = std::map<std::string, double>;

struct VerifyOutcome {
    bool pass = true;
    std::string first_failure;
    Report report;

    void check(bool ok, const std::string& name);
};

VerifyOutcome verify_quasi_orthogonality(const RunMatrix& m, double delta = 0.5);
VerifyOutcome verify_discrete_stability(const RunMatrix& m);
VerifyOutcome verify_upper_bounds(const RunMatrix& m, const ScalarOnMesh& f);
VerifyOutcome verify_estimator_continuity(const RunMatrix& m, const ScalarOnMesh& f);
VerifyOutcome verify_harmonics();
VerifyOutcome verify_marking(unsigned seed = 20240817u);

}  // namespace feec
