#pragma once

#include "cablp/phase1_sampling.hpp"
#include "cablp/reward_env.hpp"

#include <optional>

namespace cablp {

/// Inputs of the constraint level lambda bounding |Phi^*(H)| + |Phi^*(N)|.
struct LambdaInputs {
    double c2 = 1.0;
    double epsilon = 0.0;
    int d = 1;
    int m_x = 1;
    int m_phi = 1;
    int k = 1;
    double sigma_eff = 0.0; // sigma / sqrt(N)
    double delta = 0.25;
    double gamma = 3.2;
};

struct LambdaTerms {
    double curvature = 0.0;  // (1+delta)^{1/2} C2 eps d m_x k^2 / (2 sqrt(m_phi))
    double stochastic = 0.0; // (1+delta)^{1/2} 4 gamma sigma sqrt(m_x m_phi m) / eps
    double lambda = 0.0;     // curvature + stochastic
    /// Same bound keeping the two noise pieces separate:
    /// (1+delta)^{1/2} 2 gamma sigma (sqrt(m_phi m_x m) + sqrt(m_x m)) / eps.
    double stochastic_two_term = 0.0;
    double lambda_two_term = 0.0;
};

LambdaTerms lambda_terms(const LambdaInputs& in);
double compute_lambda(const LambdaInputs& in);

/// Bound on |X_DS^(k) - X|_F:
/// (C0 k)^{1/2} (C2 eps d m_x k^2 / sqrt(m_phi) + 8 gamma sigma sqrt(m_x m_phi m) / eps) (1+delta)^{1/2}.
double dantzig_error_bound(const LambdaInputs& in, double c0);

struct DantzigProblem {
    const SamplingSets* sets = nullptr;
    VectorXd y;
    double lambda = 0.0;
    int k = 1;

    void validate() const;
};

struct SolverSettings {
    int max_iters = 5000;          // per subproblem
    double rel_tol = 1e-7;         // final subproblem
    double stage_rel_tol = 1e-4;   // intermediate continuation stages
    double feas_tol = 1e-6;        // relative slack on the operator-norm constraint
    double continuation = 0.5;     // penalty shrink factor between stages
    int power_iters = 50;
    double power_tol = 1e-8;
};

struct DantzigSolution {
    MatrixXd m;
    double residual_norm = 0.0; // |Phi^*(y - Phi(M))|
    int iterations = 0;
    int stages = 0;
    bool converged = false;
};

/// Largest singular value by power iteration on M^T M.
double operator_norm(const MatrixXd& m, int max_iters = 50, double tol = 1e-8);

/// Singular-value soft-thresholding: prox of threshold * |.|_*.
MatrixXd singular_value_threshold(const MatrixXd& m, double threshold);

/// Matrix Dantzig selector  min |M|_*  s.t.  |Phi^*(y - Phi(M))| <= lambda.
///
/// Solved as a continuation over the penalty weight tau of
///   min 1/2 |y - Phi(M)|^2 + tau |M|_*
/// (accelerated proximal gradient with adaptive restart), shrinking tau from
/// |Phi^*(y)| until the operator-norm constraint holds. A stationary point of
/// the penalized problem satisfies |Phi^*(y - Phi(M))| <= tau, so the schedule
/// ends at tau = lambda.
DantzigSolution solve_dantzig(const DantzigProblem& problem, const SolverSettings& cfg = {});

/// Best rank-k approximation in Frobenius norm.
MatrixXd truncate_rank_k(const MatrixXd& x, int k);

/// Top-k left singular vectors as the rows of a k x d row-orthonormal
/// matrix. Throws RankError("degenerate recovery ...") when sigma_k <= 1e-12.
LinearParamMatrix extract_subspace(const MatrixXd& x_k, int k);

/// |A^T A - Ahat^T Ahat|_F.
double subspace_error(const LinearParamMatrix& a, const LinearParamMatrix& a_hat);
double subspace_error(const MatrixXd& a, const MatrixXd& a_hat);

struct RecoveryResult {
    MatrixXd x_hat;
    MatrixXd x_hat_k;
    LinearParamMatrix a_hat;
    VectorXd singular_values; // of x_hat
    double lambda = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::optional<double> subspace_err;
};

/// Dantzig solve, rank-k truncation and subspace extraction in one call.
/// When true_a is supplied the subspace error is filled in.
RecoveryResult recover_subspace(const SamplingSets& sets, const VectorXd& y, double lambda, int k,
                                const SolverSettings& cfg = {},
                                const LinearParamMatrix* true_a = nullptr);

} // namespace cablp
