#include "cablp/lowrank_recovery.hpp"

#include "cablp/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cablp {

LambdaTerms lambda_terms(const LambdaInputs& in) {
    const double root = std::sqrt(1.0 + in.delta);
    const double m = std::max(in.d, in.m_x);
    const double k2 = static_cast<double>(in.k) * in.k;
    LambdaTerms t;
    t.curvature = root * in.c2 * in.epsilon * in.d * in.m_x * k2 / (2.0 * std::sqrt(in.m_phi));
    t.stochastic = root * 4.0 * in.gamma * in.sigma_eff *
                   std::sqrt(static_cast<double>(in.m_x) * in.m_phi * m) / in.epsilon;
    t.lambda = t.curvature + t.stochastic;
    t.stochastic_two_term = root * 2.0 * in.gamma * in.sigma_eff *
                            (std::sqrt(static_cast<double>(in.m_phi) * in.m_x * m) +
                             std::sqrt(static_cast<double>(in.m_x) * m)) /
                            in.epsilon;
    t.lambda_two_term = t.curvature + t.stochastic_two_term;
    return t;
}

double compute_lambda(const LambdaInputs& in) { return lambda_terms(in).lambda; }

double dantzig_error_bound(const LambdaInputs& in, double c0) {
    const double m = std::max(in.d, in.m_x);
    const double k2 = static_cast<double>(in.k) * in.k;
    const double inner = in.c2 * in.epsilon * in.d * in.m_x * k2 / std::sqrt(in.m_phi) +
                         8.0 * in.gamma * in.sigma_eff *
                             std::sqrt(static_cast<double>(in.m_x) * in.m_phi * m) / in.epsilon;
    return std::sqrt(c0 * in.k) * inner * std::sqrt(1.0 + in.delta);
}

void DantzigProblem::validate() const {
    if (sets == nullptr) throw ConfigError("Dantzig problem has no measurement operator");
    if (y.size() != sets->m_phi()) throw ShapeError("y must have length m_phi");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (k < 1 || k > std::min(sets->d(), sets->m_x())) throw ConfigError("k out of range");
}

double operator_norm(const MatrixXd& m, int max_iters, double tol) {
    if (m.size() == 0) return 0.0;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd v(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    v.normalize();
    double est = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        VectorXd w = m.transpose() * (m * v);
        const double n = w.norm();
        if (n == 0.0) return 0.0;
        const double next = std::sqrt(n); // |M^T M v| -> sigma_1^2
        v = w / n;
        const bool done = std::abs(next - est) <= tol * next;
        est = next;
        if (done) break;
    }
    return (m * v).norm() > est ? (m * v).norm() : est;
}

MatrixXd singular_value_threshold(const MatrixXd& m, double threshold) {
    Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd s = (svd.singularValues().array() - threshold).cwiseMax(0.0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > 0.0) ++r;
    if (r == 0) return MatrixXd::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(r) * s.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
}

namespace {

struct PenalizedSolve {
    int iterations = 0;
    bool converged = false;
};

double residual_correlation(const SamplingSets& sets, const VectorXd& y, const MatrixXd& m,
                            const SolverSettings& cfg) {
    return operator_norm(apply_adjoint(sets, y - apply_operator(sets, m)), cfg.power_iters,
                         cfg.power_tol);
}

// Accelerated proximal gradient on 1/2|y - Phi(M)|^2 + tau |M|_*, warm-started
// from m. With `lambda` set, the stage only stops once M is also feasible.
PenalizedSolve penalized_solve(const SamplingSets& sets, const VectorXd& y, double tau,
                               double lipschitz, double tol, const SolverSettings& cfg,
                               MatrixXd& m, std::optional<double> lambda) {
    PenalizedSolve out;
    MatrixXd z = m;
    MatrixXd prev = m;
    double t = 1.0;
    const double step = 1.0 / lipschitz;
    for (int it = 0; it < cfg.max_iters; ++it) {
        ++out.iterations;
        const VectorXd resid = y - apply_operator(sets, z);
        const MatrixXd next = singular_value_threshold(z + step * apply_adjoint(sets, resid), tau * step);

        const double change = (next - prev).norm();
        const double scale = std::max(next.norm(), 1e-300);
        // Restart momentum when it points against the proximal step.
        const bool restart = ((z - next).cwiseProduct(next - prev)).sum() > 0.0;
        const double t_next = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = restart ? next : MatrixXd(next + ((t - 1.0) / t_next) * (next - prev));
        t = t_next;
        prev = next;

        if (change <= tol * scale || next.norm() == 0.0) {
            if (!lambda) {
                out.converged = true;
                break;
            }
            const double corr = residual_correlation(sets, y, next, cfg);
            if (corr <= *lambda * (1.0 + cfg.feas_tol)) {
                out.converged = true;
                break;
            }
        }
    }
    m = prev;
    return out;
}

} // namespace

DantzigSolution solve_dantzig(const DantzigProblem& problem, const SolverSettings& cfg) {
    problem.validate();
    const SamplingSets& sets = *problem.sets;
    const double lambda = problem.lambda;

    DantzigSolution sol;
    sol.m = MatrixXd::Zero(sets.d(), sets.m_x());

    const double tau0 = operator_norm(apply_adjoint(sets, problem.y), cfg.power_iters, cfg.power_tol);
    if (tau0 <= lambda) {
        // M = 0 is feasible and has the smallest possible nuclear norm.
        sol.residual_norm = tau0;
        sol.converged = true;
        return sol;
    }

    // |Phi|^2 = largest eigenvalue of D D^T.
    const MatrixXd& dmat = sets.direction_matrix();
    const double lipschitz = std::pow(operator_norm(dmat.transpose(), 200, 1e-12), 2) * 1.01;

    double tau = tau0;
    for (;;) {
        tau = std::max(lambda, tau * cfg.continuation);
        const bool final_stage = tau <= lambda;
        const auto stage = penalized_solve(sets, problem.y, tau, lipschitz,
                                           final_stage ? cfg.rel_tol : cfg.stage_rel_tol, cfg, sol.m,
                                           final_stage ? std::optional<double>(lambda) : std::nullopt);
        sol.iterations += stage.iterations;
        ++sol.stages;
        if (final_stage) {
            sol.converged = stage.converged;
            break;
        }
    }
    sol.residual_norm = residual_correlation(sets, problem.y, sol.m, cfg);
    if (sol.residual_norm > lambda * (1.0 + cfg.feas_tol)) sol.converged = false;
    return sol;
}

MatrixXd truncate_rank_k(const MatrixXd& x, int k) {
    if (k < 0 || k > std::min(x.rows(), x.cols())) throw ShapeError("rank k exceeds matrix dimensions");
    if (k == 0) return MatrixXd::Zero(x.rows(), x.cols());
    Eigen::BDCSVD<MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
           svd.matrixV().leftCols(k).transpose();
}

LinearParamMatrix extract_subspace(const MatrixXd& x_k, int k) {
    if (k < 1 || k > std::min(x_k.rows(), x_k.cols())) throw ShapeError("rank k exceeds matrix dimensions");
    Eigen::BDCSVD<MatrixXd> svd(x_k, Eigen::ComputeThinU);
    const VectorXd& s = svd.singularValues();
    if (!(s(k - 1) > 1e-12)) {
        std::ostringstream os;
        os << "degenerate recovery: sigma_" << k << " = " << s(k - 1) << " (sigma_1 = " << s(0) << ")";
        throw RankError(os.str());
    }
    MatrixXd u = svd.matrixU().leftCols(k);
    for (int c = 0; c < k; ++c) {
        Eigen::Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) u.col(c) *= -1.0;
    }
    return LinearParamMatrix::from_orthonormal(u.transpose(), 1e-8);
}

double subspace_error(const MatrixXd& a, const MatrixXd& a_hat) {
    if (a.rows() != a_hat.rows() || a.cols() != a_hat.cols())
        throw ShapeError("subspace_error: shape mismatch");
    return (a.transpose() * a - a_hat.transpose() * a_hat).norm();
}

double subspace_error(const LinearParamMatrix& a, const LinearParamMatrix& a_hat) {
    return subspace_error(a.matrix(), a_hat.matrix());
}

RecoveryResult recover_subspace(const SamplingSets& sets, const VectorXd& y, double lambda, int k,
                                const SolverSettings& cfg, const LinearParamMatrix* true_a) {
    DantzigProblem problem{&sets, y, lambda, k};
    const DantzigSolution sol = solve_dantzig(problem, cfg);

    RecoveryResult r;
    r.x_hat = sol.m;
    r.lambda = lambda;
    r.residual_norm = sol.residual_norm;
    r.iterations = sol.iterations;
    r.converged = sol.converged;
    r.singular_values = Eigen::BDCSVD<MatrixXd>(sol.m).singularValues();
    r.x_hat_k = truncate_rank_k(sol.m, k);
    r.a_hat = extract_subspace(r.x_hat_k, k);
    if (true_a != nullptr) r.subspace_err = subspace_error(*true_a, r.a_hat);
    return r;
}

} // namespace cablp
