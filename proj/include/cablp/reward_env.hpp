#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace cablp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Family { linear, centered_quadratic, norm_squared, gaussian_bump };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

struct OptimumPoint {
    VectorXd argmax; // in B_k(1+nu)
    double value = 0.0;
};

/// Link function g on R^k together with its declared smoothness constant.
///
/// Families:
///   linear              g(u) = w.u                  (weights, default e_1)
///   centered_quadratic  g(u) = 1 - |u - c|^2        (center)
///   norm_squared        g(u) = |u|^2
///   gaussian_bump       g(u) = exp(-|u - c|^2 / 2s^2) (center, width)
///
/// C2 bounds |g|, every first partial and every second partial on
/// B_k(1+nu); it is declared in closed form per family.
class MeanRewardSpec {
public:
    static MeanRewardSpec linear(VectorXd weights);
    static MeanRewardSpec centered_quadratic(VectorXd center);
    static MeanRewardSpec norm_squared(int k);
    static MeanRewardSpec gaussian_bump(VectorXd center, double width);

    Family family() const { return family_; }
    int k() const { return k_; }
    const VectorXd& center() const { return center_; }
    const VectorXd& weights() const { return weights_; }
    double width() const { return width_; }

    double value(const Eigen::Ref<const VectorXd>& u) const;
    VectorXd gradient(const Eigen::Ref<const VectorXd>& u) const;
    MatrixXd hessian(const Eigen::Ref<const VectorXd>& u) const;

    double smoothness_constant(double nu) const;
    std::optional<OptimumPoint> closed_form_optimum(double nu) const;

private:
    MeanRewardSpec(Family f, int k) : family_(f), k_(k) {}

    Family family_;
    int k_;
    VectorXd center_;
    VectorXd weights_;
    double width_ = 1.0;
};

/// k x d matrix with orthonormal rows.
class LinearParamMatrix {
public:
    LinearParamMatrix() = default;

    /// Wraps a matrix that is already row-orthonormal; throws otherwise.
    static LinearParamMatrix from_orthonormal(MatrixXd a, double tol = 1e-10);

    const MatrixXd& matrix() const { return a_; }
    int k() const { return static_cast<int>(a_.rows()); }
    int d() const { return static_cast<int>(a_.cols()); }
    MatrixXd projector() const { return a_.transpose() * a_; }

private:
    explicit LinearParamMatrix(MatrixXd a) : a_(std::move(a)) {}
    MatrixXd a_;

    friend LinearParamMatrix make_row_orthonormal(const MatrixXd& m);
};

/// Orthonormalizes the rows of m keeping the row space. Throws RankError
/// ("rank < k") when m is rank deficient.
LinearParamMatrix make_row_orthonormal(const MatrixXd& m);

/// Draws a Haar-like random k x d row-orthonormal matrix.
LinearParamMatrix random_orthonormal(int k, int d, std::mt19937_64& rng);

/// Hidden environment: r_t(x) = g(Ax) + eta_t, eta_t ~ N(0, sigma^2),
/// strategies restricted to B_d(1+nu).
class Environment {
public:
    static constexpr std::uint64_t unlimited = ~std::uint64_t{0};
    /// Slack allowed on |x| <= 1+nu to absorb rounding in embedded arms.
    static constexpr double domain_tol = 1e-9;

    Environment(LinearParamMatrix a, MeanRewardSpec mean, double sigma, double nu,
                std::uint64_t seed);

    const LinearParamMatrix& param_matrix() const { return a_; }
    const MeanRewardSpec& mean_spec() const { return mean_; }
    int d() const { return a_.d(); }
    int k() const { return a_.k(); }
    double sigma() const { return sigma_; }
    double nu() const { return nu_; }
    double radius() const { return 1.0 + nu_; }
    std::uint64_t seed() const { return seed_; }
    double smoothness_constant() const { return mean_.smoothness_constant(nu_); }

    std::uint64_t query_count() const { return query_count_; }
    std::uint64_t query_limit() const { return query_limit_; }
    std::uint64_t remaining_budget() const;
    void set_query_limit(std::uint64_t limit) { query_limit_ = limit; }

    bool in_domain(const VectorXd& x) const;
    /// Throws DomainError if x is not a valid strategy.
    void check_domain(const VectorXd& x) const;

    /// g(Ax); does not consume budget.
    double mean_reward(const VectorXd& x) const;
    /// A^T grad g(Ax).
    VectorXd gradient_mean_reward(const VectorXd& x) const;
    /// A^T hess g(Ax) A.
    MatrixXd hessian_mean_reward(const VectorXd& x) const;

    /// Noisy reward; increments query_count.
    double sample_reward(const VectorXd& x);

private:
    LinearParamMatrix a_;
    MeanRewardSpec mean_;
    double sigma_;
    double nu_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uint64_t query_count_ = 0;
    std::uint64_t query_limit_ = unlimited;
};

/// Exhaustive grid maximization of g over B_k(radius) with the given step.
/// The grid is centred at the origin; closed-form optima are not consulted.
OptimumPoint grid_maximize(const MeanRewardSpec& mean, const MatrixXd& link, double radius,
                           double resolution);

/// max of g(Ax) over B_d(1+nu), i.e. of g over B_k(1+nu).
OptimumPoint optimal_value(const Environment& env, double resolution);

struct ConditioningReport {
    VectorXd singular_values; // top-k, descending
    double alpha_hat = 0.0;
    int n_samples = 0;
};

/// Monte-Carlo estimate of E_x[grad r(x) grad r(x)^T] for x uniform on
/// S^{d-1} (normalized measure). Multiply by the sphere's surface area
/// 2 pi^{d/2} / Gamma(d/2) to obtain the surface-measure integral.
ConditioningReport estimate_conditioning(const Environment& env, int n_samples,
                                         std::uint64_t seed);

/// Surface area of S^{d-1}.
double sphere_surface_area(int d);

/// Uniform point on S^{d-1} by normalizing a Gaussian vector.
VectorXd uniform_on_sphere(int d, std::mt19937_64& rng);

} // namespace cablp
