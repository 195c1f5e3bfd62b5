#include "cablp/reward_env.hpp"

#include "cablp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace cablp {

std::string_view to_string(Family f) {
    switch (f) {
    case Family::linear: return "linear";
    case Family::centered_quadratic: return "centered-quadratic";
    case Family::norm_squared: return "norm-squared";
    case Family::gaussian_bump: return "gaussian-bump";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    if (name == "linear") return Family::linear;
    if (name == "centered-quadratic" || name == "centered_quadratic") return Family::centered_quadratic;
    if (name == "norm-squared" || name == "norm_squared") return Family::norm_squared;
    if (name == "gaussian-bump" || name == "gaussian_bump") return Family::gaussian_bump;
    throw ConfigError("unknown mean-reward family: " + std::string(name));
}

MeanRewardSpec MeanRewardSpec::linear(VectorXd weights) {
    if (weights.size() < 1 || weights.norm() == 0.0)
        throw ConfigError("linear family needs nonzero weights");
    MeanRewardSpec s(Family::linear, static_cast<int>(weights.size()));
    s.weights_ = std::move(weights);
    return s;
}

MeanRewardSpec MeanRewardSpec::centered_quadratic(VectorXd center) {
    if (center.size() < 1) throw ConfigError("centered-quadratic family needs k >= 1");
    MeanRewardSpec s(Family::centered_quadratic, static_cast<int>(center.size()));
    s.center_ = std::move(center);
    return s;
}

MeanRewardSpec MeanRewardSpec::norm_squared(int k) {
    if (k < 1) throw ConfigError("norm-squared family needs k >= 1");
    return MeanRewardSpec(Family::norm_squared, k);
}

MeanRewardSpec MeanRewardSpec::gaussian_bump(VectorXd center, double width) {
    if (center.size() < 1) throw ConfigError("gaussian-bump family needs k >= 1");
    if (!(width > 0.0)) throw ConfigError("gaussian-bump width must be positive");
    MeanRewardSpec s(Family::gaussian_bump, static_cast<int>(center.size()));
    s.center_ = std::move(center);
    s.width_ = width;
    return s;
}

double MeanRewardSpec::value(const Eigen::Ref<const VectorXd>& u) const {
    switch (family_) {
    case Family::linear: return weights_.dot(u);
    case Family::centered_quadratic: return 1.0 - (u - center_).squaredNorm();
    case Family::norm_squared: return u.squaredNorm();
    case Family::gaussian_bump:
        return std::exp(-(u - center_).squaredNorm() / (2.0 * width_ * width_));
    }
    return 0.0;
}

VectorXd MeanRewardSpec::gradient(const Eigen::Ref<const VectorXd>& u) const {
    switch (family_) {
    case Family::linear: return weights_;
    case Family::centered_quadratic: return -2.0 * (u - center_);
    case Family::norm_squared: return 2.0 * u;
    case Family::gaussian_bump: {
        const double s2 = width_ * width_;
        return -(u - center_) / s2 * value(u);
    }
    }
    return VectorXd::Zero(k_);
}

MatrixXd MeanRewardSpec::hessian(const Eigen::Ref<const VectorXd>& u) const {
    switch (family_) {
    case Family::linear: return MatrixXd::Zero(k_, k_);
    case Family::centered_quadratic: return -2.0 * MatrixXd::Identity(k_, k_);
    case Family::norm_squared: return 2.0 * MatrixXd::Identity(k_, k_);
    case Family::gaussian_bump: {
        const double s2 = width_ * width_;
        const VectorXd r = u - center_;
        return (r * r.transpose() / (s2 * s2) - MatrixXd::Identity(k_, k_) / s2) * value(u);
    }
    }
    return MatrixXd::Zero(k_, k_);
}

double MeanRewardSpec::smoothness_constant(double nu) const {
    const double radius = 1.0 + nu;
    switch (family_) {
    case Family::linear:
        return std::max(weights_.norm() * radius, weights_.cwiseAbs().maxCoeff());
    case Family::centered_quadratic: {
        const double reach = radius + center_.norm(); // max |u - c| on the ball
        return std::max({1.0, reach * reach - 1.0, 2.0 * reach, 2.0});
    }
    case Family::norm_squared:
        return std::max({2.0 * radius, 2.0, radius * radius});
    case Family::gaussian_bump: {
        const double s = width_;
        return std::max({1.0, 1.0 / (s * std::sqrt(std::numbers::e)), 1.0 / (s * s)});
    }
    }
    return 1.0;
}

std::optional<OptimumPoint> MeanRewardSpec::closed_form_optimum(double nu) const {
    const double radius = 1.0 + nu;
    OptimumPoint opt;
    switch (family_) {
    case Family::linear:
        opt.argmax = radius * weights_ / weights_.norm();
        opt.value = radius * weights_.norm();
        return opt;
    case Family::norm_squared:
        opt.argmax = VectorXd::Zero(k_);
        opt.argmax(0) = radius;
        opt.value = radius * radius;
        return opt;
    case Family::centered_quadratic:
    case Family::gaussian_bump: {
        const double cn = center_.norm();
        opt.argmax = cn <= radius ? center_ : VectorXd(center_ * (radius / cn));
        opt.value = value(opt.argmax);
        return opt;
    }
    }
    return std::nullopt;
}

LinearParamMatrix LinearParamMatrix::from_orthonormal(MatrixXd a, double tol) {
    const MatrixXd gram = a * a.transpose();
    const MatrixXd eye = MatrixXd::Identity(a.rows(), a.rows());
    if ((gram - eye).cwiseAbs().maxCoeff() > tol)
        throw RankError("matrix rows are not orthonormal");
    return LinearParamMatrix(std::move(a));
}

LinearParamMatrix make_row_orthonormal(const MatrixXd& m) {
    const auto k = m.rows();
    const auto d = m.cols();
    if (k < 1 || k > d) throw RankError("rank < k: need 1 <= k <= d");

    // Thin QR of M^T; the Q factor spans the row space of M.
    Eigen::HouseholderQR<MatrixXd> qr(m.transpose());
    const MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, k);

    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < k; ++i) {
        if (std::abs(r(i, i)) <= 1e-12 * scale * std::sqrt(static_cast<double>(d))) {
            std::ostringstream os;
            os << "rank < k: pivot " << i << " is " << r(i, i);
            throw RankError(os.str());
        }
        if (r(i, i) < 0.0) q.col(i) *= -1.0;
    }
    MatrixXd a = q.transpose();
    // One re-orthogonalization pass keeps A A^T = I to machine precision.
    const MatrixXd gram = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    a = es.operatorInverseSqrt() * a;
    return LinearParamMatrix(std::move(a));
}

LinearParamMatrix random_orthonormal(int k, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        MatrixXd m(k, d);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = normal(rng);
        try {
            return make_row_orthonormal(m);
        } catch (const RankError&) {
            // probability zero; redraw
        }
    }
}

Environment::Environment(LinearParamMatrix a, MeanRewardSpec mean, double sigma, double nu,
                         std::uint64_t seed)
    : a_(std::move(a)), mean_(std::move(mean)), sigma_(sigma), nu_(nu), seed_(seed), rng_(seed) {
    if (a_.k() != mean_.k()) throw ConfigError("parameter matrix rank does not match link dimension k");
    if (!(sigma_ >= 0.0)) throw ConfigError("sigma must be nonnegative");
    if (!(nu_ >= 0.0)) throw ConfigError("nu must be nonnegative");
}

std::uint64_t Environment::remaining_budget() const {
    if (query_limit_ == unlimited) return unlimited;
    return query_limit_ > query_count_ ? query_limit_ - query_count_ : 0;
}

bool Environment::in_domain(const VectorXd& x) const {
    return x.size() == d() && x.norm() <= radius() + domain_tol;
}

void Environment::check_domain(const VectorXd& x) const {
    if (x.size() != d()) throw ShapeError("strategy has wrong dimension");
    if (!in_domain(x)) {
        std::ostringstream os;
        os << "strategy outside B_d(1+nu): |x| = " << x.norm() << " > " << radius();
        throw DomainError(os.str());
    }
}

double Environment::mean_reward(const VectorXd& x) const {
    check_domain(x);
    return mean_.value(a_.matrix() * x);
}

VectorXd Environment::gradient_mean_reward(const VectorXd& x) const {
    check_domain(x);
    return a_.matrix().transpose() * mean_.gradient(a_.matrix() * x);
}

MatrixXd Environment::hessian_mean_reward(const VectorXd& x) const {
    check_domain(x);
    const MatrixXd& a = a_.matrix();
    return a.transpose() * mean_.hessian(a * x) * a;
}

double Environment::sample_reward(const VectorXd& x) {
    const double mean = mean_reward(x);
    if (query_count_ >= query_limit_) throw BudgetError("query limit exhausted");
    ++query_count_;
    if (sigma_ == 0.0) return mean;
    return mean + sigma_ * normal_(rng_);
}

namespace {

// Visits every lattice point c + step * j, j in {-half..half}^k, inside B_k(radius).
template <class Visit>
void for_each_ball_point(const VectorXd& centre, double step, int half, double radius, Visit&& visit) {
    const int k = static_cast<int>(centre.size());
    std::vector<int> idx(k, -half);
    VectorXd y(k);
    for (;;) {
        for (int i = 0; i < k; ++i) y(i) = centre(i) + step * idx[i];
        if (y.norm() <= radius) visit(y);
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == half) {
            idx[pos] = -half;
            --pos;
        }
        if (pos < 0) break;
        ++idx[pos];
    }
}

} // namespace

OptimumPoint grid_maximize(const MeanRewardSpec& mean, const MatrixXd& link, double radius,
                           double resolution) {
    if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
    const int k = mean.k();
    if (link.rows() != k || link.cols() != k) throw ShapeError("link matrix must be k x k");

    OptimumPoint best;
    best.value = -std::numeric_limits<double>::infinity();
    best.argmax = VectorXd::Zero(k);
    VectorXd u(k);
    auto consider = [&](const VectorXd& y) {
        u.noalias() = link * y;
        const double v = mean.value(u);
        if (v > best.value) {
            best.value = v;
            best.argmax = y;
        }
    };

    const int half = static_cast<int>(std::floor(radius / resolution + 1e-9));
    for_each_ball_point(VectorXd::Zero(k), resolution, half, radius, consider);

    // Local zoom around the incumbent; only ever raises the value found.
    double step = resolution;
    for (int level = 0; level < 3; ++level) {
        step /= 10.0;
        const VectorXd centre = best.argmax;
        for_each_ball_point(centre, step, 10, radius, consider);
    }
    return best;
}

OptimumPoint optimal_value(const Environment& env, double resolution) {
    const int k = env.k();
    return grid_maximize(env.mean_spec(), MatrixXd::Identity(k, k), env.radius(), resolution);
}

double sphere_surface_area(int d) {
    const double half = 0.5 * d;
    return 2.0 * std::exp(half * std::log(std::numbers::pi) - std::lgamma(half));
}

VectorXd uniform_on_sphere(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd x(d);
    for (;;) {
        for (int i = 0; i < d; ++i) x(i) = normal(rng);
        const double n = x.norm();
        if (n > 0.0) return x / n;
    }
}

ConditioningReport estimate_conditioning(const Environment& env, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
    const int d = env.d();
    std::mt19937_64 rng(seed);
    MatrixXd h = MatrixXd::Zero(d, d);
    for (int s = 0; s < n_samples; ++s) {
        const VectorXd x = uniform_on_sphere(d, rng);
        const VectorXd g = env.gradient_mean_reward(x);
        h.selfadjointView<Eigen::Lower>().rankUpdate(g);
    }
    h = h.selfadjointView<Eigen::Lower>();
    h /= static_cast<double>(n_samples);

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const VectorXd ev = es.eigenvalues(); // ascending
    ConditioningReport report;
    report.n_samples = n_samples;
    report.singular_values.resize(env.k());
    for (int i = 0; i < env.k(); ++i) report.singular_values(i) = std::max(0.0, ev(d - 1 - i));
    report.alpha_hat = report.singular_values(env.k() - 1);
    return report;
}

} // namespace cablp
