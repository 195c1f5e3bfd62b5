#include "cablp/phase1_sampling.hpp"

#include "cablp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cablp {

void SamplingPlan::validate(int d, double nu) const {
    if (m_x < 1) throw ConfigError("m_x must be >= 1");
    if (m_phi < 1) throw ConfigError("m_phi must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (n_resample < 1) throw ConfigError("resampling factor N must be >= 1");
    const double reach = epsilon * std::sqrt(static_cast<double>(d) / m_phi);
    if (reach > nu + Environment::domain_tol) {
        std::ostringstream os;
        os << "step-size infeasible: epsilon*sqrt(d/m_phi) = " << reach << " exceeds nu = " << nu;
        throw DomainError(os.str());
    }
}

std::uint64_t SamplingPlan::budget() const {
    return static_cast<std::uint64_t>(n_resample) * static_cast<std::uint64_t>(m_x) *
           (static_cast<std::uint64_t>(m_phi) + 1);
}

SamplingSets::SamplingSets(MatrixXd points, MatrixXd directions)
    : points_(std::move(points)), directions_(std::move(directions)) {
    if (directions_.cols() != points_.rows() * points_.cols())
        throw ShapeError("direction matrix must have d*m_x columns");
}

VectorXd SamplingSets::direction(int i, int j) const {
    const int dd = d();
    return directions_.row(i).segment(static_cast<Eigen::Index>(j) * dd, dd).transpose();
}

MatrixXd SamplingSets::measurement_matrix(int i) const {
    return directions_.row(i).transpose().reshaped(d(), m_x());
}

SamplingSets draw_sampling_sets(const SamplingPlan& plan, int d, std::mt19937_64& rng) {
    if (d < 1) throw ConfigError("dimension must be >= 1");
    if (plan.m_x < 1 || plan.m_phi < 1) throw ConfigError("m_x and m_phi must be >= 1");

    MatrixXd points(d, plan.m_x);
    for (int j = 0; j < plan.m_x; ++j) points.col(j) = uniform_on_sphere(d, rng);

    const double entry = 1.0 / std::sqrt(static_cast<double>(plan.m_phi));
    MatrixXd dirs(plan.m_phi, static_cast<Eigen::Index>(d) * plan.m_x);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < plan.m_phi; ++i)
        for (Eigen::Index c = 0; c < dirs.cols(); ++c) dirs(i, c) = coin(rng) ? entry : -entry;
    return SamplingSets(std::move(points), std::move(dirs));
}

VectorXd sampling_point(const SamplingSets& sets, double epsilon, int j, int i) {
    if (i < 0) return sets.point(j);
    return sets.point(j) + epsilon * sets.direction(i, j);
}

MeasurementBundle collect_measurements(Environment& env, const SamplingSets& sets,
                                       const SamplingPlan& plan) {
    if (sets.d() != env.d()) throw ShapeError("sampling sets dimension differs from environment");
    if (sets.m_x() != plan.m_x || sets.m_phi() != plan.m_phi)
        throw ShapeError("sampling sets do not match the plan");
    plan.validate(env.d(), env.nu());

    const int mx = plan.m_x;
    const int mphi = plan.m_phi;
    for (int i = 0; i < mphi; ++i)
        for (int j = 0; j < mx; ++j) env.check_domain(sampling_point(sets, plan.epsilon, j, i));
    if (env.remaining_budget() < plan.budget()) throw BudgetError("insufficient budget for Phase 1");

    MeasurementBundle out;
    out.raw_rewards.reserve(plan.budget());
    auto averaged = [&](const VectorXd& x) {
        double sum = 0.0;
        for (int r = 0; r < plan.n_resample; ++r) {
            const double reward = env.sample_reward(x);
            out.raw_rewards.push_back(reward);
            sum += reward;
        }
        return sum / plan.n_resample;
    };

    out.plan = plan;
    out.averaged_base.resize(mx);
    out.averaged_shifted.resize(mphi, mx);
    const std::uint64_t start = env.query_count();

    for (int j = 0; j < mx; ++j) out.averaged_base(j) = averaged(sets.point(j));
    for (int i = 0; i < mphi; ++i)
        for (int j = 0; j < mx; ++j)
            out.averaged_shifted(i, j) = averaged(sampling_point(sets, plan.epsilon, j, i));

    out.y = (out.averaged_shifted.rowwise() - out.averaged_base.transpose()).rowwise().sum() /
            plan.epsilon;
    out.budget_used = env.query_count() - start;
    return out;
}

VectorXd apply_operator(const SamplingSets& sets, const MatrixXd& x) {
    if (x.rows() != sets.d() || x.cols() != sets.m_x()) throw ShapeError("X must be d x m_x");
    return sets.direction_matrix() * x.reshaped();
}

MatrixXd apply_adjoint(const SamplingSets& sets, const VectorXd& v) {
    if (v.size() != sets.m_phi()) throw ShapeError("v must have length m_phi");
    VectorXd flat = sets.direction_matrix().transpose() * v;
    return flat.reshaped(sets.d(), sets.m_x());
}

std::pair<double, double> rip_ratio_sample(const SamplingSets& sets, int k, int trials,
                                           std::mt19937_64& rng) {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    std::normal_distribution<double> normal(0.0, 1.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int t = 0; t < trials; ++t) {
        MatrixXd u(sets.d(), k), v(sets.m_x(), k);
        for (Eigen::Index c = 0; c < u.size(); ++c) u.data()[c] = normal(rng);
        for (Eigen::Index c = 0; c < v.size(); ++c) v.data()[c] = normal(rng);
        MatrixXd x = u * v.transpose();
        x /= x.norm();
        const double ratio = apply_operator(sets, x).squaredNorm() / x.squaredNorm();
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    return {lo, hi};
}

} // namespace cablp
