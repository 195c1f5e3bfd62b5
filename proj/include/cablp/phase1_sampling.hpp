#pragma once

#include "cablp/reward_env.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cablp {

/// Phase-1 sampling parameters.
struct SamplingPlan {
    int m_x = 1;         // base points on the sphere
    int m_phi = 1;       // directions per base point
    double epsilon = 0;  // finite-difference step
    int n_resample = 1;  // repeats averaged per sampling point

    /// Throws ConfigError unless the plan is usable in dimension d with
    /// domain slack nu (x + eps*phi must stay inside B_d(1+nu)).
    void validate(int d, double nu) const;
    std::uint64_t budget() const;
};

/// The point set X and the Bernoulli direction set Phi.
///
/// Directions are stored as an m_phi x (d*m_x) matrix whose row i is the
/// column-major vectorization of Phi_i = [phi_{i,1} ... phi_{i,m_x}]; the
/// measurement operator is then a plain matrix-vector product.
class SamplingSets {
public:
    SamplingSets(MatrixXd points, MatrixXd directions);

    int d() const { return static_cast<int>(points_.rows()); }
    int m_x() const { return static_cast<int>(points_.cols()); }
    int m_phi() const { return static_cast<int>(directions_.rows()); }

    const MatrixXd& points() const { return points_; }
    VectorXd point(int j) const { return points_.col(j); }
    /// phi_{i,j}
    VectorXd direction(int i, int j) const;
    /// Phi_i as a d x m_x matrix.
    MatrixXd measurement_matrix(int i) const;
    const MatrixXd& direction_matrix() const { return directions_; }

private:
    MatrixXd points_;     // d x m_x, unit columns
    MatrixXd directions_; // m_phi x (d*m_x), entries +-1/sqrt(m_phi)
};

SamplingSets draw_sampling_sets(const SamplingPlan& plan, int d, std::mt19937_64& rng);

struct MeasurementBundle {
    VectorXd y;                 // m_phi
    SamplingPlan plan;
    std::uint64_t seed = 0;     // seed the sampling sets were drawn from
    std::uint64_t budget_used = 0;
    VectorXd averaged_base;     // m_x
    MatrixXd averaged_shifted;  // m_phi x m_x, entry (i,j) at x_j + eps*phi_{i,j}
    std::vector<double> raw_rewards; // every observed reward, in query order
};

/// Queries every base point, then every shifted point grouped by direction
/// index i, each n_resample times in a row, and assembles
///   y_i = (1/eps) sum_j (rbar(x_j + eps phi_{i,j}) - rbar(x_j))
/// from the averaged rewards. Domain and budget are checked before the
/// first query.
MeasurementBundle collect_measurements(Environment& env, const SamplingSets& sets,
                                       const SamplingPlan& plan);

/// Strategy played at Phase-1 slot (j, i); i = -1 is the base point x_j.
VectorXd sampling_point(const SamplingSets& sets, double epsilon, int j, int i);

/// Phi(X)_i = <Phi_i, X> = Tr(Phi_i^T X).
VectorXd apply_operator(const SamplingSets& sets, const MatrixXd& x);

/// Phi^*(v) = sum_i v_i Phi_i.
MatrixXd apply_adjoint(const SamplingSets& sets, const VectorXd& v);

/// Extremes of |Phi(X)|^2 / |X|_F^2 over random rank-k X.
std::pair<double, double> rip_ratio_sample(const SamplingSets& sets, int k, int trials,
                                           std::mt19937_64& rng);

} // namespace cablp
