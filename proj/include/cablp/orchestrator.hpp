#pragma once

#include "cablp/bandit_phase2.hpp"
#include "cablp/lowrank_recovery.hpp"
#include "cablp/phase1_sampling.hpp"
#include "cablp/reward_env.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cablp {

enum class FExponentMode { standard, remark };
enum class EpsilonRule { midpoint, geometric };

/// 2 sqrt(log 12) + 0.1
double default_gamma();

/// Free constants of the planner. The defaults are the documented choices
/// for constants that the analysis only bounds or leaves unspecified.
struct TheoryConstants {
    double delta = 0.25; // isometry constant, in (0, sqrt(2)-1)
    double rho = 0.5;    // in (0, 1)
    double p = 0.1;      // failure probability, in (0, 1)
    double c1 = 1.1;     // > 1
    double gamma = default_gamma(); // > 2 sqrt(log 12)
    double c0 = 4.0;
    /// Multiplier on the smallest resampling constant that certifies a
    /// well-posed step-size interval (see resampling_constant_floor).
    double c_prime = 1.0;
    FExponentMode f_mode = FExponentMode::standard;
    EpsilonRule epsilon_rule = EpsilonRule::midpoint;

    void validate() const;
};

struct TheoryInputs {
    double n = 0;
    int d = 1;
    int k = 1;
    double sigma = 0;
    double c2 = 1;
    double alpha = 0;
    double nu = 0;
};

/// q(delta) = (delta^2 - delta^3/9) / 144.
double rip_q(double delta);
/// u(delta) = log(36 sqrt(2) / delta).
double rip_u(double delta);

/// (32 gamma C0 (1+delta) C2 (1+sqrt 2)^2 / (1-rho))^2: with this constant
/// (or larger) in the resampling rule the step-size discriminant is positive
/// for every k >= 1.
double resampling_constant_floor(const TheoryConstants& c, double c2);

struct EpsilonInterval {
    double lo = 0;
    double hi = 0;
};

struct TheoryParams {
    TheoryInputs inputs;
    TheoryConstants constants;

    double f = 0;
    double q_delta = 0;
    double u_delta = 0;
    std::int64_t m_x = 0;
    std::int64_t m_phi = 0;
    std::int64_t m = 0; // max(d, m_x)
    double c_prime_effective = 0;
    double n_threshold = 0;   // N must exceed this
    double n_resample = 0;    // floor(n_threshold) + 1
    double sigma_eff = 0;
    double a1 = 0;
    double b1 = 0;
    double discriminant = 0;  // f^2 b1^2 - 32 gamma sigma_eff a1 sqrt(m_x m)
    EpsilonInterval epsilon_interval;
    double epsilon_cap = 0;   // nu sqrt(m_phi / d)
    double epsilon = 0;       // 0 when no admissible step exists
    double n1 = 0;            // N m_x (m_phi + 1)
    bool mphi_below_mx_d = false;
    bool feasible = false;
    std::string infeasibility;
    double min_feasible_n = 0; // +inf when no horizon works
};

TheoryParams plan_parameters(const TheoryInputs& in, const TheoryConstants& c = {});

/// Midpoint (or geometric mean) of the interval, capped at domain_cap.
/// Throws PlanError when the cap does not exceed the lower end.
double choose_epsilon(const EpsilonInterval& interval, double domain_cap,
                      EpsilonRule rule = EpsilonRule::midpoint);

enum class RunMode { theory, practical };
enum class LambdaRule { formula, relative, absolute };

struct PracticalPlan {
    int m_x = 20;
    int m_phi = 300;
    int n_resample = 1;
    double epsilon = 0.05;
    LambdaRule lambda_rule = LambdaRule::relative;
    /// relative: fraction of |Phi^*(y)|; absolute: lambda itself.
    double lambda_value = 1e-3;
};

struct RunConfig {
    RunMode mode = RunMode::practical;
    std::int64_t n = 0;
    TheoryConstants constants;
    double alpha = 0; // theory mode
    PracticalPlan practical;
    double oracle_resolution = 1e-3;
    Phase2Config phase2;
    SolverSettings solver;
    std::uint64_t sampling_seed = 0;
    /// Skips Phase 1 and plays Phase 2 on this subspace.
    std::optional<LinearParamMatrix> injected_a_hat;
};

struct RunRecord {
    std::string status = "ok"; // ok | rank_collapse
    std::string message;
    RunMode mode = RunMode::practical;
    std::int64_t n = 0;
    std::uint64_t env_seed = 0;
    std::uint64_t sampling_seed = 0;
    std::optional<TheoryParams> theory;
    SamplingPlan plan;
    bool phase1_skipped = false;
    double lambda = 0;

    std::int64_t phase1_rounds = 0;
    std::int64_t phase2_rounds = 0;
    std::vector<double> mean_reward_trace; // rbar(x_t), t = 1..n
    std::vector<double> regret_trace;      // rbar(x*) - rbar(x_t)
    std::vector<double> reward_trace;      // observed r_t
    std::vector<int> arm_trace;            // Phase-2 arm ids
    MatrixXd phase2_lattice;               // k x n2
    int phase2_m = 0;
    int phase2_arms = 0;

    std::optional<RecoveryResult> recovery;
    LinearParamMatrix a_hat;
    double subspace_err = 0;

    double r1 = 0;
    double r2 = 0;
    double r3 = 0;
    double total_regret = 0;
    double r3_bound_value = 0;
    double x_star_value = 0;
    double x_star_star_value = 0;
    VectorXd x_star_u;   // argmax in B_k(1+nu)
    VectorXd y_star_star;
};

struct RegretDecomposition {
    double r1 = 0;
    double r2 = 0;
    double r3 = 0;
    double x_star_value = 0;
    double x_star_star_value = 0;
    VectorXd x_star_u;
    VectorXd y_star_star;
};

/// Splits the trace regret against the grid oracles for x* and
/// x** = Ahat^T y**, y** = argmax_{|y| <= 1+nu} g(A Ahat^T y).
RegretDecomposition decompose_regret(const RunRecord& record, const Environment& env,
                                     double oracle_resolution);

/// n2 C2 sqrt(k) (1+nu) / sqrt(2) * subspace_err.
double r3_bound(double n2, double c2, int k, double nu, double subspace_err);
/// The same bound with subspace_err replaced by 2f / (1 - f).
double r3_bound_from_f(double n2, double c2, int k, double nu, double f);

/// Rotates the first row of A by the angle that gives |A^T A - Ahat^T Ahat|_F = err
/// (err <= sqrt 2, d > k).
LinearParamMatrix corrupt_subspace(const LinearParamMatrix& a, double err, std::mt19937_64& rng);

/// Executes both phases on a fresh environment and fills in the record.
/// Throws PlanError before any query when the plan is infeasible.
RunRecord run_cablp(Environment& env, const RunConfig& cfg);

std::string_view to_string(RunMode m);
std::string_view to_string(LambdaRule r);

} // namespace cablp
