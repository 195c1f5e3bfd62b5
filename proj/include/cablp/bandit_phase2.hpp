#pragma once

#include "cablp/reward_env.hpp"

#include <cstdint>
#include <vector>

namespace cablp {

/// M = max(1, round((n2 / log n2)^{1/(k+2)})).
int choose_m(double n2, int k);

/// Lattice {j/M : |j/M| <= 1+nu}^k restricted to B_k(1+nu), embedded as
/// x_a = Ahat^T y_a. Enumeration order is lexicographic in j with the last
/// coordinate varying fastest.
struct ArmGrid {
    int m = 1;
    int k = 1;
    double nu = 0.0;
    std::int64_t candidate_count = 0; // lattice size before the ball filter
    MatrixXd lattice_points;          // k x n_arms
    MatrixXd arms;                    // d x n_arms

    int size() const { return static_cast<int>(lattice_points.cols()); }
};

ArmGrid build_arm_grid(const LinearParamMatrix& a_hat, int m, double nu);

struct Ucb1State {
    std::vector<std::int64_t> counts;
    std::vector<double> means;
    std::int64_t t = 0;
    double scale = 1.0;

    static Ucb1State fresh(int n_arms, double scale);
};

/// Lowest-index unpulled arm, else argmax of means[a] + s sqrt(2 log t / counts[a])
/// with ties to the lowest index.
int ucb1_select(const Ucb1State& state);
void ucb1_update(Ucb1State& state, int arm, double reward);

enum class ExplorationScale {
    noise_only,    // s = sigma
    conservative,  // s = sigma + 2 C2
};

struct Phase2Config {
    ExplorationScale scale_rule = ExplorationScale::conservative;
    double scale_override = 0.0; // > 0 replaces the rule
    int m_override = 0;          // > 0 replaces choose_m
    /// Doubling epochs of length 2^e with a fresh grid and fresh UCB-1 state
    /// each; for the unknown-horizon variant only.
    bool multi_epoch = false;
};

double exploration_scale(const Environment& env, const Phase2Config& cfg);

struct Phase2Result {
    ArmGrid grid; // final epoch's grid
    Ucb1State state;
    std::vector<int> arm_trace;                // per round
    std::vector<double> reward_trace;          // observed rewards
    std::vector<double> mean_reward_trace;     // rbar(x_t)
    MatrixXd played_lattice;                   // k x n2, y-coordinates of each round
};

/// Plays exactly n2 rounds of UCB-1 over the arm grid on span(Ahat).
Phase2Result run_phase2(Environment& env, const LinearParamMatrix& a_hat, std::int64_t n2,
                        const Phase2Config& cfg = {});

} // namespace cablp
