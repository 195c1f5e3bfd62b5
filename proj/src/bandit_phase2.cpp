#include "cablp/bandit_phase2.hpp"

#include "cablp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cablp {

int choose_m(double n2, int k) {
    if (!(n2 >= 2.0)) throw ConfigError("choose_m needs n2 >= 2");
    if (k < 1) throw ConfigError("choose_m needs k >= 1");
    const double m = std::pow(n2 / std::log(n2), 1.0 / (k + 2.0));
    return std::max(1, static_cast<int>(std::lround(m)));
}

ArmGrid build_arm_grid(const LinearParamMatrix& a_hat, int m, double nu) {
    if (m < 1) throw ConfigError("discretization level M must be >= 1");
    const int k = a_hat.k();
    const double radius = 1.0 + nu;
    // Largest j with j/M <= 1+nu; the epsilon guards exact products like 1.5*2.
    const int half = static_cast<int>(std::floor(radius * m + 1e-9));
    const std::int64_t side = 2LL * half + 1;

    ArmGrid grid;
    grid.m = m;
    grid.k = k;
    grid.nu = nu;
    grid.candidate_count = 1;
    for (int i = 0; i < k; ++i) {
        if (grid.candidate_count > std::numeric_limits<std::int64_t>::max() / side)
            throw ConfigError("arm grid too large");
        grid.candidate_count *= side;
    }
    if (grid.candidate_count > 50'000'000) throw ConfigError("arm grid too large");

    std::vector<int> idx(k, -half);
    std::vector<VectorXd> kept;
    VectorXd y(k);
    for (;;) {
        for (int i = 0; i < k; ++i) y(i) = static_cast<double>(idx[i]) / m;
        if (y.norm() <= radius + 1e-12) kept.push_back(y);
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == half) {
            idx[pos] = -half;
            --pos;
        }
        if (pos < 0) break;
        ++idx[pos];
    }

    grid.lattice_points.resize(k, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t a = 0; a < kept.size(); ++a) grid.lattice_points.col(static_cast<Eigen::Index>(a)) = kept[a];
    grid.arms = a_hat.matrix().transpose() * grid.lattice_points;
    return grid;
}

Ucb1State Ucb1State::fresh(int n_arms, double scale) {
    if (n_arms < 1) throw ConfigError("UCB-1 needs at least one arm");
    Ucb1State s;
    s.counts.assign(n_arms, 0);
    s.means.assign(n_arms, 0.0);
    s.scale = scale;
    return s;
}

int ucb1_select(const Ucb1State& state) {
    const int n = static_cast<int>(state.counts.size());
    if (n == 0) throw ConfigError("UCB-1 needs at least one arm");
    for (int a = 0; a < n; ++a)
        if (state.counts[a] == 0) return a;

    const double log_t = std::log(static_cast<double>(state.t));
    int best = 0;
    double best_index = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
        const double bonus = state.scale * std::sqrt(2.0 * log_t / static_cast<double>(state.counts[a]));
        const double index = state.means[a] + bonus;
        if (index > best_index) {
            best_index = index;
            best = a;
        }
    }
    return best;
}

void ucb1_update(Ucb1State& state, int arm, double reward) {
    if (arm < 0 || arm >= static_cast<int>(state.counts.size())) throw ConfigError("arm index out of range");
    const auto c = ++state.counts[arm];
    state.means[arm] += (reward - state.means[arm]) / static_cast<double>(c);
    ++state.t;
}

double exploration_scale(const Environment& env, const Phase2Config& cfg) {
    if (cfg.scale_override > 0.0) return cfg.scale_override;
    switch (cfg.scale_rule) {
    case ExplorationScale::noise_only: return env.sigma();
    case ExplorationScale::conservative: return env.sigma() + 2.0 * env.smoothness_constant();
    }
    return env.sigma();
}

Phase2Result run_phase2(Environment& env, const LinearParamMatrix& a_hat, std::int64_t n2,
                        const Phase2Config& cfg) {
    if (n2 < 1) throw ConfigError("Phase 2 needs n2 >= 1");
    if (a_hat.d() != env.d() || a_hat.k() != env.k()) throw ShapeError("Ahat shape differs from environment");
    if (env.remaining_budget() < static_cast<std::uint64_t>(n2))
        throw BudgetError("insufficient budget for Phase 2");

    const double scale = exploration_scale(env, cfg);
    Phase2Result out;
    out.arm_trace.reserve(static_cast<std::size_t>(n2));
    out.reward_trace.reserve(static_cast<std::size_t>(n2));
    out.mean_reward_trace.reserve(static_cast<std::size_t>(n2));
    out.played_lattice.resize(env.k(), n2);

    auto play_epoch = [&](std::int64_t length) {
        const int m = cfg.m_override > 0 ? cfg.m_override : choose_m(std::max<double>(2.0, length), env.k());
        out.grid = build_arm_grid(a_hat, m, env.nu());
        out.state = Ucb1State::fresh(out.grid.size(), scale);
        for (std::int64_t r = 0; r < length; ++r) {
            const int arm = ucb1_select(out.state);
            const VectorXd x = out.grid.arms.col(arm);
            const double mean = env.mean_reward(x);
            const double reward = env.sample_reward(x);
            ucb1_update(out.state, arm, reward);
            out.played_lattice.col(static_cast<Eigen::Index>(out.arm_trace.size())) = out.grid.lattice_points.col(arm);
            out.arm_trace.push_back(arm);
            out.reward_trace.push_back(reward);
            out.mean_reward_trace.push_back(mean);
        }
    };

    if (!cfg.multi_epoch) {
        play_epoch(n2);
    } else {
        std::int64_t played = 0;
        for (int e = 1; played < n2; ++e) {
            const std::int64_t len = std::min<std::int64_t>(std::int64_t{1} << std::min(e, 62), n2 - played);
            play_epoch(len);
            played += len;
        }
    }
    return out;
}

} // namespace cablp
