#include "cablp/bandit_phase2.hpp"
#include "cablp/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace cablp;

namespace {

Environment quadratic_env(const LinearParamMatrix& a, VectorXd center, double sigma, double nu,
                          std::uint64_t seed) {
    return Environment(a, MeanRewardSpec::centered_quadratic(std::move(center)), sigma, nu, seed);
}

LinearParamMatrix first_axes(int k, int d) {
    MatrixXd m = MatrixXd::Zero(k, d);
    for (int i = 0; i < k; ++i) m(i, i) = 1.0;
    return LinearParamMatrix::from_orthonormal(m);
}

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace

TEST_CASE("choose_m examples") {
    CHECK(choose_m(std::exp(2.0), 1) == 2);
    CHECK(choose_m(1e5, 2) == 10);
    CHECK(choose_m(1e5, 200) == 1);
    for (int k = 1; k <= 4; ++k) {
        for (double n2 : {10.0, 1e3, 1e6}) {
            const long expect = std::max(1L, std::lround(std::pow(n2 / std::log(n2), 1.0 / (k + 2))));
            CHECK(choose_m(n2, k) == expect);
        }
    }
    CHECK_THROWS_AS(choose_m(1.5, 1), ConfigError);
}

TEST_CASE("build_arm_grid examples") {
    std::mt19937_64 rng(1);
    SUBCASE("k=1, M=2") {
        const auto g = build_arm_grid(random_orthonormal(1, 4, rng), 2, 0.0);
        REQUIRE(g.size() == 5);
        CHECK(g.candidate_count == 5);
        for (int a = 0; a < 5; ++a) CHECK(g.lattice_points(0, a) == doctest::Approx(-1.0 + 0.5 * a));
    }
    SUBCASE("k=2, M=1 drops the corners") {
        const auto g = build_arm_grid(random_orthonormal(2, 5, rng), 1, 0.0);
        CHECK(g.candidate_count == 9);
        REQUIRE(g.size() == 5);
        for (int a = 0; a < g.size(); ++a) CHECK(g.lattice_points.col(a).norm() <= 1.0 + 1e-12);
    }
    SUBCASE("candidate count when (1+nu)M is an integer") {
        const auto g = build_arm_grid(random_orthonormal(2, 6, rng), 4, 0.25);
        CHECK(g.candidate_count == 11 * 11);
    }
    SUBCASE("rounding rule when (1+nu)M is not an integer") {
        // |j/3| <= 1.1 allows j in -3..3.
        const auto g = build_arm_grid(random_orthonormal(1, 3, rng), 3, 0.1);
        CHECK(g.candidate_count == 7);
        CHECK(g.size() == 7);
    }
    SUBCASE("embedding is an isometry into the ball") {
        const auto a_hat = random_orthonormal(3, 9, rng);
        const auto g = build_arm_grid(a_hat, 3, 0.2);
        bool has_origin = false;
        for (int a = 0; a < g.size(); ++a) {
            CHECK(std::abs(g.arms.col(a).norm() - g.lattice_points.col(a).norm()) < 1e-10);
            CHECK(g.arms.col(a).norm() <= 1.2 + 1e-10);
            CHECK((g.arms.col(a) - a_hat.matrix().transpose() * g.lattice_points.col(a)).norm() < 1e-12);
            has_origin = has_origin || g.lattice_points.col(a).norm() == 0.0;
        }
        CHECK(has_origin);
    }
    CHECK_THROWS_AS(build_arm_grid(first_axes(1, 2), 0, 0.0), ConfigError);
}

TEST_CASE("ucb1_select examples") {
    CHECK(ucb1_select(Ucb1State::fresh(5, 1.0)) == 0);

    Ucb1State s = Ucb1State::fresh(2, 1.0);
    s.counts = {3, 3};
    s.means = {0.9, 0.1};
    s.t = 6;
    CHECK(ucb1_select(s) == 0);

    s.counts = {100, 1};
    s.means = {0.5, 0.4};
    s.t = 101;
    const double b0 = std::sqrt(2.0 * std::log(101.0) / 100.0);
    const double b1 = std::sqrt(2.0 * std::log(101.0));
    CHECK(b0 == doctest::Approx(0.3038).epsilon(1e-3));
    CHECK(b1 == doctest::Approx(3.038).epsilon(1e-3));
    CHECK(ucb1_select(s) == 1);

    s.counts = {4, 4, 4};
    s.means = {0.2, 0.7, 0.7};
    s.t = 12;
    CHECK(ucb1_select(s) == 1);

    s.counts = {4, 0, 2};
    s.means = {9.0, 0.0, 0.0};
    s.t = 6;
    CHECK(ucb1_select(s) == 1);
}

TEST_CASE("ucb1_update running mean") {
    Ucb1State s = Ucb1State::fresh(3, 1.0);
    ucb1_update(s, 1, 0.7);
    CHECK(s.means[1] == 0.7);
    ucb1_update(s, 2, 0.0);
    ucb1_update(s, 2, 1.0);
    CHECK(s.means[2] == doctest::Approx(0.5).epsilon(1e-15));

    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(3.0, 2.0);
    std::vector<double> xs(1000);
    for (double& x : xs) {
        x = n(rng);
        ucb1_update(s, 0, x);
    }
    CHECK(std::abs(s.means[0] - std::accumulate(xs.begin(), xs.end(), 0.0) / 1000.0) < 1e-12);
    CHECK(s.counts[0] + s.counts[1] + s.counts[2] == s.t);
    CHECK_THROWS_AS(ucb1_update(s, 3, 0.0), ConfigError);
}

TEST_CASE("constant shift leaves the pull sequence unchanged") {
    const std::vector<double> arm_mean{0.1, 0.5, 0.45, 0.3, 0.49};
    auto replay = [&](double shift) {
        Ucb1State s = Ucb1State::fresh(5, 0.2);
        std::vector<int> seq;
        for (int t = 0; t < 300; ++t) {
            const int a = ucb1_select(s);
            seq.push_back(a);
            ucb1_update(s, a, arm_mean[a] + shift);
        }
        return seq;
    };
    // Dyadic shift keeps the running means exact up to the same rounding.
    CHECK(replay(0.0) == replay(4.0));
}

TEST_CASE("exploration_scale") {
    const auto a = first_axes(2, 4);
    const Environment env = quadratic_env(a, vec({0.1, 0.2}), 0.3, 0.1, 1);
    CHECK(exploration_scale(env, {ExplorationScale::noise_only}) == 0.3);
    CHECK(exploration_scale(env, {ExplorationScale::conservative}) ==
          doctest::Approx(0.3 + 2.0 * env.smoothness_constant()));
    Phase2Config cfg;
    cfg.scale_override = 0.7;
    CHECK(exploration_scale(env, cfg) == 0.7);
    CHECK(Phase2Config{}.scale_rule == ExplorationScale::conservative);
}

TEST_CASE("run_phase2 initialization sweep") {
    const auto a = first_axes(2, 5);
    Environment env = quadratic_env(a, vec({0.0, 0.0}), 0.1, 0.0, 3);
    Phase2Config cfg;
    cfg.m_override = 2;
    const auto grid = build_arm_grid(a, 2, 0.0);
    const auto r = run_phase2(env, a, grid.size(), cfg);
    CHECK(env.query_count() == static_cast<std::uint64_t>(grid.size()));
    CHECK(std::set<int>(r.arm_trace.begin(), r.arm_trace.end()).size() == static_cast<std::size_t>(grid.size()));
    for (auto c : r.state.counts) CHECK(c == 1);
}

TEST_CASE("noiseless quadratic locks onto the optimal arm") {
    const auto a = first_axes(1, 3);
    Environment env = quadratic_env(a, vec({0.5}), 0.0, 0.0, 4);
    Phase2Config cfg;
    cfg.scale_rule = ExplorationScale::noise_only;
    cfg.m_override = 2;
    const auto r = run_phase2(env, a, 50, cfg);
    REQUIRE(r.grid.size() == 5);
    int best = -1;
    for (int i = 0; i < 5; ++i)
        if (std::abs(r.grid.lattice_points(0, i) - 0.5) < 1e-12) best = i;
    REQUIRE(best >= 0);
    for (std::size_t t = 5; t < r.arm_trace.size(); ++t) CHECK(r.arm_trace[t] == best);
    CHECK(r.state.counts[static_cast<std::size_t>(best)] == 46);
}

TEST_CASE("run_phase2 traces, determinism and grid soundness") {
    std::mt19937_64 rng(5);
    const auto a = random_orthonormal(2, 6, rng);
    const auto a_hat = random_orthonormal(2, 6, rng);
    auto play = [&] {
        Environment env = quadratic_env(a, vec({0.2, -0.3}), 0.2, 0.1, 77);
        auto res = run_phase2(env, a_hat, 2000);
        return std::make_pair(std::move(res), env.query_count());
    };
    const auto [r, used] = play();
    CHECK(used == 2000);
    CHECK(r.arm_trace.size() == 2000);
    CHECK(r.reward_trace.size() == 2000);
    CHECK(r.mean_reward_trace.size() == 2000);
    CHECK(r.played_lattice.cols() == 2000);
    CHECK(r.state.t == 2000);
    CHECK(r.arm_trace == play().first.arm_trace);
    const MatrixXd proj = a_hat.projector();
    for (int t = 0; t < 2000; t += 37) {
        const VectorXd x = r.grid.arms.col(r.arm_trace[static_cast<std::size_t>(t)]);
        CHECK(x.norm() <= 1.1 + 1e-10);
        CHECK((proj * x - x).norm() < 1e-10);
        CHECK((r.played_lattice.col(t) - r.grid.lattice_points.col(r.arm_trace[static_cast<std::size_t>(t)])).norm() == 0.0);
    }
}

TEST_CASE("run_phase2 errors before any query") {
    const auto a = first_axes(1, 3);
    Environment env = quadratic_env(a, vec({0.0}), 0.1, 0.0, 1);
    env.set_query_limit(10);
    CHECK_THROWS_AS(run_phase2(env, a, 11), BudgetError);
    CHECK(env.query_count() == 0);
    CHECK_THROWS_AS(run_phase2(env, first_axes(1, 4), 5), ShapeError);
    CHECK_THROWS_AS(run_phase2(env, first_axes(2, 3), 5), ShapeError);
    CHECK(env.query_count() == 0);
}

TEST_CASE("Phase-2 regret scaling with the true subspace") {
    // Constant fitted at n2 = 1e4, then checked at 5e4 against n2^{2/3} (log n2)^{1/3}.
    auto mean_regret = [](std::int64_t n2) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            std::mt19937_64 rng(900 + seed);
            const auto a = random_orthonormal(1, 8, rng);
            Environment env = quadratic_env(a, vec({0.3}), 0.05, 0.5, 1000 + seed);
            const auto r = run_phase2(env, a, n2);
            for (double m : r.mean_reward_trace) total += 1.0 - m;
        }
        return total / 10.0;
    };
    auto shape = [](double n2) { return std::pow(n2, 2.0 / 3.0) * std::cbrt(std::log(n2)); };
    const double c = mean_regret(10'000) / shape(1e4);
    const double r = mean_regret(50'000);
    CAPTURE(c);
    CAPTURE(r);
    CHECK(r >= 0.2 * c * shape(5e4));
    CHECK(r <= 5.0 * c * shape(5e4));
}

TEST_CASE("empirical Phase-2 regret against the subspace optimum is nonnegative") {
    std::vector<double> totals;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(40 + seed);
        const auto a = random_orthonormal(2, 6, rng);
        const auto a_hat = random_orthonormal(2, 6, rng);
        Environment env = quadratic_env(a, vec({0.3, -0.2}), 0.1, 0.1, seed);
        const auto best = grid_maximize(env.mean_spec(), a.matrix() * a_hat.matrix().transpose(), 1.1, 0.002);
        const auto r = run_phase2(env, a_hat, 3000);
        double sum = 0.0;
        for (double y : r.reward_trace) sum += best.value - y;
        totals.push_back(sum);
    }
    const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / 10.0;
    double var = 0.0;
    for (double t : totals) var += (t - mean) * (t - mean);
    const double se = std::sqrt(var / 9.0) / std::sqrt(10.0);
    CHECK(mean >= -2.0 * se);
}
