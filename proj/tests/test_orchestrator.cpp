#include "cablp/errors.hpp"
#include "cablp/orchestrator.hpp"
#include "theory_oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace cablp;

namespace {

TheoryParams plan_from(const oracle::In& in) {
    TheoryConstants c;
    c.delta = in.delta;
    c.rho = in.rho;
    c.p = in.p;
    c.c1 = in.c1;
    c.gamma = in.gamma;
    c.c0 = in.c0;
    c.c_prime = in.c_prime;
    c.f_mode = in.remark ? FExponentMode::remark : FExponentMode::standard;
    return plan_parameters({in.n, in.d, in.k, in.sigma, in.c2, in.alpha, in.nu}, c);
}

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace

TEST_CASE("isometry covering constants") {
    CHECK(rip_q(0.3) == doctest::Approx(0.087 / 144.0).epsilon(1e-14));
    CHECK(rip_q(0.3) == doctest::Approx(6.0417e-4).epsilon(1e-4));
    CHECK(rip_u(0.3) == doctest::Approx(std::log(36.0 * std::sqrt(2.0) / 0.3)).epsilon(1e-14));
    CHECK(rip_u(0.3) == doctest::Approx(5.134).epsilon(1e-3));
}

TEST_CASE("m_x worked example") {
    TheoryConstants c;
    c.rho = 0.5;
    c.p = 0.1;
    const auto tp = plan_parameters({1e6, 50, 2, 0.0, 1.0, 0.5, 0.5}, c);
    CHECK(tp.m_x == 96);
    CHECK(tp.m == 96);
}

TEST_CASE("noiseless plan") {
    const auto tp = plan_parameters({1e7, 10, 1, 0.0, 1.0, 0.5, 5.0});
    CHECK(tp.n_resample == 1.0);
    CHECK(tp.epsilon_interval.lo == doctest::Approx(0.0).epsilon(1e-15));
    const double hi = tp.f * tp.b1 * std::sqrt(static_cast<double>(tp.m_phi) / tp.m_x) / tp.a1;
    CHECK(tp.epsilon_interval.hi == doctest::Approx(hi).epsilon(1e-12));
    REQUIRE(tp.epsilon_cap > hi);
    CHECK(tp.epsilon == doctest::Approx(0.5 * hi).epsilon(1e-12));
    CHECK(tp.n1 == doctest::Approx(static_cast<double>(tp.m_x) * (tp.m_phi + 1)));
}

TEST_CASE("remark exponent") {
    TheoryConstants c;
    c.f_mode = FExponentMode::remark;
    const auto tp = plan_parameters({1e5, 10, 2, 0.0, 1.0, 0.5, 0.5}, c);
    CHECK(tp.f == doctest::Approx(std::pow(std::log(1e5) / 1e5, 0.125) / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("plan errors") {
    CHECK_THROWS_AS(plan_parameters({1e5, 10, 2, 0.1, 1.0, 0.0, 0.5}), ConfigError);
    CHECK_THROWS_AS(plan_parameters({1e5, 10, 2, 0.1, 1.0, -1.0, 0.5}), ConfigError);
    CHECK_THROWS_AS(plan_parameters({1e5, 2, 3, 0.1, 1.0, 0.5, 0.5}), ConfigError);
    TheoryConstants bad;
    bad.delta = 0.5;
    CHECK_THROWS_AS(plan_parameters({1e5, 10, 2, 0.1, 1.0, 0.5, 0.5}, bad), ConfigError);
}

TEST_CASE("planner matches the independent evaluator") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
        auto in = oracle::random_input(rng);
        in.remark = t % 5 == 0;
        const auto o = oracle::evaluate(in);
        const auto tp = plan_from(in);
        CAPTURE(t);
        const double tol = 1e-12;
        CHECK(oracle::close(tp.f, o.f, tol));
        CHECK(oracle::close(tp.q_delta, o.q, tol));
        CHECK(oracle::close(tp.u_delta, o.u, tol));
        CHECK(static_cast<double>(tp.m_x) == o.m_x);
        CHECK(static_cast<double>(tp.m_phi) == o.m_phi);
        CHECK(static_cast<double>(tp.m) == o.m);
        CHECK(oracle::close(tp.c_prime_effective, o.cp, tol));
        CHECK(oracle::close(tp.n_threshold, o.n_thr, tol));
        CHECK(oracle::close(tp.n_resample, o.n_res, tol));
        CHECK(oracle::close(tp.a1, o.a1, tol));
        CHECK(oracle::close(tp.b1, o.b1, tol));
        CHECK(oracle::close(tp.discriminant, o.disc, tol));
        CHECK(oracle::close(tp.epsilon_interval.lo, o.lo, 1e-10));
        CHECK(oracle::close(tp.epsilon_interval.hi, o.hi, tol));
        CHECK(oracle::close(tp.epsilon_cap, o.cap, tol));
        CHECK(oracle::close(tp.epsilon, o.eps, tol));
        CHECK(oracle::close(tp.n1, o.n1, tol));
        CHECK(tp.feasible == (o.disc > 0.0 && o.cap > o.lo && o.n1 < in.n));
    }
}

TEST_CASE("discriminant is positive after resampling") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; ++t) {
        auto in = oracle::random_input(rng);
        in.sigma = 0.01 + 2.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto tp = plan_from(in);
        CAPTURE(t);
        CHECK(tp.discriminant > 0.0);
        CHECK(oracle::evaluate(in).disc > 0.0);
    }
}

TEST_CASE("choose_epsilon examples") {
    CHECK(choose_epsilon({0.1, 0.3}, 1.0) == doctest::Approx(0.2));
    CHECK(choose_epsilon({0.1, 0.3}, 0.15) == 0.15);
    CHECK_THROWS_WITH_AS(choose_epsilon({0.2, 0.3}, 0.1), doctest::Contains("step-size infeasible"), PlanError);
    CHECK(choose_epsilon({0.1, 0.4}, 1.0, EpsilonRule::geometric) == doctest::Approx(0.2));
}

TEST_CASE("r3_bound") {
    CHECK(r3_bound(1000, 1.0, 4, 0.0, 0.0) == 0.0);
    CHECK(r3_bound(1000, 1.0, 4, 0.0, 0.1) == doctest::Approx(200.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r3_bound(1000, 1.0, 4, 0.0, 0.1) == doctest::Approx(141.42).epsilon(1e-4));
    CHECK(r3_bound(2000, 1.3, 2, 0.2, 0.3) == doctest::Approx(2.0 * r3_bound(1000, 1.3, 2, 0.2, 0.3)).epsilon(1e-14));
    const double f = 0.07;
    CHECK(r3_bound_from_f(500, 2.0, 3, 0.1, f) ==
          doctest::Approx(r3_bound(500, 2.0, 3, 0.1, 2.0 * f / (1.0 - f))).epsilon(1e-13));
}

TEST_CASE("corrupt_subspace hits the requested error") {
    std::mt19937_64 rng(13);
    for (double err : {0.0, 0.05, 0.1, 0.2, 1.0, std::sqrt(2.0)}) {
        const auto a = random_orthonormal(2, 7, rng);
        const auto b = corrupt_subspace(a, err, rng);
        CHECK(std::abs(subspace_error(a, b) - err) < 1e-10);
    }
    CHECK_THROWS_AS(corrupt_subspace(random_orthonormal(2, 2, rng), 0.1, rng), ConfigError);
    CHECK_THROWS_AS(corrupt_subspace(random_orthonormal(1, 3, rng), 1.5, rng), ConfigError);
}

TEST_CASE("theory mode with a tiny horizon is refused before any query") {
    std::mt19937_64 rng(14);
    Environment env(random_orthonormal(1, 10, rng), MeanRewardSpec::linear(vec({1.0})), 0.0, 0.5, 1);
    RunConfig cfg;
    cfg.mode = RunMode::theory;
    cfg.n = 1000;
    cfg.alpha = 0.5;
    CHECK_THROWS_WITH_AS(run_cablp(env, cfg), doctest::Contains("budget infeasible"), PlanError);
    CHECK(env.query_count() == 0);
}

TEST_CASE("practical budget guard") {
    std::mt19937_64 rng(15);
    Environment env(random_orthonormal(1, 10, rng), MeanRewardSpec::linear(vec({1.0})), 0.0, 0.5, 1);
    RunConfig cfg;
    cfg.n = 6020;
    cfg.practical = {20, 300, 1, 0.05, LambdaRule::relative, 1e-3};
    CHECK_THROWS_WITH_AS(run_cablp(env, cfg), doctest::Contains("budget infeasible"), PlanError);
    CHECK(env.query_count() == 0);
}

TEST_CASE("injected true subspace") {
    std::mt19937_64 rng(16);
    const auto a = random_orthonormal(2, 8, rng);
    Environment env(a, MeanRewardSpec::centered_quadratic(vec({0.3, -0.2})), 0.1, 0.2, 5);
    RunConfig cfg;
    cfg.n = 5000;
    cfg.injected_a_hat = a;
    cfg.oracle_resolution = 1e-3;
    const auto rec = run_cablp(env, cfg);
    CHECK(rec.phase1_skipped);
    CHECK(rec.phase1_rounds == 0);
    CHECK(rec.r1 == 0.0);
    CHECK(std::abs(rec.r3) <= 5000 * env.smoothness_constant() * std::sqrt(2.0) * 1e-3);
    CHECK(rec.subspace_err < 1e-12);
    CHECK(env.query_count() == 5000);
}

TEST_CASE("end-to-end noiseless linear run") {
    std::mt19937_64 rng(17);
    const auto a = random_orthonormal(1, 10, rng);
    Environment env(a, MeanRewardSpec::linear(vec({1.0})), 0.0, 0.5, 3);
    RunConfig cfg;
    cfg.n = 20'000;
    cfg.practical = {20, 300, 1, 0.05, LambdaRule::relative, 1e-3};
    cfg.sampling_seed = 99;
    cfg.phase2.scale_rule = ExplorationScale::noise_only;
    const auto rec = run_cablp(env, cfg);
    REQUIRE(rec.status == "ok");
    CHECK(rec.subspace_err <= 1e-2);
    CHECK(env.query_count() == 20'000);
    CHECK(rec.phase1_rounds == 20 * 301);
    CHECK(rec.phase1_rounds + rec.phase2_rounds == 20'000);
    CHECK(rec.regret_trace.size() == 20'000);

    const double range = 2.0 * env.radius();
    const std::size_t tail = rec.regret_trace.size() / 10;
    const double last = std::accumulate(rec.regret_trace.end() - static_cast<std::ptrdiff_t>(tail),
                                        rec.regret_trace.end(), 0.0) /
                        static_cast<double>(tail);
    CAPTURE(last);
    CHECK(last <= 0.05 * range);

    const double sum = std::accumulate(rec.regret_trace.begin(), rec.regret_trace.end(), 0.0);
    CHECK(rec.r1 + rec.r2 + rec.r3 == doctest::Approx(sum).epsilon(1e-10));
    CHECK(rec.total_regret == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("R3 stays below the bound for corrupted subspaces") {
    for (double err : {0.05, 0.1, 0.2}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            std::mt19937_64 rng(300 + seed);
            const auto a = random_orthonormal(2, 8, rng);
            Environment env(a, MeanRewardSpec::centered_quadratic(vec({1.0, 0.8})), 0.0, 0.2, seed);
            RunConfig cfg;
            cfg.n = 2000;
            cfg.injected_a_hat = corrupt_subspace(a, err, rng);
            const auto rec = run_cablp(env, cfg);
            CAPTURE(err);
            CHECK(rec.r3 > 0.0);
            CHECK(rec.r3 <= rec.r3_bound_value);
            CHECK(rec.r3_bound_value == doctest::Approx(r3_bound(2000, env.smoothness_constant(), 2, 0.2, err)).epsilon(1e-8));
        }
    }
}

TEST_CASE("rank collapse keeps the Phase-1 record") {
    std::mt19937_64 rng(18);
    Environment env(random_orthonormal(1, 6, rng), MeanRewardSpec::linear(vec({1.0})), 0.0, 0.5, 1);
    RunConfig cfg;
    cfg.n = 2000;
    cfg.practical = {5, 40, 1, 0.05, LambdaRule::relative, 1.5};
    const auto rec = run_cablp(env, cfg);
    CHECK(rec.status == "rank_collapse");
    CHECK(rec.phase1_rounds == 5 * 41);
    CHECK(rec.r2 == 0.0);
    CHECK(rec.r3 == 0.0);
    CHECK(rec.total_regret == rec.r1);
}

TEST_CASE("run_cablp preconditions") {
    std::mt19937_64 rng(19);
    const auto a = random_orthonormal(1, 6, rng);
    Environment env(a, MeanRewardSpec::linear(vec({1.0})), 0.0, 0.5, 1);
    (void)env.sample_reward(VectorXd::Zero(6));
    RunConfig cfg;
    cfg.n = 100;
    CHECK_THROWS_AS(run_cablp(env, cfg), ConfigError);
    Environment fresh(a, MeanRewardSpec::linear(vec({1.0})), 0.0, 0.5, 1);
    cfg.injected_a_hat = random_orthonormal(1, 5, rng);
    CHECK_THROWS_AS(run_cablp(fresh, cfg), ShapeError);
}
