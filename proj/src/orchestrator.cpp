#include "cablp/orchestrator.hpp"

#include "cablp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace cablp {

double default_gamma() { return 2.0 * std::sqrt(std::log(12.0)) + 0.1; }

void TheoryConstants::validate() const {
    if (!(delta > 0.0 && delta < std::numbers::sqrt2 - 1.0)) throw ConfigError("delta must lie in (0, sqrt(2)-1)");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0, 1)");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("p must lie in (0, 1)");
    if (!(c1 > 1.0)) throw ConfigError("c1 must exceed 1");
    if (!(gamma > 2.0 * std::sqrt(std::log(12.0)))) throw ConfigError("gamma must exceed 2 sqrt(log 12)");
    if (!(c0 > 0.0)) throw ConfigError("C0 must be positive");
    if (!(c_prime > 0.0)) throw ConfigError("C' must be positive");
}

double rip_q(double delta) { return (delta * delta - delta * delta * delta / 9.0) / 144.0; }

double rip_u(double delta) { return std::log(36.0 * std::numbers::sqrt2 / delta); }

double resampling_constant_floor(const TheoryConstants& c, double c2) {
    const double spread = (1.0 + std::numbers::sqrt2) * (1.0 + std::numbers::sqrt2);
    const double base = 32.0 * c.gamma * c.c0 * (1.0 + c.delta) * c2 * spread / (1.0 - c.rho);
    return base * base;
}

namespace {

double f_value(double n, int k, FExponentMode mode) {
    const double exponent = (mode == FExponentMode::standard ? 1.0 : 0.5) / (k + 2.0);
    return std::pow(std::log(n) / n, exponent) / std::sqrt(static_cast<double>(k));
}

double resample_threshold(double c_prime_eff, int k, int d, double sigma, std::int64_t m_x,
                          std::int64_t m, double f, double alpha) {
    const double k6 = std::pow(static_cast<double>(k), 6);
    return c_prime_eff * k6 * static_cast<double>(d) * d * sigma * sigma * static_cast<double>(m_x) *
           static_cast<double>(m) / (std::pow(f, 4) * alpha * alpha);
}

double resample_count(double threshold) { return std::floor(threshold) + 1.0; }

} // namespace

TheoryParams plan_parameters(const TheoryInputs& in, const TheoryConstants& c) {
    c.validate();
    if (!(in.alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (!(in.n >= 3.0)) throw ConfigError("horizon n must be >= 3");
    if (in.d < 1 || in.k < 1 || in.k > in.d) throw ConfigError("need 1 <= k <= d");
    if (!(in.c2 > 0.0) || !(in.sigma >= 0.0) || !(in.nu >= 0.0)) throw ConfigError("C2 > 0, sigma >= 0, nu >= 0 required");

    TheoryParams tp;
    tp.inputs = in;
    tp.constants = c;
    const double k = in.k;
    const double d = in.d;

    tp.f = f_value(in.n, in.k, c.f_mode);
    tp.q_delta = rip_q(c.delta);
    tp.u_delta = rip_u(c.delta);
    tp.m_x = static_cast<std::int64_t>(
        std::ceil(2.0 * k * in.c2 * in.c2 * std::log(k / c.p) / (in.alpha * c.rho * c.rho)));
    tp.m_x = std::max<std::int64_t>(tp.m_x, 1);
    tp.m_phi = static_cast<std::int64_t>(
        std::ceil(4.0 * k * (d + static_cast<double>(tp.m_x) + 1.0) * tp.u_delta * c.c1 / tp.q_delta));
    tp.m = std::max<std::int64_t>(in.d, tp.m_x);
    tp.mphi_below_mx_d = static_cast<double>(tp.m_phi) < static_cast<double>(tp.m_x) * d;

    tp.c_prime_effective = c.c_prime * resampling_constant_floor(c, in.c2);
    tp.n_threshold = resample_threshold(tp.c_prime_effective, in.k, in.d, in.sigma, tp.m_x, tp.m, tp.f, in.alpha);
    tp.n_resample = resample_count(tp.n_threshold);
    tp.sigma_eff = in.sigma / std::sqrt(tp.n_resample);

    tp.a1 = in.c2 * d * k * k;
    tp.b1 = std::sqrt((1.0 - c.rho) * in.alpha) /
            (std::sqrt(c.c0) * std::sqrt(1.0 + c.delta) * (std::sqrt(k) + std::numbers::sqrt2));
    const double mxm = std::sqrt(static_cast<double>(tp.m_x) * static_cast<double>(tp.m));
    tp.discriminant = tp.f * tp.f * tp.b1 * tp.b1 - 32.0 * c.gamma * tp.sigma_eff * tp.a1 * mxm;
    const double denom = 2.0 * tp.a1 * std::sqrt(static_cast<double>(tp.m_x) / static_cast<double>(tp.m_phi));
    tp.epsilon_cap = in.nu * std::sqrt(static_cast<double>(tp.m_phi) / d);
    tp.n1 = tp.n_resample * static_cast<double>(tp.m_x) * (static_cast<double>(tp.m_phi) + 1.0);

    std::ostringstream why;
    bool ok = true;
    if (tp.discriminant > 0.0) {
        const double root = std::sqrt(tp.discriminant);
        tp.epsilon_interval = {(tp.f * tp.b1 - root) / denom, (tp.f * tp.b1 + root) / denom};
        try {
            tp.epsilon = choose_epsilon(tp.epsilon_interval, tp.epsilon_cap, c.epsilon_rule);
        } catch (const PlanError& e) {
            ok = false;
            why << e.what() << "; ";
        }
    } else {
        ok = false;
        why << "step-size interval empty (discriminant " << tp.discriminant << " <= 0); ";
    }
    if (!(tp.n1 < in.n)) {
        ok = false;
        why << "budget infeasible: n1 = " << tp.n1 << " >= n = " << in.n << "; ";
    }

    // Smallest horizon whose Phase-1 length fits, scanning n on a log grid.
    auto n1_at = [&](double n) {
        const double f = f_value(n, in.k, c.f_mode);
        const double thr = resample_threshold(tp.c_prime_effective, in.k, in.d, in.sigma, tp.m_x, tp.m, f, in.alpha);
        return resample_count(thr) * static_cast<double>(tp.m_x) * (static_cast<double>(tp.m_phi) + 1.0);
    };
    tp.min_feasible_n = std::numeric_limits<double>::infinity();
    double prev = 3.0;
    for (double logn = std::log10(3.0); logn <= 300.0; logn += 0.01) {
        const double n = std::pow(10.0, logn);
        if (n1_at(n) < n) {
            double lo = prev, hi = n;
            for (int it = 0; it < 200 && hi - lo > 0.5; ++it) {
                const double mid = 0.5 * (lo + hi);
                (n1_at(mid) < mid ? hi : lo) = mid;
            }
            tp.min_feasible_n = std::ceil(hi);
            break;
        }
        prev = n;
    }
    if (!(tp.n1 < in.n)) {
        if (std::isfinite(tp.min_feasible_n))
            why << "minimal feasible n ~ " << tp.min_feasible_n;
        else
            why << "no feasible horizon n";
    }

    tp.feasible = ok;
    tp.infeasibility = why.str();
    return tp;
}

double choose_epsilon(const EpsilonInterval& interval, double domain_cap, EpsilonRule rule) {
    if (!(interval.hi > interval.lo)) throw PlanError("step-size infeasible: empty interval");
    double eps = 0.5 * (interval.lo + interval.hi);
    if (rule == EpsilonRule::geometric && interval.lo > 0.0) eps = std::sqrt(interval.lo * interval.hi);
    if (!(domain_cap > interval.lo)) {
        std::ostringstream os;
        os << "step-size infeasible: increase nu or m_phi (cap " << domain_cap << " <= lower end "
           << interval.lo << ")";
        throw PlanError(os.str());
    }
    return std::min(eps, domain_cap);
}

double r3_bound(double n2, double c2, int k, double nu, double subspace_err) {
    return n2 * c2 * std::sqrt(static_cast<double>(k)) * (1.0 + nu) * subspace_err / std::numbers::sqrt2;
}

double r3_bound_from_f(double n2, double c2, int k, double nu, double f) {
    return n2 * c2 * std::sqrt(static_cast<double>(k)) * (1.0 + nu) * std::numbers::sqrt2 * f / (1.0 - f);
}

LinearParamMatrix corrupt_subspace(const LinearParamMatrix& a, double err, std::mt19937_64& rng) {
    if (!(err >= 0.0 && err <= std::numbers::sqrt2)) throw ConfigError("subspace error must lie in [0, sqrt 2]");
    if (a.d() <= a.k()) throw ConfigError("corrupt_subspace needs d > k");
    std::normal_distribution<double> normal(0.0, 1.0);
    const MatrixXd& am = a.matrix();
    VectorXd b(a.d());
    for (;;) {
        for (int i = 0; i < a.d(); ++i) b(i) = normal(rng);
        b -= am.transpose() * (am * b);
        b -= am.transpose() * (am * b);
        if (b.norm() > 1e-8) break;
    }
    b.normalize();
    const double theta = std::asin(err / std::numbers::sqrt2);
    MatrixXd out = am;
    out.row(0) = std::cos(theta) * am.row(0) + std::sin(theta) * b.transpose();
    return make_row_orthonormal(out);
}

RegretDecomposition decompose_regret(const RunRecord& record, const Environment& env,
                                     double oracle_resolution) {
    RegretDecomposition out;
    const OptimumPoint star = optimal_value(env, oracle_resolution);
    out.x_star_value = star.value;
    out.x_star_u = star.argmax;

    const MatrixXd link = env.param_matrix().matrix() * record.a_hat.matrix().transpose();
    const OptimumPoint star2 = grid_maximize(env.mean_spec(), link, env.radius(), oracle_resolution);
    out.x_star_star_value = star2.value;
    out.y_star_star = star2.argmax;

    const auto n1 = static_cast<std::size_t>(record.phase1_rounds);
    for (std::size_t t = 0; t < record.mean_reward_trace.size(); ++t) {
        const double r = record.mean_reward_trace[t];
        if (t < n1)
            out.r1 += out.x_star_value - r;
        else
            out.r2 += out.x_star_star_value - r;
    }
    out.r3 = static_cast<double>(record.phase2_rounds) * (out.x_star_value - out.x_star_star_value);
    return out;
}

std::string_view to_string(RunMode m) { return m == RunMode::theory ? "theory" : "practical"; }

std::string_view to_string(LambdaRule r) {
    switch (r) {
    case LambdaRule::formula: return "formula";
    case LambdaRule::relative: return "relative";
    case LambdaRule::absolute: return "absolute";
    }
    return "unknown";
}

namespace {

void finish_record(RunRecord& rec, const Environment& env, double oracle_resolution) {
    const RegretDecomposition dec = decompose_regret(rec, env, oracle_resolution);
    rec.r1 = dec.r1;
    rec.r2 = dec.r2;
    rec.r3 = dec.r3;
    rec.x_star_value = dec.x_star_value;
    rec.x_star_star_value = dec.x_star_star_value;
    rec.x_star_u = dec.x_star_u;
    rec.y_star_star = dec.y_star_star;
    rec.regret_trace.resize(rec.mean_reward_trace.size());
    rec.total_regret = 0.0;
    for (std::size_t t = 0; t < rec.mean_reward_trace.size(); ++t) {
        rec.regret_trace[t] = dec.x_star_value - rec.mean_reward_trace[t];
        rec.total_regret += rec.regret_trace[t];
    }
}

} // namespace

RunRecord run_cablp(Environment& env, const RunConfig& cfg) {
    if (env.query_count() != 0) throw ConfigError("run_cablp needs a fresh environment");
    if (cfg.n < 1) throw ConfigError("horizon n must be >= 1");

    RunRecord rec;
    rec.mode = cfg.mode;
    rec.n = cfg.n;
    rec.env_seed = env.seed();
    rec.sampling_seed = cfg.sampling_seed;
    const int d = env.d();
    const int k = env.k();
    const double c2 = env.smoothness_constant();

    if (cfg.injected_a_hat) {
        if (cfg.injected_a_hat->d() != d || cfg.injected_a_hat->k() != k) throw ShapeError("injected Ahat has wrong shape");
        rec.phase1_skipped = true;
        rec.a_hat = *cfg.injected_a_hat;
    } else if (cfg.mode == RunMode::theory) {
        TheoryInputs in{static_cast<double>(cfg.n), d, k, env.sigma(), c2, cfg.alpha, env.nu()};
        TheoryParams tp = plan_parameters(in, cfg.constants);
        rec.theory = tp;
        if (!tp.feasible) throw PlanError("theory plan infeasible: " + tp.infeasibility);
        const double cells = static_cast<double>(tp.m_phi) * d * static_cast<double>(tp.m_x);
        if (cells > 5e8 || tp.n_resample > 2e9) throw PlanError("theory plan too large to execute on this machine");
        rec.plan = SamplingPlan{static_cast<int>(tp.m_x), static_cast<int>(tp.m_phi), tp.epsilon,
                                static_cast<int>(tp.n_resample)};
    } else {
        const PracticalPlan& pp = cfg.practical;
        rec.plan = SamplingPlan{pp.m_x, pp.m_phi, pp.epsilon, pp.n_resample};
    }

    if (!rec.phase1_skipped) {
        rec.plan.validate(d, env.nu());
        if (rec.plan.budget() >= static_cast<std::uint64_t>(cfg.n)) {
            std::ostringstream os;
            os << "budget infeasible: n1 = " << rec.plan.budget() << " >= n = " << cfg.n;
            throw PlanError(os.str());
        }
    }

    env.set_query_limit(static_cast<std::uint64_t>(cfg.n));
    rec.mean_reward_trace.reserve(static_cast<std::size_t>(cfg.n));
    rec.reward_trace.reserve(static_cast<std::size_t>(cfg.n));

    if (!rec.phase1_skipped) {
        std::mt19937_64 rng(cfg.sampling_seed);
        const SamplingSets sets = draw_sampling_sets(rec.plan, d, rng);
        const MeasurementBundle bundle = collect_measurements(env, sets, rec.plan);
        rec.phase1_rounds = static_cast<std::int64_t>(bundle.budget_used);

        // Per-round mean rewards in query order: base points, then shifted
        // points grouped by direction index, each repeated N times.
        auto push_point = [&](int j, int i) {
            const double mean = env.mean_reward(sampling_point(sets, rec.plan.epsilon, j, i));
            for (int r = 0; r < rec.plan.n_resample; ++r) rec.mean_reward_trace.push_back(mean);
        };
        for (int j = 0; j < rec.plan.m_x; ++j) push_point(j, -1);
        for (int i = 0; i < rec.plan.m_phi; ++i)
            for (int j = 0; j < rec.plan.m_x; ++j) push_point(j, i);
        rec.reward_trace = bundle.raw_rewards;

        const double sigma_eff = env.sigma() / std::sqrt(static_cast<double>(rec.plan.n_resample));
        const LambdaInputs li{c2, rec.plan.epsilon, d, rec.plan.m_x, rec.plan.m_phi, k, sigma_eff,
                              cfg.constants.delta, cfg.constants.gamma};
        if (cfg.mode == RunMode::theory || cfg.practical.lambda_rule == LambdaRule::formula) {
            rec.lambda = compute_lambda(li);
        } else if (cfg.practical.lambda_rule == LambdaRule::absolute) {
            rec.lambda = cfg.practical.lambda_value;
        } else {
            rec.lambda = cfg.practical.lambda_value *
                         operator_norm(apply_adjoint(sets, bundle.y), cfg.solver.power_iters, cfg.solver.power_tol);
        }

        try {
            rec.recovery = recover_subspace(sets, bundle.y, rec.lambda, k, cfg.solver, &env.param_matrix());
        } catch (const RankError& e) {
            rec.status = "rank_collapse";
            rec.message = e.what();
            rec.a_hat = env.param_matrix(); // placeholder for the partial decomposition
            finish_record(rec, env, cfg.oracle_resolution);
            rec.r3 = 0.0;
            rec.r2 = 0.0;
            rec.total_regret = rec.r1;
            return rec;
        }
        rec.a_hat = rec.recovery->a_hat;
    }

    rec.subspace_err = subspace_error(env.param_matrix(), rec.a_hat);
    rec.phase2_rounds = cfg.n - rec.phase1_rounds;
    Phase2Result p2 = run_phase2(env, rec.a_hat, rec.phase2_rounds, cfg.phase2);
    rec.mean_reward_trace.insert(rec.mean_reward_trace.end(), p2.mean_reward_trace.begin(), p2.mean_reward_trace.end());
    rec.reward_trace.insert(rec.reward_trace.end(), p2.reward_trace.begin(), p2.reward_trace.end());
    rec.arm_trace = std::move(p2.arm_trace);
    rec.phase2_lattice = std::move(p2.played_lattice);
    rec.phase2_m = p2.grid.m;
    rec.phase2_arms = p2.grid.size();

    finish_record(rec, env, cfg.oracle_resolution);
    rec.r3_bound_value = r3_bound(static_cast<double>(rec.phase2_rounds), c2, k, env.nu(), rec.subspace_err);
    return rec;
}

} // namespace cablp
