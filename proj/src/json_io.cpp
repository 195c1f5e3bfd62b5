#include "cablp/json_io.hpp"

#include "cablp/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <random>

namespace cablp {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json matrix_to_json(const MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("matrix must be a nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) throw ConfigError("ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

Json vector_to_json(const VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) throw ConfigError("vector must be an array");
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

EnvironmentDescriptor environment_descriptor_from_json(const Json& j) {
    try {
        EnvironmentDescriptor d;
        d.family = family_from_string(j.at("family").get<std::string>());
        d.params = j.value("params", Json::object());
        d.k = j.at("k").get<int>();
        d.d = j.at("d").get<int>();
        d.sigma = j.value("sigma", 0.0);
        d.nu = j.value("nu", 0.1);
        d.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("A")) {
            const Json& a = j.at("A");
            if (a.is_string()) {
                if (a.get<std::string>() != "random_orthonormal")
                    throw ConfigError("A must be a matrix or \"random_orthonormal\"");
            } else {
                d.a = matrix_from_json(a);
            }
        }
        if (d.k < 1 || d.d < d.k) throw ConfigError("environment needs 1 <= k <= d");
        return d;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("environment descriptor: ") + e.what());
    }
}

Json to_json(const EnvironmentDescriptor& desc) {
    Json j;
    j["family"] = std::string(to_string(desc.family));
    j["params"] = desc.params;
    j["k"] = desc.k;
    j["d"] = desc.d;
    j["sigma"] = desc.sigma;
    j["nu"] = desc.nu;
    j["seed"] = desc.seed;
    j["A"] = desc.a ? matrix_to_json(*desc.a) : Json("random_orthonormal");
    return j;
}

MeanRewardSpec make_mean_spec(const EnvironmentDescriptor& desc) {
    const Json& p = desc.params;
    auto center = [&] {
        if (p.contains("center")) {
            VectorXd c = vector_from_json(p.at("center"));
            if (c.size() != desc.k) throw ConfigError("center must have length k");
            return c;
        }
        return VectorXd(VectorXd::Zero(desc.k));
    };
    switch (desc.family) {
    case Family::linear: {
        VectorXd w = VectorXd::Zero(desc.k);
        w(0) = 1.0;
        if (p.contains("weights")) w = vector_from_json(p.at("weights"));
        if (w.size() != desc.k) throw ConfigError("weights must have length k");
        return MeanRewardSpec::linear(w);
    }
    case Family::centered_quadratic: return MeanRewardSpec::centered_quadratic(center());
    case Family::norm_squared: return MeanRewardSpec::norm_squared(desc.k);
    case Family::gaussian_bump: return MeanRewardSpec::gaussian_bump(center(), p.value("width", 0.5));
    }
    throw ConfigError("unknown family");
}

Environment make_environment(const EnvironmentDescriptor& desc, std::optional<std::uint64_t> noise_seed) {
    LinearParamMatrix a;
    if (desc.a) {
        if (desc.a->rows() != desc.k || desc.a->cols() != desc.d) throw ConfigError("A must be k x d");
        a = make_row_orthonormal(*desc.a);
    } else {
        // Separate stream so that A does not depend on the noise seed.
        std::mt19937_64 rng(desc.seed ^ 0xA5A5A5A5DEADBEEFULL);
        a = random_orthonormal(desc.k, desc.d, rng);
    }
    return Environment(std::move(a), make_mean_spec(desc), desc.sigma, desc.nu, noise_seed.value_or(desc.seed));
}

Json to_json(const SamplingPlan& plan) {
    return Json{{"m_x", plan.m_x}, {"m_phi", plan.m_phi}, {"epsilon", plan.epsilon}, {"N", plan.n_resample}};
}

SamplingPlan sampling_plan_from_json(const Json& j) {
    try {
        return SamplingPlan{j.at("m_x").get<int>(), j.at("m_phi").get<int>(), j.at("epsilon").get<double>(),
                            j.value("N", 1)};
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("sampling plan: ") + e.what());
    }
}

Json to_json(const MeasurementBundle& bundle) {
    return Json{{"y", vector_to_json(bundle.y)},
                {"plan", to_json(bundle.plan)},
                {"seed", bundle.seed},
                {"budget_used", bundle.budget_used}};
}

MeasurementBundle measurement_bundle_from_json(const Json& j) {
    try {
        MeasurementBundle b;
        b.y = vector_from_json(j.at("y"));
        b.plan = sampling_plan_from_json(j.at("plan"));
        b.seed = j.value("seed", std::uint64_t{0});
        b.budget_used = j.value("budget_used", std::uint64_t{0});
        return b;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("measurement bundle: ") + e.what());
    }
}

Json to_json(const RecoveryResult& r) {
    Json j;
    j["singular_values"] = vector_to_json(r.singular_values);
    j["lambda"] = r.lambda;
    j["residual_norm"] = r.residual_norm;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["A_hat"] = matrix_to_json(r.a_hat.matrix());
    if (r.subspace_err) j["subspace_error"] = *r.subspace_err;
    return j;
}

Json to_json(const TheoryParams& tp) {
    const auto finite_or_null = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
    Json j;
    j["inputs"] = {{"n", tp.inputs.n},         {"d", tp.inputs.d},         {"k", tp.inputs.k},
                   {"sigma", tp.inputs.sigma}, {"C2", tp.inputs.c2},       {"alpha", tp.inputs.alpha},
                   {"nu", tp.inputs.nu}};
    const TheoryConstants& c = tp.constants;
    j["constants"] = {{"delta", c.delta},
                      {"rho", c.rho},
                      {"p", c.p},
                      {"c1", c.c1},
                      {"gamma", c.gamma},
                      {"C0", c.c0},
                      {"C_prime", c.c_prime},
                      {"f_exponent_mode", c.f_mode == FExponentMode::standard ? "standard" : "remark"},
                      {"epsilon_rule", c.epsilon_rule == EpsilonRule::midpoint ? "midpoint" : "geometric"}};
    j["derived"] = {{"f", tp.f},
                    {"q_delta", tp.q_delta},
                    {"u_delta", tp.u_delta},
                    {"m_x", tp.m_x},
                    {"m_phi", tp.m_phi},
                    {"m", tp.m},
                    {"C_prime_effective", tp.c_prime_effective},
                    {"N_threshold", tp.n_threshold},
                    {"N", tp.n_resample},
                    {"sigma_eff", tp.sigma_eff},
                    {"a1", tp.a1},
                    {"b1", tp.b1},
                    {"discriminant", tp.discriminant},
                    {"epsilon_interval", {tp.epsilon_interval.lo, tp.epsilon_interval.hi}},
                    {"epsilon_cap", tp.epsilon_cap},
                    {"epsilon", tp.epsilon},
                    {"n1", tp.n1},
                    {"m_phi_below_m_x_d", tp.mphi_below_mx_d}};
    j["feasible"] = tp.feasible;
    j["infeasibility"] = tp.infeasibility;
    j["min_feasible_n"] = finite_or_null(tp.min_feasible_n);
    return j;
}

Json to_json(const ConditioningReport& r) {
    return Json{{"singular_values", vector_to_json(r.singular_values)},
                {"alpha_hat", r.alpha_hat},
                {"n_samples", r.n_samples}};
}

namespace {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

TheoryConstants theory_constants_from_json(const Json& j) {
    TheoryConstants c;
    try {
        read_opt(j, "delta", c.delta);
        read_opt(j, "rho", c.rho);
        read_opt(j, "p", c.p);
        read_opt(j, "c1", c.c1);
        read_opt(j, "gamma", c.gamma);
        read_opt(j, "C0", c.c0);
        read_opt(j, "C_prime", c.c_prime);
        if (j.contains("f_exponent_mode")) {
            const auto m = j.at("f_exponent_mode").get<std::string>();
            if (m == "standard") c.f_mode = FExponentMode::standard;
            else if (m == "remark") c.f_mode = FExponentMode::remark;
            else throw ConfigError("f_exponent_mode must be standard or remark");
        }
        if (j.contains("epsilon_rule")) {
            const auto m = j.at("epsilon_rule").get<std::string>();
            if (m == "midpoint") c.epsilon_rule = EpsilonRule::midpoint;
            else if (m == "geometric") c.epsilon_rule = EpsilonRule::geometric;
            else throw ConfigError("epsilon_rule must be midpoint or geometric");
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("constants: ") + e.what());
    }
    c.validate();
    return c;
}

PracticalPlan practical_plan_from_json(const Json& j) {
    PracticalPlan p;
    try {
        read_opt(j, "m_x", p.m_x);
        read_opt(j, "m_phi", p.m_phi);
        read_opt(j, "N", p.n_resample);
        read_opt(j, "epsilon", p.epsilon);
        if (j.contains("lambda_rule")) {
            const auto r = j.at("lambda_rule").get<std::string>();
            if (r == "formula") p.lambda_rule = LambdaRule::formula;
            else if (r == "relative") p.lambda_rule = LambdaRule::relative;
            else if (r == "absolute") p.lambda_rule = LambdaRule::absolute;
            else throw ConfigError("lambda_rule must be formula, relative or absolute");
        }
        read_opt(j, "lambda", p.lambda_value);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("practical plan: ") + e.what());
    }
    return p;
}

Phase2Config phase2_config_from_json(const Json& j) {
    Phase2Config c;
    try {
        if (j.contains("exploration")) {
            const auto r = j.at("exploration").get<std::string>();
            if (r == "noise_only") c.scale_rule = ExplorationScale::noise_only;
            else if (r == "conservative") c.scale_rule = ExplorationScale::conservative;
            else throw ConfigError("exploration must be noise_only or conservative");
        }
        read_opt(j, "scale", c.scale_override);
        read_opt(j, "M", c.m_override);
        read_opt(j, "multi_epoch", c.multi_epoch);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("phase2: ") + e.what());
    }
    return c;
}

SolverSettings solver_settings_from_json(const Json& j) {
    SolverSettings s;
    try {
        read_opt(j, "max_iters", s.max_iters);
        read_opt(j, "rel_tol", s.rel_tol);
        read_opt(j, "stage_rel_tol", s.stage_rel_tol);
        read_opt(j, "feas_tol", s.feas_tol);
        read_opt(j, "continuation", s.continuation);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    return s;
}

Json to_json(const RunRecord& rec, bool include_traces) {
    Json j;
    j["status"] = rec.status;
    if (!rec.message.empty()) j["message"] = rec.message;
    j["mode"] = std::string(to_string(rec.mode));
    j["n"] = rec.n;
    j["env_seed"] = rec.env_seed;
    j["sampling_seed"] = rec.sampling_seed;
    if (rec.theory) j["theory"] = to_json(*rec.theory);
    j["phase1_skipped"] = rec.phase1_skipped;
    if (!rec.phase1_skipped) {
        j["plan"] = to_json(rec.plan);
        j["lambda"] = rec.lambda;
    }
    j["phase1_rounds"] = rec.phase1_rounds;
    j["phase2_rounds"] = rec.phase2_rounds;
    j["phase2_M"] = rec.phase2_m;
    j["phase2_arms"] = rec.phase2_arms;
    if (rec.recovery) j["recovery"] = to_json(*rec.recovery);
    j["subspace_err"] = rec.subspace_err;
    j["R1"] = rec.r1;
    j["R2"] = rec.r2;
    j["R3"] = rec.r3;
    j["R_total"] = rec.total_regret;
    j["r3_bound"] = rec.r3_bound_value;
    j["x_star_value"] = rec.x_star_value;
    j["x_star_star_value"] = rec.x_star_star_value;
    if (rec.x_star_u.size() > 0) j["x_star_u"] = vector_to_json(rec.x_star_u);
    if (rec.y_star_star.size() > 0) j["y_star_star"] = vector_to_json(rec.y_star_star);
    if (include_traces) {
        j["regret_trace"] = rec.regret_trace;
        j["reward_trace"] = rec.reward_trace;
        j["arm_trace"] = rec.arm_trace;
    }
    return j;
}

void write_trace_csv(std::ostream& os, const RunRecord& rec, int k) {
    os << "round,phase,arm_id";
    for (int i = 1; i <= k; ++i) os << ",y" << i;
    os << ",reward,instantaneous_regret\n";
    const auto n1 = static_cast<std::size_t>(rec.phase1_rounds);
    for (std::size_t t = 0; t < rec.regret_trace.size(); ++t) {
        os << (t + 1);
        if (t < n1) {
            os << ",1,-1";
            for (int i = 0; i < k; ++i) os << ',';
        } else {
            const std::size_t r = t - n1;
            os << ",2," << rec.arm_trace[r];
            for (int i = 0; i < k; ++i)
                os << ',' << format_double(rec.phase2_lattice(i, static_cast<Eigen::Index>(r)));
        }
        const double reward = t < rec.reward_trace.size() ? rec.reward_trace[t] : std::nan("");
        os << ',' << format_double(reward) << ',' << format_double(rec.regret_trace[t]) << '\n';
    }
}

} // namespace cablp
