#pragma once

#include "cablp/lowrank_recovery.hpp"
#include "cablp/orchestrator.hpp"
#include "cablp/phase1_sampling.hpp"
#include "cablp/reward_env.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace cablp {

using Json = nlohmann::json;

/// Serializable description of an Environment:
///   {"family": "centered-quadratic", "params": {"center": [..]}, "k": 2, "d": 20,
///    "sigma": 0.1, "nu": 0.5, "seed": 7, "A": "random_orthonormal" | [[..],..]}
/// params keys: "weights" (linear, default e_1), "center" (centered-quadratic,
/// gaussian-bump; default 0), "width" (gaussian-bump, default 0.5).
struct EnvironmentDescriptor {
    Family family = Family::norm_squared;
    Json params = Json::object();
    int k = 1;
    int d = 1;
    double sigma = 0.0;
    double nu = 0.1;
    std::uint64_t seed = 0;
    std::optional<MatrixXd> a; // row-major JSON; empty means random_orthonormal
};

EnvironmentDescriptor environment_descriptor_from_json(const Json& j);
Json to_json(const EnvironmentDescriptor& desc);

MeanRewardSpec make_mean_spec(const EnvironmentDescriptor& desc);
/// A comes from the descriptor (or a generator seeded from desc.seed);
/// the reward noise stream is seeded with noise_seed, defaulting to desc.seed.
Environment make_environment(const EnvironmentDescriptor& desc,
                             std::optional<std::uint64_t> noise_seed = std::nullopt);

Json matrix_to_json(const MatrixXd& m); // row-major nested arrays
MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);

Json to_json(const SamplingPlan& plan);
SamplingPlan sampling_plan_from_json(const Json& j);

Json to_json(const MeasurementBundle& bundle);
MeasurementBundle measurement_bundle_from_json(const Json& j);

Json to_json(const RecoveryResult& r);
Json to_json(const TheoryParams& tp);
Json to_json(const ConditioningReport& r);

TheoryConstants theory_constants_from_json(const Json& j);
PracticalPlan practical_plan_from_json(const Json& j);
Phase2Config phase2_config_from_json(const Json& j);
SolverSettings solver_settings_from_json(const Json& j);

/// Run summary; per-round traces only with include_traces.
Json to_json(const RunRecord& rec, bool include_traces = false);

/// round,phase,arm_id,y1..yk,reward,instantaneous_regret
void write_trace_csv(std::ostream& os, const RunRecord& rec, int k);

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double x);

} // namespace cablp
