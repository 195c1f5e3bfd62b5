#pragma once

#include "cablp/json_io.hpp"
#include "cablp/orchestrator.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cablp {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// seed_i = master XOR mix64(i).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct ExperimentConfig {
    EnvironmentDescriptor environment;
    RunMode mode = RunMode::practical;
    PracticalPlan practical;
    TheoryConstants constants;
    double alpha = 0.0;
    std::vector<std::int64_t> horizons;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "out";
    double oracle_resolution = 1e-3;
    Phase2Config phase2;
    SolverSettings solver;
    /// Phase 2 on the true subspace (or on a copy rotated to this error).
    bool inject_true_subspace = false;
    double inject_subspace_error = 0.0;
    bool write_traces = false;
    int threads = 1;

    void validate() const;
};

/// Parses the JSON document. Seeds come from "seeds": [..] or from
/// "seed_count" + "master_seed" through derive_seed.
ExperimentConfig experiment_config_from_json(const Json& j);
Json to_json(const ExperimentConfig& cfg);

struct CellResult {
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    std::string message;
    double r_total = 0;
    double r1 = 0;
    double r2 = 0;
    double r3 = 0;
    double subspace_err = 0;
    std::int64_t n1 = 0;
};

struct AggregatePoint {
    std::int64_t n = 0;
    int runs = 0;
    int failed = 0;
    double mean_r = 0;
    double se_r = 0;
    double mean_r1 = 0;
    double mean_r2 = 0;
    double mean_r3 = 0;
    double mean_subspace_err = 0;
};

struct ExponentFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
};

struct SweepSummary {
    std::vector<CellResult> cells;
    std::vector<AggregatePoint> aggregates;
    int failed_cells = 0;
    std::optional<ExponentFit> fit;
};

/// Runs a single (n, seed) cell; infeasible plans and rank collapse come back
/// as failed cells. The full record is returned through `record` when given.
CellResult run_cell(const ExperimentConfig& cfg, std::int64_t n, std::uint64_t seed,
                    RunRecord* record = nullptr);

/// Every (n, seed) cell, per-run JSON, sweep.csv and summary.json under out_dir.
SweepSummary run_experiment(const ExperimentConfig& cfg);

/// Means and standard errors per horizon over successful cells, plus the
/// exponent fit when at least three horizons have data.
SweepSummary summarize(std::vector<CellResult> cells);

/// Least squares of log R against log n. Needs >= 3 points, all positive.
ExponentFit fit_regret_exponent(const std::vector<std::pair<double, double>>& points);

inline constexpr const char* sweep_csv_header = "n,seed,status,R_total,R1,R2,R3,subspace_err,n1";
void write_sweep_csv(std::ostream& os, const std::vector<CellResult>& cells);
std::vector<CellResult> read_sweep_csv(std::istream& is);

Json to_json(const SweepSummary& s);
SweepSummary sweep_summary_from_json(const Json& j);

/// Writes <stem>.svg (log-log regret vs n, error bars, fitted line) and
/// <stem>.csv. Throws Error("no data") on an empty summary.
void emit_plot_data(const SweepSummary& summary, const std::filesystem::path& stem);

} // namespace cablp
