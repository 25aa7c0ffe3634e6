#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rhpg/solver.hpp"

namespace rhpg {

enum class Mode { Experiment, Practical };
// Reduced: N = ceil(0.5 ln(1/eps)), the sweep's rule. Theorem: the full
// accuracy-driven horizon computed from the stationary solution.
enum class HorizonRule { Reduced, Theorem };

struct InstanceSpec {
    Matrix A, B, Q, R, Q_N, Sigma0;
};

struct ExperimentConfig {
    InstanceSpec instance;
    double sigma = 1.0;
    double delta_total = 0.1;
    std::vector<double> eps_list;
    int runs_per_eps = 100;
    std::uint64_t base_seed = 1;
    Mode mode = Mode::Experiment;
    ScheduleVariant schedule_variant = ScheduleVariant::Riemannian;
    KInitRule k_init_rule = KInitRule::Zero;
    HorizonRule horizon_rule = HorizonRule::Reduced;
    InnerLoopSettings inner;
    int practical_N = 0; // required in practical mode
    std::string output = "runs.csv";
    int jobs = 0; // 0 = all available processors
};

ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// The benchmark configuration: scalar instance A=5, B=0.33, Q=R=1, Q_N=300,
/// Sigma0=1, the twelve-point eps sweep, 100 runs per eps.
ExperimentConfig default_config();

struct RunRecord {
    double eps = 0.0;
    int eps_index = 0;
    int run_index = 0;
    std::uint64_t seed = 0;
    long long oracle_calls = 0;
    double final_gap = 0.0;
    bool stabilizing = false;
    double wall_time_s = 0.0;
};

struct EpsSummary {
    double eps = 0.0;
    int runs = 0;
    double mean_oracle_calls = 0.0;
    double mean_final_gap = 0.0;
    double stabilizing_fraction = 0.0;
    double mean_wall_time_s = 0.0;
};

struct ExperimentOutcome {
    std::vector<RunRecord> records;   // ordered by (eps index, run index)
    std::vector<EpsSummary> summaries;
};

struct PreparedInstance {
    SystemModel model;
    CostSpec cost;
    InitialStateModel init;
    std::optional<RiccatiSolution> are;
};

PreparedInstance prepare_instance(const ExperimentConfig& config);

/// One RHPG run at the given eps with an explicit seed.
RHPGResult solve_one(const ExperimentConfig& config, const PreparedInstance& inst,
                     double eps, std::uint64_t seed);

/// Full sweep; cells run on a worker pool with per-cell seeds, and the record
/// order is independent of the job count.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// CSV layout: one header row, data rows ordered by (eps index, run index),
/// then '#'-prefixed summary rows. All number formatting is locale-free.
void write_csv(const ExperimentOutcome& outcome, std::ostream& os);
void write_csv_file(const ExperimentOutcome& outcome, const std::string& path);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
};

/// Least-squares fit of log10(mean oracle calls) against log10(1/eps) over
/// the data rows of a CSV produced by write_csv. Needs >= 3 distinct eps.
SlopeFit fit_slope_csv(const std::string& path);
SlopeFit fit_slope(const std::vector<std::pair<double, double>>& eps_and_mean_calls);

/// log-log-ready columns (log10(1/eps), log10(mean_calls)) for plotting.
std::vector<std::pair<double, double>> loglog_points(const std::string& path);

/// Parse the data section of a CSV back into records (used by fit-slope and
/// the determinism checks).
std::vector<RunRecord> read_csv_records(const std::string& path);

int log_level(); // 0=error, 1=info, 2=debug; from RHPG_LOG

} // namespace rhpg
