#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhpg/solver.hpp"

namespace rhpg::verify {

struct SuiteReport {
    std::string suite;
    long long trials = 0;
    long long failures = 0;
    double worst_margin = 0.0; // smallest slack seen; negative means a violation
    std::uint64_t seed = 0;
    bool skipped = false;
    std::string note;

    bool passed() const { return !skipped && failures == 0; }
};

// The scalar benchmark instance used as the default subject of the suites
// (A = 5, B = 0.33, Q = R = 1, Q_N = 300, Sigma0 = 1).
SystemModel benchmark_model();
CostSpec benchmark_cost();
PdMatrix benchmark_sigma0();

// Random problem generator shared by the suites: A entries uniform in [-1,1]
// rescaled to a spectral radius drawn from {0.5, 0.95, 1.5, 3}, resampled
// until sigma_min(A) >= 1e-3; B uniform; PD factors are G'G + 0.1 I.
SystemModel random_model(RngStream& rng, int n, int m);
PdMatrix random_pd(RngStream& rng, int n, double scale = 1.0);

/// Riccati-operator non-expansiveness in the Riemannian distance.
SuiteReport check_contraction(std::uint64_t seed, int n_max, long long trials);

/// Two-sided bounds tying |U - V| to the Riemannian distance.
SuiteReport check_delta_bounds(std::uint64_t seed, long long trials);

/// Sample mean of the one-point estimate vs the exact surrogate gradient,
/// within 3 standard errors componentwise. One automatic retry at 4x samples.
SuiteReport check_unbiasedness(std::uint64_t seed, long long samples);

/// Empirical second moment of the estimate against its xi3 upper bound
/// (1.05 slack plus 3 standard errors).
SuiteReport check_second_moment(std::uint64_t seed, long long samples,
                                Xi1Form xi1_form = Xi1Form::DisplayedLemma);

/// Strong convexity, smoothness, the PL inequality, and finite-difference
/// agreement of the exact surrogate gradient.
SuiteReport check_smoothness_convexity(std::uint64_t seed, long long trials);

/// Exponential decay of the value recursion toward the stationary solution,
/// plus the gain-error transfer bound, on one instance. Skips (with a note)
/// when the terminal weight does not dominate the stationary solution.
SuiteReport check_rde_decay_instance(const SystemModel& model, const CostSpec& cost,
                                     int N);

/// Aggregate decay suite: the benchmark instance plus `random_instances`
/// random stabilizable ones with re-anchored terminal weights.
SuiteReport check_rde_decay(std::uint64_t seed, int random_instances, int N = 12);

/// Synthetic outer loop on one instance: perturb each stage minimizer by
/// exactly the stage tolerance and verify the final-gap, stage-wise
/// value-error, and stage-wise distance invariants, plus stabilization of the
/// output. Skips when the preconditions fail.
SuiteReport check_outer_loop_propagation_instance(const SystemModel& model,
                                                  const CostSpec& cost, double eps,
                                                  std::uint64_t seed,
                                                  long long trials);

/// Aggregate propagation suite over the benchmark plus random instances.
SuiteReport check_outer_loop_propagation(std::uint64_t seed, int random_instances,
                                         long long trials_per_instance,
                                         double eps = 0.1);

/// Value-matrix identity relating the stage minimizer to an arbitrary gain.
SuiteReport check_completion_of_squares(std::uint64_t seed, long long trials);

std::vector<std::string> suite_names();

/// Run a suite by name with its default sizes (trials <= 0 keeps the default).
SuiteReport run_suite(const std::string& name, std::uint64_t seed, long long trials = 0);

std::string format_report(const SuiteReport& rep);

} // namespace rhpg::verify
