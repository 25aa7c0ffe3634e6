#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rhpg/lqr_core.hpp"
#include "rhpg/rollout.hpp"

namespace rhpg {

// Outer-loop constants derived from the model and the finite-horizon gains.
struct ConstantsBundle {
    double a = 0.0;   // sigma_min(Q)/2
    double phi = 0.0; // max_t |A - B K*_t|
    double C1 = 0.0;  // phi |B| / lambda_min(R)
    double C2 = 0.0;  // 2 phi |A| (1 + |Q_N + aI| |B|^2 / lambda_min(R))
    double C3 = 0.0;  // 2 |R + B'(Q_N + aI)B|
};

ConstantsBundle compute_constants(const SystemModel& model, const CostSpec& cost,
                                  const ValueSequence& rde);

enum class ScheduleVariant { Riemannian, Prior };

// Per-stage inner-loop accuracy targets; values[h] for h = 0..N-1.
struct ToleranceSchedule {
    ScheduleVariant variant = ScheduleVariant::Riemannian;
    double eps = 0.0;
    std::vector<double> values;
};

ToleranceSchedule tolerance_schedule(double eps, int N, const ConstantsBundle& bundle,
                                     const CostSpec& cost, ScheduleVariant variant);

/// Stage-wise Riemannian-distance budget implied by eps and N:
/// (1/N) * min(eps / (8 e C1 |Q_N|), a / (2 e |Q_N|), 1).
double stage_delta_budget(double eps, int N, const ConstantsBundle& bundle,
                          const CostSpec& cost);

// Which second-moment coefficient to use: the stated bound carries the squared
// ball radius, the derivation chain the unsquared one. Both are selectable.
enum class Xi1Form { DisplayedLemma, DerivationChain };

struct InnerLoopPlan {
    double mu = 0.0;
    double L = 0.0;
    double C_tilde = 0.0;
    double xi1 = 0.0;
    double xi2 = 0.0;
    double xi3 = 0.0;
    double theta = 0.0;
    double T_prescribed = 0.0; // real-valued iteration count before ceiling
    long long T = 0;           // applied iteration count
    double zeta = 0.0;
    double varsigma = 0.0;
    double sigma = 0.0;
    double J0 = 0.0;

    double step_size(long long t) const { return (2.0 / mu) / (static_cast<double>(t) + theta); }
};

/// Real-valued iteration requirement 40 theta J0 / (7 mu varsigma^2 zeta).
double theory_iteration_count(double mu, double theta, double j0, double varsigma,
                              double zeta);

/// Theory-prescribed plan: mu = 4 smin(Sigma0) smin(R), L = C3 |Sigma0|,
/// xi per the second-moment bound, theta = max(2, 2 L xi3 / (mu^2 J0)),
/// T = ceil(40 theta J0 / (7 mu varsigma^2 zeta)). j_star absent means the
/// conservative lower bound 0 inside C_tilde.
InnerLoopPlan inner_loop_plan(double j0, std::optional<double> j_star,
                              const ConstantsBundle& bundle, const PdMatrix& sigma0,
                              const SystemModel& model, const CostSpec& cost,
                              double sigma, double c_m, double zeta, double varsigma,
                              Xi1Form xi1_form = Xi1Form::DisplayedLemma);

struct IterateLogEntry {
    long long t = 0;
    double optimality_gap = 0.0; // exact surrogate suboptimality at iterate t
    double gain_gap_f = 0.0;     // |K_t - stage minimizer|_F
    long long oracle_calls = 0;
};

struct IterateDiagnostics {
    std::vector<IterateLogEntry> entries;
    long long oracle_calls = 0;
    double final_gain_gap_f = 0.0;
};

enum class GradientSource { OnePoint, ExactModel }; // ExactModel is a test hook

struct InnerLoopResult {
    PolicyGain K;
    IterateDiagnostics diag;
};

/// T iterations of K <- K - alpha_t * grad_hat, alpha_t = (2/mu)/(t + theta).
/// p_next is the frozen downstream value matrix (diagnostics and the exact-
/// gradient hook; the one-point path never reads it).
InnerLoopResult run_inner_loop(const PolicyGain& k_init, const InnerLoopPlan& plan,
                               std::span<const PolicyGain> frozen_gains,
                               const SystemModel& model, const CostSpec& cost,
                               const InitialStateModel& init, const ExplorationConfig& expl,
                               RngStream& rng, const PdMatrix& p_next,
                               GradientSource grad_source = GradientSource::OnePoint,
                               int diag_stride = 0);

enum class KInitRule { PreviousStage, Zero };
enum class PlanSource { Theory, Calibrated, Fixed };

struct InnerLoopSettings {
    PlanSource source = PlanSource::Theory;
    Xi1Form xi1_form = Xi1Form::DisplayedLemma;
    // Calibrated rule: theta = max(2, 2L/mu, 2 L m C_m J0 / (mu^2 sigma^2)),
    // T = ceil(t_scale * eps^{-t_exponent}).
    double t_scale = 2.0e5;
    double t_exponent = 0.5;
    // Fixed rule (practical mode): user-supplied values.
    double fixed_theta = 2.0;
    long long fixed_T = 0;
    // Refuse to run any stage beyond this many iterations.
    long long max_iterations = 4'000'000'000LL;
};

struct RhpgOptions {
    int N = 1;
    double eps = 0.1;
    ScheduleVariant schedule = ScheduleVariant::Riemannian;
    double zeta = 0.1;  // per-stage failure budget
    double sigma = 1.0;
    KInitRule k_init = KInitRule::Zero;
    GradientSource gradient = GradientSource::OnePoint;
    InnerLoopSettings inner;
    int diag_stride = 0;
};

struct RHPGResult {
    PolicyGain K0;
    std::vector<PolicyGain> gains;       // by stage h = 0..N-1
    std::vector<InnerLoopPlan> plans;    // by stage h
    std::vector<IterateDiagnostics> diags;
    long long total_oracle_calls = 0;
    std::optional<double> final_gap;     // |K0 - K*|, when the ARE solution is known
    std::optional<bool> stabilizing;
    std::optional<double> stab_margin;
};

/// Backward outer loop h = N-1..0. The inner loop only touches the rollout
/// oracle; the model is used by the harness for plans and diagnostics.
/// are_solution, when present, enables gap/stability reporting.
RHPGResult run_rhpg(const SystemModel& model, const CostSpec& cost,
                    const InitialStateModel& init, const RhpgOptions& options,
                    RngStream& rng, const RiccatiSolution* are_solution = nullptr);

/// Epsilon-exponent of the prior receding-horizon schedule,
/// 1 + log(C2) / (2 log(1 / |A_K*|_*)); reported next to this method's 2.
double prior_complexity_exponent(const ConstantsBundle& bundle, double a_k_star_norm);

} // namespace rhpg
