#include "rhpg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rhpg {

namespace {

constexpr double kE = 2.718281828459045235360287471352662498;

long long ceil_to_count(double x, const char* what) {
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative count");
    const double c = std::ceil(x);
    if (c >= 9.0e18) return std::numeric_limits<long long>::max();
    return static_cast<long long>(c);
}

} // namespace

ConstantsBundle compute_constants(const SystemModel& model, const CostSpec& cost,
                                  const ValueSequence& rde) {
    ConstantsBundle b;
    b.a = 0.5 * cost.Q.lambda_min();
    b.phi = 0.0;
    for (const PolicyGain& k : rde.K) {
        b.phi = std::max(b.phi, spectral_norm(closed_loop(model, k)));
    }
    const double norm_b = spectral_norm(model.B);
    const double lmin_r = cost.R.lambda_min();
    b.C1 = b.phi * norm_b / lmin_r;
    const double qn_plus_a = cost.Q_N.lambda_max() + b.a;
    b.C2 = 2.0 * b.phi * spectral_norm(model.A) *
           (1.0 + qn_plus_a * norm_b * norm_b / lmin_r);
    Matrix g = cost.R.mat() +
               model.B.transpose() *
                   (cost.Q_N.mat() + b.a * Matrix::Identity(model.n(), model.n())) *
                   model.B;
    b.C3 = 2.0 * spectral_norm(g);
    return b;
}

ToleranceSchedule tolerance_schedule(double eps, int N, const ConstantsBundle& bundle,
                                     const CostSpec& cost, ScheduleVariant variant) {
    if (!(eps > 0.0)) throw std::invalid_argument("tolerance_schedule: eps must be positive");
    if (N < 1) throw std::invalid_argument("tolerance_schedule: N must be >= 1");
    const double a = bundle.a;
    const double c1 = bundle.C1;
    const double c2 = bundle.C2;
    const double c3 = bundle.C3;
    const double qn = cost.Q_N.lambda_max();
    const double nd = static_cast<double>(N);

    ToleranceSchedule sched;
    sched.variant = variant;
    sched.eps = eps;
    sched.values.resize(static_cast<std::size_t>(N));
    sched.values[0] = eps / 4.0;

    if (variant == ScheduleVariant::Riemannian) {
        double common = std::min(std::sqrt(a / (c3 * nd)),
                                 std::sqrt(a * a / (2.0 * kE * nd * qn * c3)));
        if (c1 > 0.0) {
            common = std::min(common, std::sqrt(a * eps / (8.0 * kE * nd * c1 * qn * c3)));
            common = std::min(common, std::sqrt(eps / (4.0 * c1 * c3)));
        }
        for (int h = 1; h < N; ++h) sched.values[static_cast<std::size_t>(h)] = common;
        return sched;
    }

    // Prior variant: the geometric C2^{h-2} factors.
    for (int h = 1; h < N; ++h) {
        double v = std::sqrt(a / c3);
        if (h == 1) {
            if (c1 > 0.0) v = std::min(v, 0.5 * std::sqrt(eps / (c1 * c3)));
        } else {
            const double c2_pow = std::pow(c2, static_cast<double>(h - 2));
            v = std::min(v, std::sqrt(a / (c2_pow * c3)));
            if (c1 > 0.0) v = std::min(v, 0.5 * std::sqrt(eps / (c1 * c2_pow * c3)));
        }
        sched.values[static_cast<std::size_t>(h)] = v;
    }
    return sched;
}

double stage_delta_budget(double eps, int N, const ConstantsBundle& bundle,
                          const CostSpec& cost) {
    const double qn = cost.Q_N.lambda_max();
    double m = std::min(bundle.a / (2.0 * kE * qn), 1.0);
    if (bundle.C1 > 0.0) m = std::min(m, eps / (8.0 * kE * bundle.C1 * qn));
    return m / static_cast<double>(N);
}

double theory_iteration_count(double mu, double theta, double j0, double varsigma,
                              double zeta) {
    return 40.0 / (7.0 * mu * varsigma * varsigma * zeta) * theta * j0;
}

InnerLoopPlan inner_loop_plan(double j0, std::optional<double> j_star,
                              const ConstantsBundle& bundle, const PdMatrix& sigma0,
                              const SystemModel& model, const CostSpec& cost,
                              double sigma, double c_m, double zeta, double varsigma,
                              Xi1Form xi1_form) {
    if (!(j0 > 0.0)) throw std::invalid_argument("inner_loop_plan: J0 must be positive");
    if (!(zeta > 0.0 && zeta < 1.0)) {
        throw std::invalid_argument("inner_loop_plan: zeta must lie in (0,1)");
    }
    if (!(varsigma > 0.0)) throw std::invalid_argument("inner_loop_plan: varsigma must be positive");

    InnerLoopPlan plan;
    plan.sigma = sigma;
    plan.zeta = zeta;
    plan.varsigma = varsigma;
    plan.J0 = j0;
    plan.mu = 4.0 * sigma0.lambda_min() * cost.R.lambda_min();
    plan.L = bundle.C3 * sigma0.lambda_max();
    plan.C_tilde = (10.0 / zeta * j0 + j_star.value_or(0.0)) /
                   (sigma0.lambda_min() * cost.R.lambda_min());

    const double norm_q = cost.Q.lambda_max();
    const double norm_r = cost.R.lambda_max();
    const double norm_qn_a = cost.Q_N.lambda_max() + bundle.a;
    const double norm_a = spectral_norm(model.A);
    const double norm_b = spectral_norm(model.B);
    const double ct = plan.C_tilde;
    const double r_term = (xi1_form == Xi1Form::DisplayedLemma) ? ct * ct : ct;
    plan.xi1 = (norm_q + 2.0 * norm_r * r_term +
                2.0 * norm_qn_a * (norm_a * norm_a + 2.0 * norm_b * norm_b * ct)) *
               std::pow(c_m, 1.5);
    plan.xi2 = 2.0 * (norm_r + 2.0 * norm_qn_a * norm_b * norm_b) * std::sqrt(c_m);
    const double m = static_cast<double>(model.m());
    plan.xi3 = plan.xi1 * plan.xi1 * m / (sigma * sigma) +
               2.0 * plan.xi1 * plan.xi2 * m * (m + 2.0) +
               sigma * sigma * plan.xi2 * plan.xi2 * m * (m + 2.0) * (m + 4.0);
    plan.theta = std::max(2.0, 2.0 * plan.L * plan.xi3 / (plan.mu * plan.mu * j0));
    plan.T_prescribed = theory_iteration_count(plan.mu, plan.theta, j0, varsigma, zeta);
    plan.T = ceil_to_count(plan.T_prescribed, "inner_loop_plan");
    return plan;
}

InnerLoopResult run_inner_loop(const PolicyGain& k_init, const InnerLoopPlan& plan,
                               std::span<const PolicyGain> frozen_gains,
                               const SystemModel& model, const CostSpec& cost,
                               const InitialStateModel& init, const ExplorationConfig& expl,
                               RngStream& rng, const PdMatrix& p_next,
                               GradientSource grad_source, int diag_stride) {
    InnerLoopResult out;
    out.K = k_init;

    // Stage minimizer and optimum value, for diagnostics only.
    PolicyGain k_opt = gain_from_value(p_next, model, cost);
    double j_opt = 0.0;
    if (diag_stride > 0) {
        j_opt = exact_surrogate_cost(k_opt, p_next, init.Sigma0, model, cost);
    }

    RolloutWorkspace ws;
    ws.resize(model.n(), model.m());
    Matrix ghat(model.m(), model.n());
    Matrix k = k_init.K;
    for (long long t = 0; t < plan.T; ++t) {
        const double alpha = plan.step_size(t);
        if (grad_source == GradientSource::OnePoint) {
            one_point_gradient_inplace(k, frozen_gains, model, cost, init, expl, rng,
                                       ws, ghat);
            out.diag.oracle_calls += 1;
        } else {
            ghat = exact_surrogate_gradient(PolicyGain(k, k_init.stage), p_next,
                                            init.Sigma0, model, cost);
        }
        k -= alpha * ghat;
        if (!k.allFinite()) {
            std::ostringstream os;
            os << "run_inner_loop: non-finite iterate at t=" << t
               << " (divergence); stage " << k_init.stage;
            throw std::runtime_error(os.str());
        }
        if (diag_stride > 0 && ((t + 1) % diag_stride == 0 || t + 1 == plan.T)) {
            IterateLogEntry e;
            e.t = t + 1;
            e.gain_gap_f = (k - k_opt.K).norm();
            e.optimality_gap = exact_surrogate_cost(PolicyGain(k, k_init.stage), p_next,
                                                    init.Sigma0, model, cost) -
                               j_opt;
            e.oracle_calls = out.diag.oracle_calls;
            out.diag.entries.push_back(e);
        }
    }
    out.K = PolicyGain(k, k_init.stage);
    out.diag.final_gain_gap_f = (k - k_opt.K).norm();
    return out;
}

namespace {

InnerLoopPlan build_stage_plan(const RhpgOptions& options, const ConstantsBundle& bundle,
                               const InitialStateModel& init, const SystemModel& model,
                               const CostSpec& cost, double j0, double j_star,
                               double varsigma) {
    const InnerLoopSettings& s = options.inner;
    switch (s.source) {
        case PlanSource::Theory:
            return inner_loop_plan(j0, j_star, bundle, init.Sigma0, model, cost,
                                   options.sigma, init.C_m, options.zeta, varsigma,
                                   s.xi1_form);
        case PlanSource::Calibrated: {
            InnerLoopPlan plan;
            plan.sigma = options.sigma;
            plan.zeta = options.zeta;
            plan.varsigma = varsigma;
            plan.J0 = j0;
            plan.mu = 4.0 * init.Sigma0.lambda_min() * cost.R.lambda_min();
            plan.L = bundle.C3 * init.Sigma0.lambda_max();
            plan.C_tilde = (10.0 / options.zeta * j0 + j_star) /
                           (init.Sigma0.lambda_min() * cost.R.lambda_min());
            // Local surrogate for the second moment near the start iterate:
            // the one-point estimate has size about J0/sigma, so
            // xi3_hat = m * C_m * J0^2 / sigma^2.
            const double m = static_cast<double>(model.m());
            const double xi3_hat =
                m * init.C_m * j0 * j0 / (options.sigma * options.sigma);
            plan.xi3 = xi3_hat;
            plan.theta = std::max({2.0, 2.0 * plan.L / plan.mu,
                                   2.0 * plan.L * xi3_hat / (plan.mu * plan.mu * j0)});
            plan.T_prescribed = s.t_scale * std::pow(options.eps, -s.t_exponent);
            plan.T = ceil_to_count(plan.T_prescribed, "calibrated plan");
            return plan;
        }
        case PlanSource::Fixed: {
            InnerLoopPlan plan;
            plan.sigma = options.sigma;
            plan.zeta = options.zeta;
            plan.varsigma = varsigma;
            plan.J0 = j0;
            plan.mu = 4.0 * init.Sigma0.lambda_min() * cost.R.lambda_min();
            plan.L = bundle.C3 * init.Sigma0.lambda_max();
            plan.theta = std::max(2.0, s.fixed_theta);
            plan.T_prescribed = static_cast<double>(s.fixed_T);
            plan.T = s.fixed_T;
            return plan;
        }
    }
    throw std::logic_error("build_stage_plan: unknown plan source");
}

} // namespace

RHPGResult run_rhpg(const SystemModel& model, const CostSpec& cost,
                    const InitialStateModel& init, const RhpgOptions& options,
                    RngStream& rng, const RiccatiSolution* are_solution) {
    if (options.N < 1) throw std::invalid_argument("run_rhpg: N must be >= 1");
    const int N = options.N;

    const ValueSequence rde = solve_rde(model, cost, N);
    const ConstantsBundle bundle = compute_constants(model, cost, rde);
    const ToleranceSchedule sched =
        tolerance_schedule(options.eps, N, bundle, cost, options.schedule);

    RHPGResult result;
    result.gains.resize(static_cast<std::size_t>(N),
                        PolicyGain(Matrix::Zero(model.m(), model.n())));
    result.plans.resize(static_cast<std::size_t>(N));
    result.diags.resize(static_cast<std::size_t>(N));

    // frozen[0] is the gain for stage h+1; rebuilt as h moves backward.
    std::vector<PolicyGain> frozen;
    PdMatrix p_tilde_next = cost.Q_N; // downstream value matrix, harness side
    Matrix k_prev = Matrix::Zero(model.m(), model.n());
    bool have_prev = false;

    for (int h = N - 1; h >= 0; --h) {
        Matrix k0 = Matrix::Zero(model.m(), model.n());
        if (options.k_init == KInitRule::PreviousStage && have_prev) k0 = k_prev;
        const PolicyGain k_init(k0, h);

        const double j0 =
            exact_surrogate_cost(k_init, p_tilde_next, init.Sigma0, model, cost);
        const double j_star =
            (riccati_operator(p_tilde_next, model, cost).mat() * init.Sigma0.mat())
                .trace();
        const double varsigma = sched.values[static_cast<std::size_t>(h)];

        InnerLoopPlan plan = build_stage_plan(options, bundle, init, model, cost, j0,
                                              j_star, varsigma);
        if (plan.T > options.inner.max_iterations) {
            std::ostringstream os;
            os << "run_rhpg: stage " << h << " requires " << plan.T_prescribed
               << " inner iterations, beyond the runnable budget "
               << options.inner.max_iterations
               << "; supply a practical iteration rule";
            throw std::runtime_error(os.str());
        }

        ExplorationConfig expl(options.sigma);
        InnerLoopResult inner =
            run_inner_loop(k_init, plan, frozen, model, cost, init, expl, rng,
                           p_tilde_next, options.gradient, options.diag_stride);

        result.gains[static_cast<std::size_t>(h)] = inner.K;
        result.plans[static_cast<std::size_t>(h)] = plan;
        result.diags[static_cast<std::size_t>(h)] = std::move(inner.diag);
        result.total_oracle_calls += result.diags[static_cast<std::size_t>(h)].oracle_calls;

        p_tilde_next = surrogate_value_update(p_tilde_next, inner.K, model, cost);
        frozen.insert(frozen.begin(), inner.K);
        k_prev = inner.K.K;
        have_prev = true;
    }

    result.K0 = result.gains[0];
    if (are_solution != nullptr) {
        result.final_gap = spectral_norm(result.K0.K - are_solution->K_star.K);
        const StabilityReport rep =
            check_stabilizing(model, result.K0, are_solution->P_star);
        result.stabilizing = rep.stabilizing;
        result.stab_margin = rep.margin;
    }
    return result;
}

double prior_complexity_exponent(const ConstantsBundle& bundle, double a_k_star_norm) {
    if (!(a_k_star_norm > 0.0 && a_k_star_norm < 1.0)) {
        throw std::invalid_argument(
            "prior_complexity_exponent: the closed-loop induced norm must lie in (0,1)");
    }
    return 1.0 + std::log(bundle.C2) / (2.0 * std::log(1.0 / a_k_star_norm));
}

} // namespace rhpg
