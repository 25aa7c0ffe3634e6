#include "rhpg/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>

namespace rhpg::verify {

namespace {

Matrix scalar1(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

struct MarginTracker {
    double worst = std::numeric_limits<double>::infinity();
    long long failures = 0;

    void record(double margin) {
        worst = std::min(worst, margin);
        if (margin < 0.0) ++failures;
    }
};

} // namespace

SystemModel benchmark_model() { return SystemModel(scalar1(5.0), scalar1(0.33)); }

CostSpec benchmark_cost() {
    return CostSpec(PdMatrix(scalar1(1.0)), PdMatrix(scalar1(1.0)),
                    PdMatrix(scalar1(300.0)));
}

PdMatrix benchmark_sigma0() { return PdMatrix(scalar1(1.0)); }

SystemModel random_model(RngStream& rng, int n, int m) {
    static constexpr double kRhoTargets[] = {0.5, 0.95, 1.5, 3.0};
    const double target =
        kRhoTargets[static_cast<std::size_t>(rng.uniform01() * 4.0) % 4];
    Matrix a(n, n);
    while (true) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
        const double rho = spectral_radius(a);
        if (rho < 1e-8) continue;
        a *= target / rho;
        Eigen::JacobiSVD<Matrix> svd(a);
        if (svd.singularValues().minCoeff() >= 1e-3) break;
    }
    Matrix b(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
    return SystemModel(a, b);
}

PdMatrix random_pd(RngStream& rng, int n, double scale) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    Matrix w = scale * (g.transpose() * g) + 0.1 * Matrix::Identity(n, n);
    return PdMatrix(w);
}

SuiteReport check_contraction(std::uint64_t seed, int n_max, long long trials) {
    SuiteReport rep;
    rep.suite = "contraction";
    rep.seed = seed;
    rep.trials = trials;
    RngStream root(seed);
    MarginTracker mt;
    for (long long i = 0; i < trials; ++i) {
        RngStream rng = root.substream(static_cast<std::uint64_t>(i));
        const int n = 1 + static_cast<int>(rng.uniform01() * n_max) % n_max;
        const int m = 1 + static_cast<int>(rng.uniform01() * n) % n;
        SystemModel model = random_model(rng, n, m);
        CostSpec cost(random_pd(rng, n), random_pd(rng, m), random_pd(rng, n, 3.0));
        PdMatrix x = random_pd(rng, n, 2.0);
        PdMatrix y = random_pd(rng, n, 2.0);
        const double lhs = riemannian_distance(riccati_operator(x, model, cost),
                                               riccati_operator(y, model, cost));
        const double rhs = riemannian_distance(x, y) + 1e-9;
        mt.record(rhs - lhs);
    }
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

SuiteReport check_delta_bounds(std::uint64_t seed, long long trials) {
    SuiteReport rep;
    rep.suite = "delta-bounds";
    rep.seed = seed;
    rep.trials = trials;
    RngStream root(seed);
    MarginTracker mt;
    for (long long i = 0; i < trials; ++i) {
        RngStream rng = root.substream(static_cast<std::uint64_t>(i));
        const int n = 1 + static_cast<int>(rng.uniform01() * 4.0) % 4;
        PdMatrix v = random_pd(rng, n);
        PdMatrix u = [&] {
            if (i % 2 == 0) return random_pd(rng, n);
            // Nearby pair so the upper-bound hypothesis triggers often.
            Matrix p(n, n);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) p(r, c) = rng.uniform(-1.0, 1.0);
            Matrix sym = p + p.transpose();
            const double s =
                0.2 * rng.uniform01() * v.lambda_min() / std::max(1e-12, spectral_norm(sym));
            return PdMatrix(v.mat() + s * sym);
        }();
        const double delta = riemannian_distance(u, v);
        const double diff_norm = spectral_norm(u.mat() - v.mat());
        const double norm_v = spectral_norm(v.mat());
        // |U - V| <= |V| e^delta delta
        mt.record(norm_v * std::exp(delta) * delta - diff_norm + 1e-9);
        // delta <= |V^-1| |U-V|_F / (1 - |V^-1| |U-V|) under its hypothesis
        const double vinv = spectral_norm(v.inverse().mat());
        if (vinv * diff_norm < 1.0) {
            const double bound =
                vinv * (u.mat() - v.mat()).norm() / (1.0 - vinv * diff_norm);
            mt.record(bound - delta + 1e-9);
        }
    }
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

namespace {

// One unbiasedness pass; returns the worst componentwise margin.
double unbiasedness_margin(std::uint64_t seed, long long samples) {
    SystemModel model = benchmark_model();
    CostSpec cost = benchmark_cost();
    InitialStateModel init(benchmark_sigma0());
    ExplorationConfig expl(1.0);
    const PolicyGain k(Matrix::Zero(1, 1));
    const PdMatrix p_tilde = cost.Q_N; // empty frozen chain
    const Matrix exact =
        exact_surrogate_gradient(k, p_tilde, init.Sigma0, model, cost);

    RngStream rng(seed);
    RolloutWorkspace ws;
    ws.resize(model.n(), model.m());
    Matrix ghat(1, 1);
    Matrix sum = Matrix::Zero(1, 1);
    Matrix sum_sq = Matrix::Zero(1, 1);
    std::vector<PolicyGain> frozen;
    for (long long s = 0; s < samples; ++s) {
        one_point_gradient_inplace(k.K, frozen, model, cost, init, expl, rng, ws, ghat);
        sum += ghat;
        sum_sq += ghat.cwiseProduct(ghat);
    }
    const double ns = static_cast<double>(samples);
    double worst = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
        const double mean = sum(i) / ns;
        const double var = std::max(0.0, sum_sq(i) / ns - mean * mean);
        const double se = std::sqrt(var / ns);
        worst = std::min(worst, 3.0 * se - std::abs(mean - exact(i)));
    }
    return worst;
}

} // namespace

SuiteReport check_unbiasedness(std::uint64_t seed, long long samples) {
    SuiteReport rep;
    rep.suite = "unbiasedness";
    rep.seed = seed;
    rep.trials = samples;
    double margin = unbiasedness_margin(seed, samples);
    if (margin < 0.0) {
        // A 3-sigma band fails about 0.3% of the time; retry once at 4x.
        margin = unbiasedness_margin(mix64(seed), 4 * samples);
        rep.note = "retried at 4x samples";
        rep.trials = 5 * samples;
    }
    rep.worst_margin = margin;
    rep.failures = margin < 0.0 ? 1 : 0;
    return rep;
}

namespace {

double second_moment_margin(std::uint64_t seed, long long samples, Xi1Form xi1_form,
                            double* out_bound) {
    SystemModel model = benchmark_model();
    CostSpec cost = benchmark_cost();
    InitialStateModel init(benchmark_sigma0());
    const double sigma = 1.0;
    const double zeta = 0.1;
    ExplorationConfig expl(sigma);

    // Stage N-1 with the start iterate at zero: P_tilde = Q_N = P*_N exactly,
    // satisfying the |P_tilde - P*| <= a hypothesis with margin a.
    const PdMatrix p_tilde = cost.Q_N;
    const PolicyGain k0(Matrix::Zero(1, 1));
    const double j0 = exact_surrogate_cost(k0, p_tilde, init.Sigma0, model, cost);
    const double j_star =
        (riccati_operator(p_tilde, model, cost).mat() * init.Sigma0.mat()).trace();
    const ValueSequence rde = solve_rde(model, cost, 1);
    const ConstantsBundle bundle = compute_constants(model, cost, rde);
    const InnerLoopPlan plan =
        inner_loop_plan(j0, j_star, bundle, init.Sigma0, model, cost, sigma, init.C_m,
                        zeta, /*varsigma=*/1.0, xi1_form);
    *out_bound = plan.xi3;
    const double radius = std::sqrt(plan.C_tilde);

    RngStream rng(seed);
    RolloutWorkspace ws;
    ws.resize(1, 1);
    Matrix ghat(1, 1);
    std::vector<PolicyGain> frozen;
    double sum = 0.0, sum_sq = 0.0;
    for (long long s = 0; s < samples; ++s) {
        // Fresh K uniform in the Frobenius ball |K|_F <= sqrt(C_tilde).
        Matrix k = scalar1(radius * (2.0 * rng.uniform01() - 1.0));
        one_point_gradient_inplace(k, frozen, model, cost, init, expl, rng, ws, ghat);
        const double g2 = ghat.squaredNorm();
        sum += g2;
        sum_sq += g2 * g2;
    }
    const double ns = static_cast<double>(samples);
    const double mean = sum / ns;
    const double var = std::max(0.0, sum_sq / ns - mean * mean);
    const double se = std::sqrt(var / ns);
    return 1.05 * plan.xi3 + 3.0 * se - mean;
}

} // namespace

SuiteReport check_second_moment(std::uint64_t seed, long long samples, Xi1Form xi1_form) {
    SuiteReport rep;
    rep.suite = "second-moment";
    rep.seed = seed;
    rep.trials = samples;
    double bound = 0.0;
    double margin = second_moment_margin(seed, samples, xi1_form, &bound);
    if (margin < 0.0) {
        margin = second_moment_margin(mix64(seed), 4 * samples, xi1_form, &bound);
        rep.note = "retried at 4x samples";
        rep.trials = 5 * samples;
    }
    rep.worst_margin = margin;
    rep.failures = margin < 0.0 ? 1 : 0;
    return rep;
}

SuiteReport check_smoothness_convexity(std::uint64_t seed, long long trials) {
    SuiteReport rep;
    rep.suite = "convexity-smoothness";
    rep.seed = seed;
    rep.trials = trials;
    RngStream root(seed);
    MarginTracker mt;
    for (long long i = 0; i < trials; ++i) {
        RngStream rng = root.substream(static_cast<std::uint64_t>(i));
        // Half the trials on the benchmark instance, half on random ones.
        const bool use_benchmark = (i % 2 == 0);
        const int n = use_benchmark ? 1 : 1 + static_cast<int>(rng.uniform01() * 3.0) % 3;
        const int m = use_benchmark ? 1 : 1 + static_cast<int>(rng.uniform01() * n) % n;
        SystemModel model = use_benchmark ? benchmark_model() : random_model(rng, n, m);
        CostSpec cost = use_benchmark
                            ? benchmark_cost()
                            : CostSpec(random_pd(rng, n), random_pd(rng, m),
                                       random_pd(rng, n, 3.0));
        PdMatrix sigma0 = use_benchmark ? benchmark_sigma0() : random_pd(rng, n);
        // P_tilde = Q_N = P*_N keeps the smoothness hypothesis satisfied.
        const PdMatrix p_tilde = cost.Q_N;
        const ValueSequence rde = solve_rde(model, cost, 1);
        const ConstantsBundle bundle = compute_constants(model, cost, rde);
        const double mu = 4.0 * sigma0.lambda_min() * cost.R.lambda_min();
        const double big_l = bundle.C3 * sigma0.lambda_max();

        Matrix k1(m, n), k2(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) {
                k1(r, c) = rng.uniform(-20.0, 20.0);
                k2(r, c) = rng.uniform(-20.0, 20.0);
            }
        const PolicyGain g1(k1), g2(k2);
        const Matrix d1 = exact_surrogate_gradient(g1, p_tilde, sigma0, model, cost);
        const Matrix d2 = exact_surrogate_gradient(g2, p_tilde, sigma0, model, cost);
        const Matrix dk = k2 - k1;
        const double scale = std::max(1.0, dk.squaredNorm());

        // Strong convexity: <grad2 - grad1, K2 - K1> >= (mu/2) |K2 - K1|_F^2.
        const double inner = ((d2 - d1).transpose() * dk).trace();
        mt.record((inner - 0.5 * mu * dk.squaredNorm()) / scale + 1e-9);

        // Smoothness: |grad2 - grad1|_F <= L |K2 - K1|_F.
        mt.record((big_l * dk.norm() - (d2 - d1).norm()) / std::max(1.0, dk.norm()) + 1e-9);

        // PL inequality at K1.
        const PolicyGain k_opt = gain_from_value(p_tilde, model, cost);
        const double j1 = exact_surrogate_cost(g1, p_tilde, sigma0, model, cost);
        const double j_opt = exact_surrogate_cost(k_opt, p_tilde, sigma0, model, cost);
        mt.record((d1.squaredNorm() - mu * (j1 - j_opt)) / std::max(1.0, j1 - j_opt) + 1e-9);

        // Central finite differences of the exact surrogate cost.
        Matrix fd(m, n);
        const double h = 1e-4;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) {
                Matrix kp = k1, km = k1;
                kp(r, c) += h;
                km(r, c) -= h;
                fd(r, c) = (exact_surrogate_cost(PolicyGain(kp), p_tilde, sigma0, model,
                                                 cost) -
                            exact_surrogate_cost(PolicyGain(km), p_tilde, sigma0, model,
                                                 cost)) /
                           (2.0 * h);
            }
        const double rel = (fd - d1).norm() / std::max(1.0, d1.norm());
        mt.record(1e-6 - rel);
    }
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

namespace {

// One decay check; records margins into mt. Returns false if Q_N does not
// dominate the stationary solution (caller decides whether that skips).
// Value-matrix errors are measured in the P*-relative norm for symmetric
// matrices, which the decay argument controls; the closed-loop contraction
// factor is the P*-induced operator norm. The floor absorbs the resolution
// limit of the stationary solve once the recursion error saturates.
bool rde_decay_one(const SystemModel& model, const CostSpec& cost, int N,
                   MarginTracker& mt) {
    const RiccatiSolution sol = solve_are(model, cost);
    if (!psd_geq(cost.Q_N.mat(), sol.P_star.mat())) return false;
    const ValueSequence seq = solve_rde(model, cost, N);
    const Matrix a_cl = closed_loop(model, sol.K_star);
    const double a_star = induced_norm(a_cl, sol.P_star);
    const double gap_n = weighted_sym_norm(cost.Q_N.mat() - sol.P_star.mat(), sol.P_star);
    const double floor = 1e-8 * std::max(1.0, gap_n);
    for (int t = 0; t <= N; ++t) {
        const double lhs = weighted_sym_norm(
            seq.P[static_cast<std::size_t>(t)].mat() - sol.P_star.mat(), sol.P_star);
        const double bound = std::pow(a_star, 2.0 * (N - t)) * gap_n;
        mt.record((bound + floor - lhs) / std::max(1.0, bound));
    }
    // Gain-error transfer through the last recursion step.
    const double k_err = spectral_norm(seq.K[0].K - sol.K_star.K);
    const double p1_err = spectral_norm(seq.P[1].mat() - sol.P_star.mat());
    const double transfer = spectral_norm(a_cl) * spectral_norm(model.B) /
                            cost.R.lambda_min() * p1_err;
    const double k_floor = 1e-9 * std::max(1.0, spectral_norm(sol.K_star.K));
    mt.record((transfer + k_floor - k_err) / std::max(1.0, transfer));
    return true;
}

} // namespace

SuiteReport check_rde_decay_instance(const SystemModel& model, const CostSpec& cost,
                                     int N) {
    SuiteReport rep;
    rep.suite = "rde-decay";
    rep.trials = 1;
    MarginTracker mt;
    if (!rde_decay_one(model, cost, N, mt)) {
        rep.skipped = true;
        rep.note = "terminal weight does not dominate the stationary solution";
        return rep;
    }
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

SuiteReport check_rde_decay(std::uint64_t seed, int random_instances, int N) {
    SuiteReport rep;
    rep.suite = "rde-decay";
    rep.seed = seed;
    rep.trials = 1 + random_instances;
    RngStream root(seed);
    MarginTracker mt;
    if (!rde_decay_one(benchmark_model(), benchmark_cost(), N, mt)) {
        rep.skipped = true;
        rep.note = "terminal weight does not dominate the stationary solution";
        return rep;
    }
    int done = 0;
    std::uint64_t attempt = 0;
    while (done < random_instances && attempt < 50ull * static_cast<std::uint64_t>(random_instances)) {
        RngStream rng = root.substream(++attempt);
        const int n = 1 + static_cast<int>(rng.uniform01() * 3.0) % 3;
        const int m = 1 + static_cast<int>(rng.uniform01() * n) % n;
        try {
            SystemModel model = random_model(rng, n, m);
            CostSpec base(random_pd(rng, n), random_pd(rng, m), random_pd(rng, n));
            // Re-anchor the terminal weight above the stationary solution.
            const RiccatiSolution sol = solve_are(model, base);
            CostSpec cost(base.Q, base.R,
                          PdMatrix(sol.P_star.mat() + random_pd(rng, n).mat()));
            if (!rde_decay_one(model, cost, N, mt)) continue;
            ++done;
        } catch (const std::runtime_error&) {
            continue; // non-stabilizable draw; resample
        }
    }
    if (done < random_instances) {
        rep.note = "only " + std::to_string(done) + " random instances qualified";
    }
    rep.trials = 1 + done;
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

namespace {

// One propagation subject; returns false when the instance does not qualify
// (singular A, non-dominating terminal weight, or an unresolvable horizon).
bool propagate_instance(const SystemModel& model, const CostSpec& cost,
                        double eps_inst, long long trials_per_instance,
                        RngStream& rng, MarginTracker& mt, long long& trials_run) {
        const RiccatiSolution sol = solve_are(model, cost);
        if (!model.a_invertible || !psd_geq(cost.Q_N.mat(), sol.P_star.mat())) {
            return false;
        }
        const double a_star = induced_norm(closed_loop(model, sol.K_star), sol.P_star);
        const double stab_limit = (1.0 - a_star) /
                                  (std::sqrt(condition_number(sol.P_star)) *
                                   spectral_norm(model.B));
        const bool check_stab = eps_inst < stab_limit;
        const int N = horizon_for_accuracy(sol, model, cost, eps_inst);
        // Horizons this long push the stage-wise distance budget below what
        // double precision can resolve; such draws are not usable subjects.
        if (N > 300) return false;
        const ValueSequence rde = solve_rde(model, cost, N);
        const ConstantsBundle bundle = compute_constants(model, cost, rde);
        const ToleranceSchedule sched =
            tolerance_schedule(eps_inst, N, bundle, cost, ScheduleVariant::Riemannian);
        const double delta_budget = stage_delta_budget(eps_inst, N, bundle, cost);
        const Eigen::Index m = model.m(), n = model.n();

        for (long long trial = 0; trial < trials_per_instance; ++trial) {
            RngStream trng = rng.substream(static_cast<std::uint64_t>(trial));
            PdMatrix p_tilde = cost.Q_N;
            Matrix k0(m, n);
            for (int h = N - 1; h >= 0; --h) {
                const PolicyGain k_opt = gain_from_value(p_tilde, model, cost, h);
                Matrix dir(m, n);
                if (trial == 0) {
                    dir.setOnes(); // worst-case sign-aligned direction in 1-D
                } else if (trial == 1) {
                    dir.setConstant(-1.0);
                } else {
                    for (Eigen::Index r = 0; r < m; ++r)
                        for (Eigen::Index c = 0; c < n; ++c) dir(r, c) = trng.normal();
                    if (dir.norm() == 0.0) dir.setOnes();
                }
                dir *= sched.values[static_cast<std::size_t>(h)] / dir.norm();
                const PolicyGain k_h(k_opt.K + dir, h);
                const PdMatrix p_tilde_star = riccati_operator(p_tilde, model, cost);
                p_tilde = surrogate_value_update(p_tilde, k_h, model, cost);
                if (h == 0) k0 = k_h.K;
                if (h >= 1) {
                    // Lemma-level invariants at stage h (value index t = h).
                    const double p_err = spectral_norm(
                        rde.P[static_cast<std::size_t>(h)].mat() - p_tilde.mat());
                    mt.record((bundle.a - p_err) / std::max(1.0, bundle.a));
                    const double d = riemannian_distance(p_tilde_star, p_tilde);
                    // 1e-12 absorbs eigensolve roundoff in the distance.
                    mt.record((delta_budget + 1e-12 - d) /
                              std::max(1e-12, delta_budget));
                }
            }
            const double gap = spectral_norm(k0 - sol.K_star.K);
            mt.record((eps_inst - gap) / eps_inst);
            if (check_stab) {
                const StabilityReport st =
                    check_stabilizing(model, PolicyGain(k0), sol.P_star);
                mt.record(1.0 - st.rho);
            }
            ++trials_run;
        }
        return true;
}

} // namespace

SuiteReport check_outer_loop_propagation_instance(const SystemModel& model,
                                                  const CostSpec& cost, double eps,
                                                  std::uint64_t seed,
                                                  long long trials) {
    SuiteReport rep;
    rep.suite = "outer-loop-propagation";
    rep.seed = seed;
    MarginTracker mt;
    long long trials_run = 0;
    RngStream rng(seed);
    bool qualified = false;
    try {
        qualified = propagate_instance(model, cost, eps, trials, rng, mt, trials_run);
    } catch (const std::runtime_error& e) {
        rep.skipped = true;
        rep.note = e.what();
        return rep;
    }
    if (!qualified) {
        rep.skipped = true;
        rep.note = "instance does not meet the propagation preconditions";
        return rep;
    }
    rep.trials = trials_run;
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

SuiteReport check_outer_loop_propagation(std::uint64_t seed, int random_instances,
                                         long long trials_per_instance, double eps) {
    SuiteReport rep;
    rep.suite = "outer-loop-propagation";
    rep.seed = seed;
    RngStream root(seed);
    MarginTracker mt;
    long long trials_run = 0;
    int instances_run = 0;

    {
        RngStream rng = root.substream(0xB00Full);
        if (propagate_instance(benchmark_model(), benchmark_cost(), eps,
                               trials_per_instance, rng, mt, trials_run)) {
            ++instances_run;
        }
    }
    int attempts = 0;
    while (instances_run < 1 + random_instances && attempts < 50 * (random_instances + 1)) {
        RngStream rng = root.substream(static_cast<std::uint64_t>(++attempts));
        const int n = 1 + static_cast<int>(rng.uniform01() * 2.0) % 2;
        const int m = 1 + static_cast<int>(rng.uniform01() * n) % n;
        try {
            SystemModel model = random_model(rng, n, m);
            if (!model.a_invertible) continue;
            CostSpec base(random_pd(rng, n), random_pd(rng, m), random_pd(rng, n));
            RiccatiSolution sol = solve_are(model, base);
            CostSpec cost(base.Q, base.R,
                          PdMatrix(sol.P_star.mat() + random_pd(rng, n).mat()));
            // Pick an eps small enough to engage the stabilization sub-check.
            const double a_star =
                induced_norm(closed_loop(model, sol.K_star), sol.P_star);
            const double stab_limit = (1.0 - a_star) /
                                      (std::sqrt(condition_number(sol.P_star)) *
                                       spectral_norm(model.B));
            const double eps_inst = std::min(eps, 0.5 * stab_limit);
            if (propagate_instance(model, cost, eps_inst, trials_per_instance, rng, mt,
                                   trials_run)) {
                ++instances_run;
            }
        } catch (const std::runtime_error&) {
            continue; // non-stabilizable draw; resample
        }
    }

    rep.trials = trials_run;
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    if (instances_run < 1 + random_instances) {
        rep.note = "only " + std::to_string(instances_run) + " instances qualified";
    }
    return rep;
}

SuiteReport check_completion_of_squares(std::uint64_t seed, long long trials) {
    SuiteReport rep;
    rep.suite = "completion-of-squares";
    rep.seed = seed;
    rep.trials = trials;
    RngStream root(seed);
    MarginTracker mt;
    for (long long i = 0; i < trials; ++i) {
        RngStream rng = root.substream(static_cast<std::uint64_t>(i));
        const int n = 1 + static_cast<int>(rng.uniform01() * 4.0) % 4;
        const int m = 1 + static_cast<int>(rng.uniform01() * n) % n;
        SystemModel model = random_model(rng, n, m);
        CostSpec cost(random_pd(rng, n), random_pd(rng, m), random_pd(rng, n, 3.0));
        PdMatrix p_next = random_pd(rng, n, 4.0);
        Matrix k(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) k(r, c) = rng.uniform(-3.0, 3.0);
        const PolicyGain gk(k);
        const PolicyGain k_opt = gain_from_value(p_next, model, cost);
        const Matrix lhs = riccati_operator(p_next, model, cost).mat() -
                           surrogate_value_update(p_next, gk, model, cost).mat();
        const Matrix dk = k_opt.K - k;
        const Matrix rhs =
            -dk.transpose() *
            (cost.R.mat() + model.B.transpose() * p_next.mat() * model.B) * dk;
        const double scale =
            std::max({1.0, lhs.norm(), surrogate_value_update(p_next, gk, model, cost)
                                           .mat()
                                           .norm()});
        mt.record(1e-10 * scale - (lhs - rhs).norm());
    }
    rep.failures = mt.failures;
    rep.worst_margin = mt.worst;
    return rep;
}

std::vector<std::string> suite_names() {
    return {"contraction",          "delta-bounds",        "unbiasedness",
            "second-moment",        "convexity-smoothness", "rde-decay",
            "outer-loop-propagation", "completion-of-squares"};
}

SuiteReport run_suite(const std::string& name, std::uint64_t seed, long long trials) {
    if (name == "contraction") {
        return check_contraction(seed, 4, trials > 0 ? trials : 1000);
    }
    if (name == "delta-bounds") {
        return check_delta_bounds(seed, trials > 0 ? trials : 1000);
    }
    if (name == "unbiasedness") {
        return check_unbiasedness(seed, trials > 0 ? trials : 1000000);
    }
    if (name == "second-moment") {
        return check_second_moment(seed, trials > 0 ? trials : 100000);
    }
    if (name == "convexity-smoothness") {
        return check_smoothness_convexity(seed, trials > 0 ? trials : 1000);
    }
    if (name == "rde-decay") {
        return check_rde_decay(seed, trials > 0 ? static_cast<int>(trials) : 100);
    }
    if (name == "outer-loop-propagation") {
        return check_outer_loop_propagation(seed, 20,
                                            trials > 0 ? trials : 100);
    }
    if (name == "completion-of-squares") {
        return check_completion_of_squares(seed, trials > 0 ? trials : 1000);
    }
    throw std::invalid_argument("unknown suite: " + name);
}

std::string format_report(const SuiteReport& rep) {
    char buf[256];
    if (rep.skipped) {
        std::snprintf(buf, sizeof(buf), "%-24s SKIPPED (%s) seed=%llu", rep.suite.c_str(),
                      rep.note.c_str(), static_cast<unsigned long long>(rep.seed));
        return buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "%-24s trials=%-8lld failures=%-4lld worst_margin=%- .6e seed=%llu%s%s",
                  rep.suite.c_str(), rep.trials, rep.failures, rep.worst_margin,
                  static_cast<unsigned long long>(rep.seed),
                  rep.note.empty() ? "" : "  note=", rep.note.c_str());
    return buf;
}

} // namespace rhpg::verify
