#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rhpg/solver.hpp"
#include "rhpg/verification.hpp"

using namespace rhpg;

namespace {

Matrix scalar1(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

const double kA = 5.0, kB = 0.33, kQ = 1.0, kR = 1.0, kQN = 300.0;

// Scalar finite-horizon recursion evaluated with plain arithmetic, used as an
// independent oracle for the constants bundle.
void scalar_rde(int N, std::vector<double>& p, std::vector<double>& k) {
    p.assign(N + 1, 0.0);
    k.assign(N, 0.0);
    p[N] = kQN;
    for (int t = N - 1; t >= 0; --t) {
        k[t] = kB * p[t + 1] * kA / (kR + kB * kB * p[t + 1]);
        p[t] = kQ + kA * kA *
                        (p[t + 1] - p[t + 1] * p[t + 1] * kB * kB /
                                        (kR + kB * kB * p[t + 1]));
    }
}

} // namespace

TEST_CASE("constants bundle") {
    SystemModel model = verify::benchmark_model();
    CostSpec cost = verify::benchmark_cost();
    const int N = 3;
    ValueSequence rde = solve_rde(model, cost, N);
    ConstantsBundle b = compute_constants(model, cost, rde);

    std::vector<double> p, k;
    scalar_rde(N, p, k);
    double phi = 0.0;
    for (int t = 0; t < N; ++t) phi = std::max(phi, std::abs(kA - kB * k[t]));

    CHECK(b.a == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(b.phi == doctest::Approx(phi).epsilon(1e-10));
    CHECK(b.C1 == doctest::Approx(phi * kB / kR).epsilon(1e-10));
    CHECK(b.C2 ==
          doctest::Approx(2.0 * phi * kA * (1.0 + (kQN + 0.5) * kB * kB / kR))
              .epsilon(1e-10));
    CHECK(b.C3 == doctest::Approx(2.0 * (kR + kB * kB * (kQN + 0.5))).epsilon(1e-12));
    CHECK(b.C3 >= 2.0 * cost.R.lambda_min());

    // Doubling the state weight doubles its half-minimum.
    CostSpec q2(PdMatrix(scalar1(2.0)), cost.R, cost.Q_N);
    CHECK(compute_constants(model, q2, solve_rde(model, q2, N)).a ==
          doctest::Approx(1.0));

    // No control authority collapses the input-side constants.
    SystemModel no_b(scalar1(0.9), scalar1(0.0));
    ConstantsBundle nb = compute_constants(no_b, cost, solve_rde(no_b, cost, N));
    CHECK(nb.C1 == doctest::Approx(0.0));
    CHECK(nb.C3 == doctest::Approx(2.0 * kR));
}

TEST_CASE("tolerance schedule") {
    SystemModel model = verify::benchmark_model();
    CostSpec cost = verify::benchmark_cost();
    const int N = 5;
    ConstantsBundle b = compute_constants(model, cost, solve_rde(model, cost, N));
    const double eps = 1e-3;

    ToleranceSchedule riem =
        tolerance_schedule(eps, N, b, cost, ScheduleVariant::Riemannian);
    ToleranceSchedule prior = tolerance_schedule(eps, N, b, cost, ScheduleVariant::Prior);

    CHECK(riem.values[0] == doctest::Approx(eps / 4.0));
    CHECK(prior.values[0] == doctest::Approx(eps / 4.0));

    // Stage-independent beyond stage zero, equal to the four-term minimum.
    const double e_const = 2.718281828459045235360287471352662498;
    const double qn = kQN;
    const double expect = std::min(
        std::min(std::sqrt(b.a / (b.C3 * N)),
                 std::sqrt(b.a * b.a / (2.0 * e_const * N * qn * b.C3))),
        std::min(std::sqrt(b.a * eps / (8.0 * e_const * N * b.C1 * qn * b.C3)),
                 std::sqrt(eps / (4.0 * b.C1 * b.C3))));
    for (int h = 1; h < N; ++h) {
        CHECK(riem.values[h] == doctest::Approx(expect).epsilon(1e-14));
        CHECK(riem.values[h] == doctest::Approx(riem.values[1]));
    }

    // Geometric shrinkage of the older schedule once the eps term binds.
    for (int h = 2; h + 1 < N; ++h) {
        CHECK(prior.values[h + 1] / prior.values[h] ==
              doctest::Approx(1.0 / std::sqrt(b.C2)).epsilon(1e-12));
    }
    CHECK(prior.values[1] ==
          doctest::Approx(std::min(std::sqrt(b.a / b.C3),
                                   0.5 * std::sqrt(eps / (b.C1 * b.C3)))));

    CHECK_THROWS_AS(tolerance_schedule(-1.0, N, b, cost, ScheduleVariant::Riemannian),
                    std::invalid_argument);
}

TEST_CASE("theory plan") {
    SystemModel model = verify::benchmark_model();
    CostSpec cost = verify::benchmark_cost();
    PdMatrix sigma0 = PdMatrix::identity(1);
    const int N = 1;
    ConstantsBundle b = compute_constants(model, cost, solve_rde(model, cost, N));

    const double j0 = 7501.0;
    const double j_star = 223.750222486; // backward step of the terminal weight
    const double zeta = 0.1;
    const double varsigma = std::pow(10.0, -0.5) / 4.0;
    InnerLoopPlan plan = inner_loop_plan(j0, j_star, b, sigma0, model, cost,
                                         /*sigma=*/1.0, /*c_m=*/1.0, zeta, varsigma);

    CHECK(plan.mu == doctest::Approx(4.0));
    CHECK(plan.L == doctest::Approx(b.C3).epsilon(1e-14));
    CHECK(plan.C_tilde == doctest::Approx(100.0 * j0 + j_star).epsilon(1e-9));

    // Coefficient formulas recomputed directly.
    const double ct = plan.C_tilde;
    const double xi1 = (kQ + 2.0 * kR * ct * ct +
                        2.0 * (kQN + b.a) * (kA * kA + 2.0 * kB * kB * ct));
    const double xi2 = 2.0 * (kR + 2.0 * (kQN + b.a) * kB * kB);
    CHECK(plan.xi1 == doctest::Approx(xi1).epsilon(1e-12));
    CHECK(plan.xi2 == doctest::Approx(xi2).epsilon(1e-12));
    CHECK(plan.xi3 ==
          doctest::Approx(xi1 * xi1 + 2.0 * xi1 * xi2 * 3.0 + xi2 * xi2 * 15.0)
              .epsilon(1e-12));
    CHECK(plan.theta ==
          doctest::Approx(2.0 * plan.L * plan.xi3 / (16.0 * j0)).epsilon(1e-12));
    CHECK(plan.theta >= 2.0);
    CHECK(plan.T_prescribed ==
          doctest::Approx(theory_iteration_count(4.0, plan.theta, j0, varsigma, zeta)));

    // The worst-case requirement is far beyond anything runnable.
    CHECK(plan.T_prescribed > 1e20);

    // The derivation-chain coefficient drops the square.
    InnerLoopPlan alt = inner_loop_plan(j0, j_star, b, sigma0, model, cost, 1.0, 1.0,
                                        zeta, varsigma, Xi1Form::DerivationChain);
    const double xi1_alt = (kQ + 2.0 * kR * ct +
                            2.0 * (kQN + b.a) * (kA * kA + 2.0 * kB * kB * ct));
    CHECK(alt.xi1 == doctest::Approx(xi1_alt).epsilon(1e-12));
    CHECK(alt.xi1 < plan.xi1);

    // Half the failure budget doubles the requirement at fixed theta.
    CHECK(theory_iteration_count(4.0, 10.0, j0, varsigma, zeta / 2.0) ==
          doctest::Approx(2.0 * theory_iteration_count(4.0, 10.0, j0, varsigma, zeta)));

    CHECK_THROWS_AS(inner_loop_plan(-1.0, j_star, b, sigma0, model, cost, 1.0, 1.0,
                                    zeta, varsigma),
                    std::invalid_argument);
}

TEST_CASE("step size schedule") {
    InnerLoopPlan plan;
    plan.mu = 4.0;
    plan.theta = 33.7;
    for (long long t : {0LL, 1LL, 17LL, 100000LL}) {
        CHECK(plan.step_size(t) * plan.mu * (static_cast<double>(t) + plan.theta) ==
              doctest::Approx(2.0).epsilon(1e-15));
    }
}

TEST_CASE("inner loop with the exact-gradient hook") {
    SystemModel model = verify::benchmark_model();
    CostSpec cost = verify::benchmark_cost();
    InitialStateModel init{PdMatrix::identity(1)};
    ExplorationConfig expl(1.0);
    PdMatrix p_next = cost.Q_N;
    PolicyGain k_opt = gain_from_value(p_next, model, cost);

    InnerLoopPlan plan;
    plan.mu = 4.0;
    plan.L = 67.4489;
    plan.theta = 2.0 * plan.L / plan.mu; // alpha_0 = 1/L
    plan.sigma = 1.0;

    SUBCASE("zero iterations") {
        plan.T = 0;
        RngStream rng(41);
        InnerLoopResult res = run_inner_loop(PolicyGain(scalar1(3.0)), plan, {}, model,
                                             cost, init, expl, rng, p_next);
        CHECK(res.K.K(0, 0) == doctest::Approx(3.0));
        CHECK(res.diag.oracle_calls == 0);
    }

    SUBCASE("linear convergence to the stage minimizer") {
        plan.T = 10000;
        RngStream rng(42);
        InnerLoopResult res =
            run_inner_loop(PolicyGain(scalar1(0.0)), plan, {}, model, cost, init, expl,
                           rng, p_next, GradientSource::ExactModel);
        CHECK(res.diag.final_gain_gap_f <= 1e-6);
        CHECK(res.diag.oracle_calls == 0); // the hook consumes no oracle calls
    }

    SUBCASE("monotone gap once the step is inside 1/L") {
        plan.T = 200;
        RngStream rng(43);
        InnerLoopResult res =
            run_inner_loop(PolicyGain(scalar1(5.0)), plan, {}, model, cost, init, expl,
                           rng, p_next, GradientSource::ExactModel, /*diag_stride=*/1);
        REQUIRE(res.diag.entries.size() == 200);
        for (std::size_t i = 1; i < res.diag.entries.size(); ++i) {
            CHECK(res.diag.entries[i].gain_gap_f <=
                  res.diag.entries[i - 1].gain_gap_f + 1e-12);
            CHECK(res.diag.entries[i].optimality_gap >= -1e-9);
        }
    }

    SUBCASE("oracle-call accounting on the sampled path") {
        plan.T = 250;
        plan.theta = 1e6; // keep the random iterates tame
        RngStream rng(44);
        InnerLoopResult res =
            run_inner_loop(PolicyGain(scalar1(0.0)), plan, {}, model, cost, init, expl,
                           rng, p_next, GradientSource::OnePoint, /*diag_stride=*/1);
        CHECK(res.diag.oracle_calls == 250);
        for (std::size_t i = 0; i < res.diag.entries.size(); ++i) {
            CHECK(res.diag.entries[i].oracle_calls ==
                  static_cast<long long>(i) + 1); // one call per iteration
        }
    }
}

TEST_CASE("rhpg runs") {
    SystemModel model = verify::benchmark_model();
    CostSpec cost = verify::benchmark_cost();
    InitialStateModel init{PdMatrix::identity(1)};
    RiccatiSolution sol = solve_are(model, cost);

    SUBCASE("deterministic given the seed") {
        RhpgOptions opt;
        opt.N = 2;
        opt.eps = 0.1;
        opt.zeta = 0.05;
        opt.inner.source = PlanSource::Calibrated;
        opt.inner.t_scale = 2e4;
        RngStream r1(99), r2(99);
        RHPGResult a = run_rhpg(model, cost, init, opt, r1, &sol);
        RHPGResult b = run_rhpg(model, cost, init, opt, r2, &sol);
        REQUIRE(a.gains.size() == b.gains.size());
        for (std::size_t h = 0; h < a.gains.size(); ++h) {
            CHECK(std::memcmp(a.gains[h].K.data(), b.gains[h].K.data(),
                              sizeof(double) * a.gains[h].K.size()) == 0);
        }
        CHECK(a.total_oracle_calls == b.total_oracle_calls);
        CHECK(a.total_oracle_calls ==
              a.plans[0].T + a.plans[1].T); // exactly the planned budget
    }

    SUBCASE("no control authority pulls the gain to zero") {
        SystemModel no_b(scalar1(0.5), scalar1(0.0));
        CostSpec unit(PdMatrix(scalar1(1.0)), PdMatrix(scalar1(1.0)),
                      PdMatrix(scalar1(2.0)));
        RhpgOptions opt;
        opt.N = 2;
        opt.eps = 0.25;
        opt.zeta = 0.05;
        opt.inner.source = PlanSource::Calibrated;
        opt.inner.t_scale = 4e4;
        RngStream rng(7);
        RHPGResult res = run_rhpg(no_b, unit, init, opt, rng, nullptr);
        CHECK(std::abs(res.K0.K(0, 0)) <= 0.2);
    }

    SUBCASE("theory budgets are refused, not silently truncated") {
        RhpgOptions opt;
        opt.N = 1;
        opt.eps = std::pow(10.0, -0.5);
        opt.zeta = 0.1;
        opt.inner.source = PlanSource::Theory;
        RngStream rng(1);
        CHECK_THROWS_WITH_AS(run_rhpg(model, cost, init, opt, rng, &sol),
                             doctest::Contains("beyond the runnable budget"),
                             std::runtime_error);
    }

    SUBCASE("single calibrated run lands near the stationary gain") {
        RhpgOptions opt;
        opt.N = 1;
        opt.eps = std::pow(10.0, -0.5);
        opt.zeta = 0.1;
        opt.inner.source = PlanSource::Calibrated;
        opt.inner.t_scale = 2e5;
        opt.inner.t_exponent = 0.5;
        RngStream rng(4242);
        RHPGResult res = run_rhpg(model, cost, init, opt, rng, &sol);
        REQUIRE(res.final_gap.has_value());
        CHECK(*res.final_gap <= opt.eps);
        CHECK(res.stabilizing.value_or(false));
    }
}

TEST_CASE("inner loop meets its tolerance across seeds") {
    // Last stage of the benchmark instance from the zero gain: the final gap
    // to the stage minimizer should fall within the stage tolerance for at
    // least a 1 - zeta fraction of seeds, and grow worse when the iteration
    // budget is slashed.
    SystemModel model = verify::benchmark_model();
    CostSpec cost = verify::benchmark_cost();
    InitialStateModel init{PdMatrix::identity(1)};
    ExplorationConfig expl(1.0);
    PdMatrix p_next = cost.Q_N;

    const double eps = std::pow(10.0, -0.5);
    const double varsigma = eps / 4.0;
    InnerLoopPlan plan;
    plan.mu = 4.0;
    plan.L = 67.4489;
    plan.sigma = 1.0;
    plan.varsigma = varsigma;
    const double j0 = 7501.0;
    plan.theta = std::max({2.0, 2.0 * plan.L / plan.mu,
                           2.0 * plan.L * j0 / (plan.mu * plan.mu)});
    plan.T = 360000;

    auto gaps_at = [&](long long T) {
        InnerLoopPlan p = plan;
        p.T = T;
        std::vector<double> gaps;
        for (int s = 0; s < 30; ++s) {
            RngStream rng(cell_seed(61, 0, static_cast<std::uint64_t>(s)));
            InnerLoopResult res = run_inner_loop(PolicyGain(scalar1(0.0)), p, {}, model,
                                                 cost, init, expl, rng, p_next);
            gaps.push_back(res.diag.final_gain_gap_f);
        }
        std::sort(gaps.begin(), gaps.end());
        return gaps;
    };

    std::vector<double> full = gaps_at(plan.T);
    int within = 0;
    for (double g : full) {
        if (g <= varsigma) ++within;
    }
    CHECK(within >= 27); // 1 - zeta with zeta = 0.1

    std::vector<double> eighth = gaps_at(plan.T / 8);
    CHECK(full[15] < eighth[15]); // median improves with the budget
}

TEST_CASE("rhpg on a two-state instance") {
    Matrix a(2, 2), b(2, 2);
    a << 1.2, 0.3, 0.0, 0.8;
    b = Matrix::Identity(2, 2);
    SystemModel model(a, b);
    CHECK(model.a_invertible);
    CostSpec cost{PdMatrix::identity(2), PdMatrix::identity(2),
                  PdMatrix(20.0 * Matrix::Identity(2, 2))};
    InitialStateModel init{PdMatrix::identity(2)};
    RiccatiSolution sol = solve_are(model, cost);
    REQUIRE(psd_geq(cost.Q_N.mat(), sol.P_star.mat()));

    const double eps = 0.5;
    RhpgOptions opt;
    opt.N = horizon_for_accuracy(sol, model, cost, eps);
    opt.eps = eps;
    opt.zeta = 0.1 / opt.N;
    opt.k_init = KInitRule::Zero;
    opt.inner.source = PlanSource::Calibrated;
    opt.inner.t_scale = 2e4;
    opt.inner.t_exponent = 0.5;

    int within = 0, stabilizing = 0;
    for (int s = 0; s < 20; ++s) {
        RngStream rng(cell_seed(555, 0, static_cast<std::uint64_t>(s)));
        RHPGResult res = run_rhpg(model, cost, init, opt, rng, &sol);
        REQUIRE(res.final_gap.has_value());
        if (*res.final_gap <= eps) ++within;
        if (res.stabilizing.value_or(false)) ++stabilizing;
        CHECK(res.total_oracle_calls ==
              static_cast<long long>(opt.N) * res.plans[0].T);
    }
    CHECK(within >= 18);
    CHECK(stabilizing >= 18);

    // The warm-start rule reuses the previous stage's output.
    RhpgOptions warm = opt;
    warm.k_init = KInitRule::PreviousStage;
    RngStream rng(313);
    RHPGResult res = run_rhpg(model, cost, init, warm, rng, &sol);
    CHECK(res.final_gap.has_value());
    CHECK(*res.final_gap <= eps);
}

TEST_CASE("prior schedule exponent") {
    ConstantsBundle b;
    b.C2 = 1.0;
    CHECK(prior_complexity_exponent(b, 0.5) == doctest::Approx(1.0));
    b.C2 = 67.1443;
    const double norm = 0.199094;
    CHECK(prior_complexity_exponent(b, norm) ==
          doctest::Approx(1.0 + std::log(b.C2) / (2.0 * std::log(1.0 / norm)))
              .epsilon(1e-12));
    ConstantsBundle b2 = b;
    b2.C2 = 100.0;
    CHECK(prior_complexity_exponent(b2, norm) > prior_complexity_exponent(b, norm));
    CHECK_THROWS_AS(prior_complexity_exponent(b, 1.0), std::invalid_argument);
}
