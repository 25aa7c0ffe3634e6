// Command-line front end: solve | experiment | fit-slope | verify | riccati.

#include <algorithm>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "rhpg/experiment.hpp"
#include "rhpg/verification.hpp"

namespace {

rhpg::ExperimentConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) return rhpg::default_config();
    return rhpg::load_config(config_path);
}

void apply_common_overrides(rhpg::ExperimentConfig& cfg, const std::string& mode,
                            const std::string& schedule, std::uint64_t seed,
                            bool seed_set, int jobs) {
    if (mode == "experiment") cfg.mode = rhpg::Mode::Experiment;
    else if (mode == "practical") cfg.mode = rhpg::Mode::Practical;
    else if (!mode.empty()) throw CLI::ValidationError("--mode must be experiment|practical");
    if (schedule == "riemannian") cfg.schedule_variant = rhpg::ScheduleVariant::Riemannian;
    else if (schedule == "prior") cfg.schedule_variant = rhpg::ScheduleVariant::Prior;
    else if (!schedule.empty()) throw CLI::ValidationError("--schedule must be riemannian|prior");
    if (seed_set) cfg.base_seed = seed;
    if (jobs != 0) cfg.jobs = jobs;
}

int cmd_solve(const rhpg::ExperimentConfig& cfg, double eps) {
    const rhpg::PreparedInstance inst = rhpg::prepare_instance(cfg);
    const double e = eps > 0.0 ? eps : cfg.eps_list.front();
    const std::uint64_t seed = rhpg::cell_seed(cfg.base_seed, 0, 0);
    const rhpg::RHPGResult res = rhpg::solve_one(cfg, inst, e, seed);

    std::printf("eps            %.10g\n", e);
    std::printf("stages         %zu\n", res.gains.size());
    std::printf("oracle_calls   %lld\n", res.total_oracle_calls);
    std::printf("K0             [");
    for (Eigen::Index i = 0; i < res.K0.K.size(); ++i) {
        std::printf("%s%.10g", i ? ", " : "", res.K0.K(i));
    }
    std::printf("]\n");
    if (res.final_gap) std::printf("final_gap      %.10g\n", *res.final_gap);
    if (res.stabilizing) {
        std::printf("stabilizing    %s (margin %.6g)\n", *res.stabilizing ? "yes" : "no",
                    res.stab_margin.value_or(0.0));
    }
    for (std::size_t h = 0; h < res.plans.size(); ++h) {
        const rhpg::InnerLoopPlan& p = res.plans[h];
        std::printf("stage %-3zu      T=%lld theta=%.6g varsigma=%.6g J0=%.6g\n", h, p.T,
                    p.theta, p.varsigma, p.J0);
    }
    return 0;
}

int cmd_experiment(const rhpg::ExperimentConfig& cfg) {
    const rhpg::ExperimentOutcome out = rhpg::run_experiment(cfg);
    rhpg::write_csv_file(out, cfg.output);
    std::printf("wrote %zu records to %s\n", out.records.size(), cfg.output.c_str());
    for (const rhpg::EpsSummary& s : out.summaries) {
        std::printf("eps=%-12.6g mean_calls=%-12.6g mean_gap=%-12.6g stab=%.2f\n", s.eps,
                    s.mean_oracle_calls, s.mean_final_gap, s.stabilizing_fraction);
    }
    return 0;
}

int cmd_fit_slope(const std::string& csv, bool emit_loglog) {
    if (emit_loglog) {
        std::printf("log10_inv_eps,log10_mean_calls\n");
        for (const auto& [x, y] : rhpg::loglog_points(csv)) {
            std::printf("%.12g,%.12g\n", x, y);
        }
    }
    const rhpg::SlopeFit fit = rhpg::fit_slope_csv(csv);
    std::printf("slope %.6f\nintercept %.6f\npoints %d\n", fit.slope, fit.intercept,
                fit.points);
    return 0;
}

int cmd_verify(const std::vector<std::string>& suites, bool all, std::uint64_t seed,
               long long trials) {
    std::vector<std::string> selected = suites;
    if (all) selected = rhpg::verify::suite_names();
    if (selected.empty()) {
        std::fprintf(stderr, "verify: select suites with --suite NAME or --all\n");
        return 2;
    }
    const std::vector<std::string> known = rhpg::verify::suite_names();
    for (const std::string& name : selected) {
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            std::fprintf(stderr, "verify: unknown suite '%s'; known suites:", name.c_str());
            for (const std::string& k : known) std::fprintf(stderr, " %s", k.c_str());
            std::fprintf(stderr, "\n");
            return 2;
        }
    }
    bool ok = true;
    for (const std::string& name : selected) {
        const rhpg::verify::SuiteReport rep = rhpg::verify::run_suite(name, seed, trials);
        std::printf("%s\n", rhpg::verify::format_report(rep).c_str());
        ok = ok && (rep.skipped || rep.failures == 0);
    }
    return ok ? 0 : 1;
}

int cmd_riccati(const rhpg::ExperimentConfig& cfg) {
    const rhpg::PreparedInstance inst = rhpg::prepare_instance(cfg);
    if (!inst.are) {
        std::fprintf(stderr, "riccati: fixed-point iteration did not converge; "
                             "the instance may not be stabilizable\n");
        return 1;
    }
    const rhpg::RiccatiSolution& sol = *inst.are;
    std::printf("P* =\n");
    std::cout << sol.P_star.mat() << "\n";
    std::printf("K* =\n");
    std::cout << sol.K_star.K << "\n";
    std::printf("iterations %d residual %.3e\n", sol.iterations, sol.residual);

    const rhpg::Matrix acl = closed_loop(inst.model, sol.K_star);
    const double a_star = rhpg::induced_norm(acl, sol.P_star);
    std::printf("rho(A-BK*) = %.6g, |A-BK*|_* = %.6g, kappa(P*) = %.6g\n",
                rhpg::spectral_radius(acl), a_star,
                rhpg::condition_number(sol.P_star));
    if (inst.cost.terminal_dominates.value_or(false)) {
        const rhpg::ValueSequence rde = rhpg::solve_rde(inst.model, inst.cost, 8);
        const rhpg::ConstantsBundle bundle =
            rhpg::compute_constants(inst.model, inst.cost, rde);
        std::printf("constants: a=%.6g phi=%.6g C1=%.6g C2=%.6g C3=%.6g\n", bundle.a,
                    bundle.phi, bundle.C1, bundle.C2, bundle.C3);
        if (a_star < 1.0) {
            std::printf("prior schedule eps-exponent %.4f (this schedule: 2)\n",
                        rhpg::prior_complexity_exponent(bundle, a_star));
        }
        std::printf("%-12s %-14s %s\n", "eps", "N(accuracy)", "N(reduced)");
        for (double eps : cfg.eps_list) {
            std::printf("%-12.6g %-14d %d\n", eps,
                        rhpg::horizon_for_accuracy(sol, inst.model, inst.cost, eps),
                        rhpg::horizon_simple(eps));
        }
    } else {
        std::printf("terminal weight does not dominate P*; horizon table skipped\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Receding-horizon policy gradient for the linear quadratic regulator"};
    app.require_subcommand(1);

    std::string config_path, mode, schedule, csv_path, out_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    double eps = 0.0;
    long long trials = 0;
    bool all_suites = false, emit_loglog = false;
    std::vector<std::string> suites;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file");
        sub->add_option("--mode", mode, "experiment|practical");
        sub->add_option("--schedule", schedule, "riemannian|prior");
        sub->add_option("--seed", seed, "base seed")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--jobs", jobs, "worker count (1 forces serial)");
        sub->add_option("--out", out_path, "output path");
    };

    CLI::App* solve = app.add_subcommand("solve", "one RHPG run from config");
    add_common(solve);
    solve->add_option("--eps", eps, "accuracy target (default: first of eps_list)");

    CLI::App* experiment = app.add_subcommand("experiment", "sweep -> CSV");
    add_common(experiment);

    CLI::App* fit = app.add_subcommand("fit-slope", "CSV -> log-log slope");
    fit->add_option("csv", csv_path, "CSV produced by experiment")->required();
    fit->add_flag("--emit-loglog", emit_loglog, "also print log-log-ready columns");

    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    verify->add_option("--suite", suites, "suite name (repeatable)");
    verify->add_flag("--all", all_suites, "run every suite");
    verify->add_option("--seed", seed, "suite seed");
    verify->add_option("--trials", trials, "trial/sample count override");

    CLI::App* riccati = app.add_subcommand("riccati", "stationary baseline + horizons");
    add_common(riccati);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed() || experiment->parsed() || riccati->parsed()) {
            rhpg::ExperimentConfig cfg = load_or_default(config_path);
            apply_common_overrides(cfg, mode, schedule, seed, seed_set, jobs);
            if (!out_path.empty()) cfg.output = out_path;
            if (solve->parsed()) return cmd_solve(cfg, eps);
            if (experiment->parsed()) return cmd_experiment(cfg);
            return cmd_riccati(cfg);
        }
        if (fit->parsed()) return cmd_fit_slope(csv_path, emit_loglog);
        if (verify->parsed()) return cmd_verify(suites, all_suites, seed, trials);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
