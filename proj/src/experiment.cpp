#include "rhpg/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace rhpg {

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) {
        throw std::invalid_argument("config field '" + field +
                                    "' must be a nonempty nested array");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) {
        throw std::invalid_argument("config field '" + field +
                                    "' must be a nested (row-major) array");
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw std::invalid_argument("config field '" + field +
                                        "' has ragged rows");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j[r][c].get<double>();
        }
    }
    return m;
}

} // namespace

int log_level() {
    const char* v = std::getenv("RHPG_LOG");
    if (v == nullptr) return 0;
    if (std::strcmp(v, "debug") == 0) return 2;
    if (std::strcmp(v, "info") == 0) return 1;
    return 0;
}

ExperimentConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg = default_config();

    if (j.contains("instance")) {
        const json& inst = j["instance"];
        for (const char* f : {"A", "B", "Q", "R", "Q_N", "Sigma0"}) {
            if (!inst.contains(f)) {
                throw std::invalid_argument(std::string("config field 'instance.") + f +
                                            "' is required");
            }
        }
        cfg.instance.A = matrix_from_json(inst["A"], "instance.A");
        cfg.instance.B = matrix_from_json(inst["B"], "instance.B");
        cfg.instance.Q = matrix_from_json(inst["Q"], "instance.Q");
        cfg.instance.R = matrix_from_json(inst["R"], "instance.R");
        cfg.instance.Q_N = matrix_from_json(inst["Q_N"], "instance.Q_N");
        cfg.instance.Sigma0 = matrix_from_json(inst["Sigma0"], "instance.Sigma0");
    }
    if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
    if (j.contains("delta_total")) cfg.delta_total = j["delta_total"].get<double>();
    if (j.contains("eps_list")) {
        cfg.eps_list = j["eps_list"].get<std::vector<double>>();
    }
    if (j.contains("runs_per_eps")) cfg.runs_per_eps = j["runs_per_eps"].get<int>();
    if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("mode")) {
        const std::string m = j["mode"].get<std::string>();
        if (m == "experiment") cfg.mode = Mode::Experiment;
        else if (m == "practical") cfg.mode = Mode::Practical;
        else throw std::invalid_argument("config field 'mode' must be 'experiment' or 'practical'");
    }
    if (j.contains("schedule_variant")) {
        const std::string s = j["schedule_variant"].get<std::string>();
        if (s == "riemannian") cfg.schedule_variant = ScheduleVariant::Riemannian;
        else if (s == "prior") cfg.schedule_variant = ScheduleVariant::Prior;
        else throw std::invalid_argument("config field 'schedule_variant' must be 'riemannian' or 'prior'");
    }
    if (j.contains("k_init_rule")) {
        const std::string k = j["k_init_rule"].get<std::string>();
        if (k == "zero") cfg.k_init_rule = KInitRule::Zero;
        else if (k == "previous_stage") cfg.k_init_rule = KInitRule::PreviousStage;
        else throw std::invalid_argument("config field 'k_init_rule' must be 'zero' or 'previous_stage'");
    }
    if (j.contains("horizon_rule")) {
        const std::string h = j["horizon_rule"].get<std::string>();
        if (h == "reduced") cfg.horizon_rule = HorizonRule::Reduced;
        else if (h == "theorem") cfg.horizon_rule = HorizonRule::Theorem;
        else throw std::invalid_argument("config field 'horizon_rule' must be 'reduced' or 'theorem'");
    }
    if (j.contains("inner")) {
        const json& in = j["inner"];
        if (in.contains("plan")) {
            const std::string p = in["plan"].get<std::string>();
            if (p == "theory") cfg.inner.source = PlanSource::Theory;
            else if (p == "calibrated") cfg.inner.source = PlanSource::Calibrated;
            else if (p == "fixed") cfg.inner.source = PlanSource::Fixed;
            else throw std::invalid_argument("config field 'inner.plan' must be 'theory', 'calibrated' or 'fixed'");
        }
        if (in.contains("xi1_form")) {
            const std::string x = in["xi1_form"].get<std::string>();
            if (x == "displayed") cfg.inner.xi1_form = Xi1Form::DisplayedLemma;
            else if (x == "derivation") cfg.inner.xi1_form = Xi1Form::DerivationChain;
            else throw std::invalid_argument("config field 'inner.xi1_form' must be 'displayed' or 'derivation'");
        }
        if (in.contains("t_scale")) cfg.inner.t_scale = in["t_scale"].get<double>();
        if (in.contains("t_exponent")) cfg.inner.t_exponent = in["t_exponent"].get<double>();
        if (in.contains("fixed_theta")) cfg.inner.fixed_theta = in["fixed_theta"].get<double>();
        if (in.contains("fixed_T")) cfg.inner.fixed_T = in["fixed_T"].get<long long>();
        if (in.contains("max_iterations")) cfg.inner.max_iterations = in["max_iterations"].get<long long>();
    }
    if (j.contains("practical_N")) cfg.practical_N = j["practical_N"].get<int>();
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();

    if (cfg.eps_list.empty()) throw std::invalid_argument("config field 'eps_list' must be nonempty");
    for (double e : cfg.eps_list) {
        if (!(e > 0.0)) throw std::invalid_argument("config field 'eps_list' entries must be positive");
    }
    if (cfg.runs_per_eps < 1) throw std::invalid_argument("config field 'runs_per_eps' must be >= 1");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("config field 'sigma' must be positive");
    if (!(cfg.delta_total > 0.0 && cfg.delta_total < 1.0)) {
        throw std::invalid_argument("config field 'delta_total' must lie in (0,1)");
    }
    if (cfg.mode == Mode::Practical && cfg.practical_N < 1) {
        throw std::invalid_argument("config field 'practical_N' is required in practical mode");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    auto scalar = [](double v) {
        Matrix m(1, 1);
        m(0, 0) = v;
        return m;
    };
    cfg.instance.A = scalar(5.0);
    cfg.instance.B = scalar(0.33);
    cfg.instance.Q = scalar(1.0);
    cfg.instance.R = scalar(1.0);
    cfg.instance.Q_N = scalar(300.0);
    cfg.instance.Sigma0 = scalar(1.0);
    cfg.sigma = 1.0;
    cfg.delta_total = 0.1;
    cfg.eps_list.clear();
    for (int i = 1; i <= 12; ++i) cfg.eps_list.push_back(std::pow(10.0, -0.5 * i));
    cfg.runs_per_eps = 100;
    cfg.base_seed = 20250401;
    cfg.mode = Mode::Experiment;
    cfg.schedule_variant = ScheduleVariant::Riemannian;
    cfg.k_init_rule = KInitRule::Zero;
    cfg.horizon_rule = HorizonRule::Reduced;
    cfg.inner.source = PlanSource::Calibrated;
    cfg.inner.t_scale = 2.0e5;
    cfg.inner.t_exponent = 0.5;
    cfg.output = "runs.csv";
    return cfg;
}

PreparedInstance prepare_instance(const ExperimentConfig& config) {
    SystemModel model(config.instance.A, config.instance.B);
    CostSpec cost(PdMatrix(config.instance.Q), PdMatrix(config.instance.R),
                  PdMatrix(config.instance.Q_N));
    if (config.instance.Sigma0.rows() != model.n()) {
        throw std::invalid_argument("config field 'instance.Sigma0' dimension mismatch");
    }
    InitialStateModel init{PdMatrix(config.instance.Sigma0)};
    PreparedInstance inst{std::move(model), std::move(cost), std::move(init), {}};
    try {
        inst.are = solve_are(inst.model, inst.cost);
        inst.cost.terminal_dominates =
            psd_geq(inst.cost.Q_N.mat(), inst.are->P_star.mat());
    } catch (const std::runtime_error&) {
        inst.are.reset(); // gap reporting unavailable
    }
    return inst;
}

RHPGResult solve_one(const ExperimentConfig& config, const PreparedInstance& inst,
                     double eps, std::uint64_t seed) {
    RhpgOptions opt;
    opt.eps = eps;
    if (config.mode == Mode::Practical) {
        opt.N = config.practical_N;
    } else if (config.horizon_rule == HorizonRule::Reduced) {
        opt.N = horizon_simple(eps);
    } else {
        if (!inst.are) {
            throw std::runtime_error(
                "horizon_rule 'theorem' needs a solvable stationary problem");
        }
        opt.N = horizon_for_accuracy(*inst.are, inst.model, inst.cost, eps);
    }
    opt.schedule = config.schedule_variant;
    opt.zeta = config.delta_total / static_cast<double>(opt.N);
    opt.sigma = config.sigma;
    opt.k_init = config.k_init_rule;
    opt.inner = config.inner;
    opt.diag_stride = 0;
    if (log_level() >= 2) opt.diag_stride = 1000;

    RngStream rng(seed);
    return run_rhpg(inst.model, inst.cost, inst.init, opt, rng,
                    inst.are ? &*inst.are : nullptr);
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    const PreparedInstance inst = prepare_instance(config);
    const int n_eps = static_cast<int>(config.eps_list.size());
    const int runs = config.runs_per_eps;
    const int cells = n_eps * runs;

    ExperimentOutcome out;
    out.records.resize(static_cast<std::size_t>(cells));

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            const int cell = next.fetch_add(1);
            if (cell >= cells) break;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) break;
            }
            const int ei = cell / runs;
            const int ri = cell % runs;
            const double eps = config.eps_list[static_cast<std::size_t>(ei)];
            const std::uint64_t seed =
                cell_seed(config.base_seed, static_cast<std::uint64_t>(ei),
                          static_cast<std::uint64_t>(ri));
            RunRecord rec;
            rec.eps = eps;
            rec.eps_index = ei;
            rec.run_index = ri;
            rec.seed = seed;
            try {
                const auto t0 = std::chrono::steady_clock::now();
                RHPGResult res = solve_one(config, inst, eps, seed);
                const auto t1 = std::chrono::steady_clock::now();
                rec.oracle_calls = res.total_oracle_calls;
                rec.final_gap = res.final_gap.value_or(std::nan(""));
                rec.stabilizing = res.stabilizing.value_or(false);
                rec.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                break;
            }
            out.records[static_cast<std::size_t>(cell)] = rec;
        }
    };

    int jobs = config.jobs;
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    jobs = std::min(jobs, cells);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (int ei = 0; ei < n_eps; ++ei) {
        EpsSummary s;
        s.eps = config.eps_list[static_cast<std::size_t>(ei)];
        s.runs = runs;
        double calls = 0.0, gap = 0.0, stab = 0.0, wall = 0.0;
        for (int ri = 0; ri < runs; ++ri) {
            const RunRecord& r = out.records[static_cast<std::size_t>(ei * runs + ri)];
            calls += static_cast<double>(r.oracle_calls);
            gap += r.final_gap;
            stab += r.stabilizing ? 1.0 : 0.0;
            wall += r.wall_time_s;
        }
        s.mean_oracle_calls = calls / runs;
        s.mean_final_gap = gap / runs;
        s.stabilizing_fraction = stab / runs;
        s.mean_wall_time_s = wall / runs;
        out.summaries.push_back(s);
        if (log_level() >= 1) {
            std::fprintf(stderr,
                         "[rhpg] eps=%.6g mean_calls=%.6g mean_gap=%.6g stab=%.2f\n",
                         s.eps, s.mean_oracle_calls, s.mean_final_gap,
                         s.stabilizing_fraction);
        }
    }
    return out;
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

} // namespace

void write_csv(const ExperimentOutcome& outcome, std::ostream& os) {
    os << "eps,run,seed,oracle_calls,final_gap,stabilizing,wall_time_s\n";
    for (const RunRecord& r : outcome.records) {
        os << fmt("%.17g", r.eps) << ',' << r.run_index << ',' << r.seed << ','
           << r.oracle_calls << ',' << fmt("%.17g", r.final_gap) << ','
           << (r.stabilizing ? 1 : 0) << ',' << fmt("%.6f", r.wall_time_s) << '\n';
    }
    os << "# summary,eps,runs,mean_oracle_calls,mean_final_gap,stabilizing_fraction,"
          "mean_wall_time_s\n";
    for (const EpsSummary& s : outcome.summaries) {
        os << "# summary," << fmt("%.17g", s.eps) << ',' << s.runs << ','
           << fmt("%.17g", s.mean_oracle_calls) << ',' << fmt("%.17g", s.mean_final_gap)
           << ',' << fmt("%.17g", s.stabilizing_fraction) << ','
           << fmt("%.6f", s.mean_wall_time_s) << '\n';
    }
}

void write_csv_file(const ExperimentOutcome& outcome, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file for writing: " + path);
    write_csv(outcome, os);
    if (!os) throw std::runtime_error("failed while writing output file: " + path);
}

std::vector<RunRecord> read_csv_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    std::vector<RunRecord> records;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (first) {
            first = false; // header
            continue;
        }
        RunRecord r;
        unsigned long long seed = 0;
        int stab = 0;
        if (std::sscanf(line.c_str(), "%lf,%d,%llu,%lld,%lf,%d,%lf", &r.eps,
                        &r.run_index, &seed, &r.oracle_calls, &r.final_gap, &stab,
                        &r.wall_time_s) != 7) {
            throw std::runtime_error("malformed CSV row: " + line);
        }
        r.seed = seed;
        r.stabilizing = stab != 0;
        records.push_back(r);
    }
    return records;
}

SlopeFit fit_slope(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 3) {
        throw std::invalid_argument("fit_slope: need at least 3 distinct eps values");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [eps, calls] : pts) {
        const double x = std::log10(1.0 / eps);
        const double y = std::log10(calls);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-15) {
        throw std::invalid_argument("fit_slope: eps values are degenerate");
    }
    SlopeFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.points = static_cast<int>(pts.size());
    return fit;
}

namespace {

std::vector<std::pair<double, double>> mean_calls_by_eps(const std::string& path) {
    const std::vector<RunRecord> records = read_csv_records(path);
    std::map<double, std::pair<double, long long>> acc; // eps -> (sum, count)
    for (const RunRecord& r : records) {
        auto& [sum, count] = acc[r.eps];
        sum += static_cast<double>(r.oracle_calls);
        ++count;
    }
    std::vector<std::pair<double, double>> pts;
    pts.reserve(acc.size());
    for (const auto& [eps, sc] : acc) {
        pts.emplace_back(eps, sc.first / static_cast<double>(sc.second));
    }
    return pts;
}

} // namespace

SlopeFit fit_slope_csv(const std::string& path) { return fit_slope(mean_calls_by_eps(path)); }

std::vector<std::pair<double, double>> loglog_points(const std::string& path) {
    std::vector<std::pair<double, double>> out;
    for (const auto& [eps, calls] : mean_calls_by_eps(path)) {
        out.emplace_back(std::log10(1.0 / eps), std::log10(calls));
    }
    return out;
}

} // namespace rhpg
