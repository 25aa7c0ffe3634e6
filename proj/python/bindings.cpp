// Python bindings for the core operations: stationary solves, the
// finite-horizon recursion, surrogate costs/gradients, the one-point
// estimator, full RHPG runs, and the verification suites.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rhpg/experiment.hpp"
#include "rhpg/verification.hpp"

namespace py = pybind11;
using namespace rhpg;

namespace {

SystemModel make_model(const Matrix& a, const Matrix& b) { return SystemModel(a, b); }

CostSpec make_cost(const Matrix& q, const Matrix& r, const Matrix& q_n) {
    return CostSpec(PdMatrix(q), PdMatrix(r), PdMatrix(q_n));
}

std::vector<PolicyGain> gains_from_list(const std::vector<Matrix>& frozen) {
    std::vector<PolicyGain> gains;
    gains.reserve(frozen.size());
    for (const Matrix& k : frozen) gains.emplace_back(k);
    return gains;
}

py::dict report_to_dict(const verify::SuiteReport& rep) {
    py::dict d;
    d["suite"] = rep.suite;
    d["trials"] = rep.trials;
    d["failures"] = rep.failures;
    d["worst_margin"] = rep.worst_margin;
    d["seed"] = rep.seed;
    d["skipped"] = rep.skipped;
    d["note"] = rep.note;
    d["passed"] = rep.passed();
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Receding-horizon policy gradient for the LQR, C++ core";

    m.def("riemannian_distance",
          [](const Matrix& u, const Matrix& v) {
              return riemannian_distance(PdMatrix(u), PdMatrix(v));
          },
          py::arg("u"), py::arg("v"));
    m.def("induced_norm",
          [](const Matrix& x, const Matrix& w) { return induced_norm(x, PdMatrix(w)); },
          py::arg("x"), py::arg("w"));
    m.def("spectral_radius", &spectral_radius, py::arg("x"));
    m.def("pd_sqrt",
          [](const Matrix& w) { return pd_sqrt(PdMatrix(w)).mat(); }, py::arg("w"));
    m.def("condition_number",
          [](const Matrix& w) { return condition_number(PdMatrix(w)); }, py::arg("w"));

    m.def("solve_are",
          [](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
             const Matrix& q_n, double tol, int max_iters) {
              const RiccatiSolution sol =
                  solve_are(make_model(a, b), make_cost(q, r, q_n), tol, max_iters);
              py::dict d;
              d["P"] = sol.P_star.mat();
              d["K"] = sol.K_star.K;
              d["iterations"] = sol.iterations;
              d["residual"] = sol.residual;
              return d;
          },
          py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("Q_N"),
          py::arg("tol") = 1e-10, py::arg("max_iters") = 100000);

    m.def("solve_rde",
          [](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
             const Matrix& q_n, int n_horizon) {
              const ValueSequence seq =
                  solve_rde(make_model(a, b), make_cost(q, r, q_n), n_horizon);
              std::vector<Matrix> ps, ks;
              for (const PdMatrix& p : seq.P) ps.push_back(p.mat());
              for (const PolicyGain& k : seq.K) ks.push_back(k.K);
              return py::make_tuple(ps, ks);
          },
          py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("Q_N"),
          py::arg("N"));

    m.def("riccati_operator",
          [](const Matrix& p, const Matrix& a, const Matrix& b, const Matrix& q,
             const Matrix& r, const Matrix& q_n) {
              return riccati_operator(PdMatrix(p), make_model(a, b), make_cost(q, r, q_n))
                  .mat();
          },
          py::arg("P"), py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"),
          py::arg("Q_N"));

    m.def("gain_from_value",
          [](const Matrix& p, const Matrix& a, const Matrix& b, const Matrix& q,
             const Matrix& r, const Matrix& q_n) {
              return gain_from_value(PdMatrix(p), make_model(a, b), make_cost(q, r, q_n))
                  .K;
          },
          py::arg("P"), py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"),
          py::arg("Q_N"));

    m.def("exact_surrogate_cost",
          [](const Matrix& k, const Matrix& p_next, const Matrix& sigma0,
             const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
             const Matrix& q_n) {
              return exact_surrogate_cost(PolicyGain(k), PdMatrix(p_next),
                                          PdMatrix(sigma0), make_model(a, b),
                                          make_cost(q, r, q_n));
          },
          py::arg("K"), py::arg("P_next"), py::arg("Sigma0"), py::arg("A"), py::arg("B"),
          py::arg("Q"), py::arg("R"), py::arg("Q_N"));

    m.def("exact_surrogate_gradient",
          [](const Matrix& k, const Matrix& p_next, const Matrix& sigma0,
             const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
             const Matrix& q_n) {
              return exact_surrogate_gradient(PolicyGain(k), PdMatrix(p_next),
                                              PdMatrix(sigma0), make_model(a, b),
                                              make_cost(q, r, q_n));
          },
          py::arg("K"), py::arg("P_next"), py::arg("Sigma0"), py::arg("A"), py::arg("B"),
          py::arg("Q"), py::arg("R"), py::arg("Q_N"));

    m.def("one_point_gradient_estimate",
          [](const Matrix& k, const std::vector<Matrix>& frozen, const Matrix& a,
             const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& q_n,
             const Matrix& sigma0, double sigma, std::uint64_t seed) {
              const SystemModel model = make_model(a, b);
              const CostSpec cost = make_cost(q, r, q_n);
              const InitialStateModel init{PdMatrix(sigma0)};
              const ExplorationConfig expl(sigma);
              RngStream rng(seed);
              const std::vector<PolicyGain> gains = gains_from_list(frozen);
              const GradientEstimate est = one_point_gradient_estimate(
                  PolicyGain(k), gains, model, cost, init, expl, rng);
              py::dict d;
              d["grad"] = est.grad;
              d["oracle_calls"] = est.oracle_calls;
              d["q_value"] = est.q_value;
              return d;
          },
          py::arg("K"), py::arg("frozen_gains"), py::arg("A"), py::arg("B"),
          py::arg("Q"), py::arg("R"), py::arg("Q_N"), py::arg("Sigma0"),
          py::arg("sigma"), py::arg("seed"));

    m.def("run_rhpg",
          [](const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
             const Matrix& q_n, const Matrix& sigma0, double eps, double delta_total,
             double sigma, std::uint64_t seed, double t_scale, double t_exponent,
             const std::string& k_init) {
              ExperimentConfig cfg = default_config();
              cfg.instance = {a, b, q, r, q_n, sigma0};
              cfg.sigma = sigma;
              cfg.delta_total = delta_total;
              cfg.inner.source = PlanSource::Calibrated;
              cfg.inner.t_scale = t_scale;
              cfg.inner.t_exponent = t_exponent;
              if (k_init == "zero") cfg.k_init_rule = KInitRule::Zero;
              else if (k_init == "previous_stage") cfg.k_init_rule = KInitRule::PreviousStage;
              else throw std::invalid_argument("k_init must be 'zero' or 'previous_stage'");
              const PreparedInstance inst = prepare_instance(cfg);
              const RHPGResult res = solve_one(cfg, inst, eps, seed);
              py::dict d;
              d["K0"] = res.K0.K;
              std::vector<Matrix> gains;
              for (const PolicyGain& g : res.gains) gains.push_back(g.K);
              d["gains"] = gains;
              d["oracle_calls"] = res.total_oracle_calls;
              if (res.final_gap) d["final_gap"] = *res.final_gap;
              if (res.stabilizing) d["stabilizing"] = *res.stabilizing;
              return d;
          },
          py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("Q_N"),
          py::arg("Sigma0"), py::arg("eps"), py::arg("delta_total") = 0.1,
          py::arg("sigma") = 1.0, py::arg("seed") = 1,
          py::arg("t_scale") = 2.0e5, py::arg("t_exponent") = 0.5,
          py::arg("k_init") = "zero");

    m.def("verify_suite",
          [](const std::string& name, std::uint64_t seed, long long trials) {
              return report_to_dict(verify::run_suite(name, seed, trials));
          },
          py::arg("name"), py::arg("seed") = 0, py::arg("trials") = 0);
    m.def("suite_names", &verify::suite_names);
    m.def("cell_seed", &cell_seed, py::arg("base_seed"), py::arg("eps_index"),
          py::arg("run_index"));
    m.def("horizon_simple", &horizon_simple, py::arg("eps"));
}
