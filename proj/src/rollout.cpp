#include "rhpg/rollout.hpp"

#include <cmath>
#include <sstream>

namespace rhpg {

InitialStateModel::InitialStateModel(PdMatrix sigma0)
    : Sigma0(std::move(sigma0)),
      C_m(static_cast<double>(Sigma0.dim()) * Sigma0.lambda_max()),
      sqrt_(Sigma0.sqrt().mat()) {}

ExplorationConfig::ExplorationConfig(double s) : sigma(s) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("ExplorationConfig: sigma must be positive");
    }
}

Vector sample_initial_state(const InitialStateModel& init, RngStream& rng) {
    const Eigen::Index n = init.n();
    const Vector z = rng.unit_sphere(n);
    return init.sigma0_sqrt() * (std::sqrt(static_cast<double>(n)) * z);
}

namespace {

void check_rollout_args(const Vector& x0, const Vector& u0,
                        std::span<const PolicyGain> frozen_gains,
                        const SystemModel& model) {
    if (x0.size() != model.n() || u0.size() != model.m()) {
        throw std::invalid_argument("rollout: state/input dimension mismatch");
    }
    for (const PolicyGain& g : frozen_gains) {
        if (g.K.rows() != model.m() || g.K.cols() != model.n()) {
            throw std::invalid_argument(
                "rollout: frozen gain dimensions do not match the model");
        }
    }
}

} // namespace

double rollout_cost(const Vector& x0, const Vector& u0,
                    std::span<const PolicyGain> frozen_gains, const SystemModel& model,
                    const CostSpec& cost, RolloutWorkspace& ws) {
    double total = x0.dot(cost.Q.mat() * x0) + u0.dot(cost.R.mat() * u0);
    ws.x_next.noalias() = model.A * x0;
    ws.x_next.noalias() += model.B * u0;
    ws.x = ws.x_next;
    for (const PolicyGain& g : frozen_gains) {
        ws.u.noalias() = -g.K * ws.x;
        total += ws.x.dot(cost.Q.mat() * ws.x) + ws.u.dot(cost.R.mat() * ws.u);
        ws.x_next.noalias() = model.A * ws.x;
        ws.x_next.noalias() += model.B * ws.u;
        ws.x.swap(ws.x_next);
    }
    total += ws.x.dot(cost.Q_N.mat() * ws.x);
    return total;
}

CostToGo rollout_cost_to_go(const Vector& x0, const Vector& u0,
                            std::span<const PolicyGain> frozen_gains,
                            const SystemModel& model, const CostSpec& cost) {
    check_rollout_args(x0, u0, frozen_gains, model);
    const int steps = static_cast<int>(frozen_gains.size()) + 1;

    CostToGo out;
    out.trajectory.states.reserve(static_cast<std::size_t>(steps) + 1);
    out.trajectory.inputs.reserve(static_cast<std::size_t>(steps));
    out.trajectory.stage_costs.reserve(static_cast<std::size_t>(steps) + 1);

    Vector x = x0;
    Vector u = u0;
    double total = 0.0;
    for (int t = 0; t < steps; ++t) {
        if (t > 0) u = -frozen_gains[static_cast<std::size_t>(t - 1)].K * x;
        const double c = x.dot(cost.Q.mat() * x) + u.dot(cost.R.mat() * u);
        out.trajectory.states.push_back(x);
        out.trajectory.inputs.push_back(u);
        out.trajectory.stage_costs.push_back(c);
        total += c;
        x = model.A * x + model.B * u;
    }
    const double terminal = x.dot(cost.Q_N.mat() * x);
    out.trajectory.states.push_back(x);
    out.trajectory.stage_costs.push_back(terminal);
    total += terminal;
    out.trajectory.total = total;
    out.value = total;
    return out;
}

double one_point_gradient_inplace(const Matrix& k,
                                  std::span<const PolicyGain> frozen_gains,
                                  const SystemModel& model, const CostSpec& cost,
                                  const InitialStateModel& init,
                                  const ExplorationConfig& expl, RngStream& rng,
                                  RolloutWorkspace& ws, Matrix& grad_out) {
    const Eigen::Index n = model.n();
    const Eigen::Index m = model.m();
    // x0 = Sigma0^{1/2} sqrt(n) z / |z|
    double norm2;
    do {
        for (Eigen::Index i = 0; i < n; ++i) ws.x_next[i] = rng.normal();
        norm2 = ws.x_next.squaredNorm();
    } while (norm2 == 0.0);
    ws.x0.noalias() =
        init.sigma0_sqrt() * (std::sqrt(static_cast<double>(n) / norm2) * ws.x_next);
    for (Eigen::Index i = 0; i < m; ++i) ws.eta[i] = rng.normal();
    ws.u0.noalias() = -k * ws.x0;
    ws.u0.noalias() += expl.sigma * ws.eta;
    const double q = rollout_cost(ws.x0, ws.u0, frozen_gains, model, cost, ws);
    grad_out.noalias() = (-q / expl.sigma) * (ws.eta * ws.x0.transpose());
    return q;
}

GradientEstimate one_point_gradient_with_inputs(const PolicyGain& k,
                                                std::span<const PolicyGain> frozen_gains,
                                                const SystemModel& model,
                                                const CostSpec& cost,
                                                const ExplorationConfig& expl,
                                                const Vector& x0, const Vector& eta) {
    const Vector u0 = -k.K * x0 + expl.sigma * eta;
    const CostToGo q = rollout_cost_to_go(x0, u0, frozen_gains, model, cost);
    GradientEstimate est;
    est.grad = -(q.value / expl.sigma) * (eta * x0.transpose());
    est.oracle_calls = 1;
    est.q_value = q.value;
    return est;
}

GradientEstimate one_point_gradient_estimate(const PolicyGain& k,
                                             std::span<const PolicyGain> frozen_gains,
                                             const SystemModel& model,
                                             const CostSpec& cost,
                                             const InitialStateModel& init,
                                             const ExplorationConfig& expl,
                                             RngStream& rng) {
    const Vector x0 = sample_initial_state(init, rng);
    const Vector eta = rng.normal_vector(model.m());
    return one_point_gradient_with_inputs(k, frozen_gains, model, cost, expl, x0, eta);
}

} // namespace rhpg
