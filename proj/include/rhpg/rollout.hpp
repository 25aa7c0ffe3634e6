#pragma once

#include <span>
#include <vector>

#include "rhpg/lqr_core.hpp"
#include "rhpg/rng.hpp"

namespace rhpg {

enum class SamplingScheme { Sphere };

// Initial-state distribution: x0 = Sigma0^{1/2} * sqrt(n) * z with z uniform
// on the unit sphere. Zero mean, covariance Sigma0, and |x0|^2 <= C_m with
// C_m = n * lambda_max(Sigma0) always.
struct InitialStateModel {
    PdMatrix Sigma0;
    double C_m;
    SamplingScheme scheme = SamplingScheme::Sphere;

    explicit InitialStateModel(PdMatrix sigma0);

    Eigen::Index n() const { return Sigma0.dim(); }
    const Matrix& sigma0_sqrt() const { return sqrt_; }

  private:
    Matrix sqrt_;
};

struct ExplorationConfig {
    double sigma = 1.0;

    explicit ExplorationConfig(double s);
};

struct TrajectoryRecord {
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    std::vector<double> stage_costs;
    double total = 0.0;
};

Vector sample_initial_state(const InitialStateModel& init, RngStream& rng);

// Scratch buffers reused across oracle calls in hot loops.
struct RolloutWorkspace {
    Vector x, u, x_next, x0, eta, u0;

    void resize(Eigen::Index n, Eigen::Index m) {
        x.resize(n);
        u.resize(m);
        x_next.resize(n);
        x0.resize(n);
        eta.resize(m);
        u0.resize(m);
    }
};

/// Cost-to-go value only; no trajectory recording, no allocation.
double rollout_cost(const Vector& x0, const Vector& u0,
                    std::span<const PolicyGain> frozen_gains, const SystemModel& model,
                    const CostSpec& cost, RolloutWorkspace& ws);

// Finite-horizon cost-to-go of length equal to frozen_gains.size() + 1:
// stage cost at (x0, u0), then u_t = -K_t x_t under the frozen gains, then the
// terminal cost. frozen_gains are ordered by increasing stage.
struct CostToGo {
    double value = 0.0;
    TrajectoryRecord trajectory;
};

CostToGo rollout_cost_to_go(const Vector& x0, const Vector& u0,
                            std::span<const PolicyGain> frozen_gains,
                            const SystemModel& model, const CostSpec& cost);

struct GradientEstimate {
    Matrix grad;           // m x n
    long long oracle_calls = 0;
    double q_value = 0.0;  // cost-to-go observed by the single oracle call
};

/// One-point estimate -(1/sigma) * Q(x0, -K x0 + sigma eta) * eta * x0^T with
/// x0 from the initial-state model and eta standard normal. One oracle call.
GradientEstimate one_point_gradient_estimate(const PolicyGain& k,
                                             std::span<const PolicyGain> frozen_gains,
                                             const SystemModel& model,
                                             const CostSpec& cost,
                                             const InitialStateModel& init,
                                             const ExplorationConfig& expl,
                                             RngStream& rng);

/// In-place variant for hot loops; writes the estimate into grad_out and
/// returns the observed cost-to-go.
double one_point_gradient_inplace(const Matrix& k,
                                  std::span<const PolicyGain> frozen_gains,
                                  const SystemModel& model, const CostSpec& cost,
                                  const InitialStateModel& init,
                                  const ExplorationConfig& expl, RngStream& rng,
                                  RolloutWorkspace& ws, Matrix& grad_out);

/// Same estimate with (x0, eta) supplied; test hook, not on the solver path.
GradientEstimate one_point_gradient_with_inputs(const PolicyGain& k,
                                                std::span<const PolicyGain> frozen_gains,
                                                const SystemModel& model,
                                                const CostSpec& cost,
                                                const ExplorationConfig& expl,
                                                const Vector& x0, const Vector& eta);

} // namespace rhpg
