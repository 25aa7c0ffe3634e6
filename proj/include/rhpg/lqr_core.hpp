#pragma once

#include <optional>
#include <vector>

#include "rhpg/matrix_analysis.hpp"

namespace rhpg {

// Discrete-time linear dynamics x_{t+1} = A x_t + B u_t.
struct SystemModel {
    Matrix A;
    Matrix B;
    bool a_invertible = false;

    SystemModel(Matrix a, Matrix b);

    Eigen::Index n() const { return A.rows(); }
    Eigen::Index m() const { return B.cols(); }
};

// Quadratic stage cost x'Qx + u'Ru with terminal weight Q_N.
struct CostSpec {
    PdMatrix Q;
    PdMatrix R;
    PdMatrix Q_N;
    // Q_N >= P*; only known once the stationary solution is available.
    std::optional<bool> terminal_dominates;

    CostSpec(PdMatrix q, PdMatrix r, PdMatrix q_n);
};

struct PolicyGain {
    static constexpr int kStationary = -1;

    Matrix K;
    int stage = kStationary;

    PolicyGain() = default;
    PolicyGain(Matrix k, int s = kStationary);
};

struct RiccatiSolution {
    PdMatrix P_star;
    PolicyGain K_star;
    int iterations = 0;
    double residual = 0.0;
};

// Backward value recursion: P[t] for t = 0..N (P[N] = Q_N), K[t] for t = 0..N-1.
struct ValueSequence {
    std::vector<PdMatrix> P;
    std::vector<PolicyGain> K;

    int horizon() const { return static_cast<int>(K.size()); }
};

/// One backward Riccati step: Q + A'(P - P B (R + B'PB)^{-1} B'P) A.
PdMatrix riccati_operator(const PdMatrix& p, const SystemModel& model,
                          const CostSpec& cost);

/// (R + B'PB)^{-1} B'PA.
PolicyGain gain_from_value(const PdMatrix& p, const SystemModel& model,
                           const CostSpec& cost, int stage = PolicyGain::kStationary);

ValueSequence solve_rde(const SystemModel& model, const CostSpec& cost, int N);

/// Fixed-point iteration of the Riccati operator from Q_N until the relative
/// residual |P - R(P)|_F / |P|_F drops below tol.
RiccatiSolution solve_are(const SystemModel& model, const CostSpec& cost,
                          double tol = 1e-10, int max_iters = 100000);

Matrix closed_loop(const SystemModel& model, const PolicyGain& k);

/// (A - BK)' P_next (A - BK) + K'RK + Q.
PdMatrix surrogate_value_update(const PdMatrix& p_next, const PolicyGain& k,
                                const SystemModel& model, const CostSpec& cost);

/// trace((Q + K'RK + (A-BK)' P_next (A-BK)) Sigma0).
double exact_surrogate_cost(const PolicyGain& k, const PdMatrix& p_next,
                            const PdMatrix& sigma0, const SystemModel& model,
                            const CostSpec& cost);

/// 2((R + B' P_next B) K - B' P_next A) Sigma0; zero at the stage minimizer.
Matrix exact_surrogate_gradient(const PolicyGain& k, const PdMatrix& p_next,
                                const PdMatrix& sigma0, const SystemModel& model,
                                const CostSpec& cost);

/// Horizon guaranteeing a stage-0 gain within eps of the stationary one:
/// ceil( log(2|Q_N-P*|_* k_{P*} |A_K| |B| / (eps lmin(R))) / (2 log(1/|A_K|_*)) + 1 ).
int horizon_for_accuracy(const RiccatiSolution& solution, const SystemModel& model,
                         const CostSpec& cost, double eps);

/// Reduced horizon rule used by the reproduction sweep: ceil(0.5 * ln(1/eps)).
int horizon_simple(double eps);

struct StabilityReport {
    bool stabilizing = false;
    double rho = 0.0;    // spectral radius of A - BK
    double margin = 0.0; // |A - BK| in the P*-induced norm
};

StabilityReport check_stabilizing(const SystemModel& model, const PolicyGain& k,
                                  const PdMatrix& p_star);

} // namespace rhpg
