#include "rhpg/lqr_core.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace rhpg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Solve (R + B'PB) X = Y for X, guarding against a non-PD inner matrix.
Matrix solve_inner(const PdMatrix& r, const Matrix& b, const PdMatrix& p,
                   const Matrix& rhs) {
    Matrix g = r.mat() + b.transpose() * p.mat() * b;
    g = 0.5 * (g + g.transpose());
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("riccati: inner matrix R + B'PB is not positive definite");
    }
    return llt.solve(rhs);
}

} // namespace

SystemModel::SystemModel(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
    require(A.rows() == A.cols() && A.rows() >= 1, "SystemModel: A must be square");
    require(B.rows() == A.rows() && B.cols() >= 1,
            "SystemModel: B must have as many rows as A");
    // Invertibility flag via LU with partial pivoting: smallest pivot
    // magnitude >= 1e-10 * |A|.
    Eigen::PartialPivLU<Matrix> lu(A);
    const double scale = spectral_norm(A);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    a_invertible = scale > 0.0 && min_pivot >= 1e-10 * scale;
}

CostSpec::CostSpec(PdMatrix q, PdMatrix r, PdMatrix q_n)
    : Q(std::move(q)), R(std::move(r)), Q_N(std::move(q_n)) {
    require(Q.dim() == Q_N.dim(), "CostSpec: Q and Q_N must have the same dimension");
}

PolicyGain::PolicyGain(Matrix k, int s) : K(std::move(k)), stage(s) {
    if (!K.allFinite()) throw std::invalid_argument("PolicyGain: entries must be finite");
}

PdMatrix riccati_operator(const PdMatrix& p, const SystemModel& model,
                          const CostSpec& cost) {
    require(p.dim() == model.n(), "riccati_operator: dimension mismatch");
    require(cost.Q.dim() == model.n() && cost.R.dim() == model.m(),
            "riccati_operator: cost dimensions do not match the model");
    const Matrix& A = model.A;
    const Matrix& B = model.B;
    const Matrix bp = B.transpose() * p.mat();
    const Matrix inner = solve_inner(cost.R, B, p, bp); // (R + B'PB)^{-1} B'P
    Matrix out = cost.Q.mat() +
                 A.transpose() * (p.mat() - bp.transpose() * inner) * A;
    return PdMatrix(out);
}

PolicyGain gain_from_value(const PdMatrix& p, const SystemModel& model,
                           const CostSpec& cost, int stage) {
    require(p.dim() == model.n(), "gain_from_value: dimension mismatch");
    const Matrix rhs = model.B.transpose() * p.mat() * model.A;
    return PolicyGain(solve_inner(cost.R, model.B, p, rhs), stage);
}

ValueSequence solve_rde(const SystemModel& model, const CostSpec& cost, int N) {
    require(N >= 1, "solve_rde: N must be >= 1");
    ValueSequence seq;
    seq.P.reserve(static_cast<std::size_t>(N) + 1);
    seq.K.resize(static_cast<std::size_t>(N), PolicyGain(Matrix::Zero(model.m(), model.n())));
    seq.P.push_back(cost.Q_N);
    for (int t = N - 1; t >= 0; --t) {
        const PdMatrix& p_next = seq.P.back();
        seq.K[static_cast<std::size_t>(t)] = gain_from_value(p_next, model, cost, t);
        seq.P.push_back(riccati_operator(p_next, model, cost));
    }
    // Stored backwards above; flip so that P[t] indexes stage t.
    std::reverse(seq.P.begin(), seq.P.end());
    return seq;
}

RiccatiSolution solve_are(const SystemModel& model, const CostSpec& cost,
                          double tol, int max_iters) {
    require(tol > 0.0, "solve_are: tol must be positive");
    PdMatrix p = cost.Q_N;
    double residual = std::numeric_limits<double>::infinity();
    int iters = 0;
    while (iters < max_iters) {
        PdMatrix p_next = riccati_operator(p, model, cost);
        ++iters;
        residual = (p.mat() - p_next.mat()).norm() / p.mat().norm();
        p = std::move(p_next);
        if (residual <= tol) break;
    }
    if (residual > tol) {
        std::ostringstream os;
        os << "solve_are: non-convergent after " << max_iters
           << " iterations (residual " << residual
           << "): system likely not stabilizable or tolerance too tight";
        throw std::runtime_error(os.str());
    }
    RiccatiSolution sol{p, gain_from_value(p, model, cost), iters, residual};
    const double rho = spectral_radius(closed_loop(model, sol.K_star));
    if (!(rho < 1.0)) {
        std::ostringstream os;
        os << "solve_are: converged but closed loop is unstable (rho=" << rho << ")";
        throw std::runtime_error(os.str());
    }
    return sol;
}

Matrix closed_loop(const SystemModel& model, const PolicyGain& k) {
    require(k.K.rows() == model.m() && k.K.cols() == model.n(),
            "closed_loop: gain dimensions do not match the model");
    return model.A - model.B * k.K;
}

PdMatrix surrogate_value_update(const PdMatrix& p_next, const PolicyGain& k,
                                const SystemModel& model, const CostSpec& cost) {
    require(p_next.dim() == model.n(), "surrogate_value_update: dimension mismatch");
    const Matrix acl = closed_loop(model, k);
    Matrix out = acl.transpose() * p_next.mat() * acl +
                 k.K.transpose() * cost.R.mat() * k.K + cost.Q.mat();
    return PdMatrix(out);
}

double exact_surrogate_cost(const PolicyGain& k, const PdMatrix& p_next,
                            const PdMatrix& sigma0, const SystemModel& model,
                            const CostSpec& cost) {
    const PdMatrix p = surrogate_value_update(p_next, k, model, cost);
    return (p.mat() * sigma0.mat()).trace();
}

Matrix exact_surrogate_gradient(const PolicyGain& k, const PdMatrix& p_next,
                                const PdMatrix& sigma0, const SystemModel& model,
                                const CostSpec& cost) {
    require(p_next.dim() == model.n(), "exact_surrogate_gradient: dimension mismatch");
    const Matrix& B = model.B;
    const Matrix g = (cost.R.mat() + B.transpose() * p_next.mat() * B) * k.K -
                     B.transpose() * p_next.mat() * model.A;
    return 2.0 * g * sigma0.mat();
}

int horizon_for_accuracy(const RiccatiSolution& solution, const SystemModel& model,
                         const CostSpec& cost, double eps) {
    require(eps > 0.0, "horizon_for_accuracy: eps must be positive");
    const PdMatrix& p_star = solution.P_star;
    if (!psd_geq(cost.Q_N.mat(), p_star.mat())) {
        throw std::invalid_argument(
            "horizon_for_accuracy: terminal weight must dominate the stationary solution");
    }
    const Matrix a_cl = closed_loop(model, solution.K_star);
    const double a_cl_star = induced_norm(a_cl, p_star);
    if (!(a_cl_star < 1.0)) {
        throw std::runtime_error(
            "horizon_for_accuracy: closed loop not contractive in the P*-induced norm");
    }
    const double gap_star = induced_norm(cost.Q_N.mat() - p_star.mat(), p_star);
    const double kappa = condition_number(p_star);
    const double num = 2.0 * gap_star * kappa * spectral_norm(a_cl) *
                       spectral_norm(model.B) / (eps * cost.R.lambda_min());
    const double raw = 0.5 * std::log(num) / std::log(1.0 / a_cl_star) + 1.0;
    const int n_out = static_cast<int>(std::ceil(raw));
    return std::max(1, n_out);
}

int horizon_simple(double eps) {
    require(eps > 0.0, "horizon_simple: eps must be positive");
    return std::max(1, static_cast<int>(std::ceil(0.5 * std::log(1.0 / eps))));
}

StabilityReport check_stabilizing(const SystemModel& model, const PolicyGain& k,
                                  const PdMatrix& p_star) {
    StabilityReport rep;
    const Matrix acl = closed_loop(model, k);
    rep.rho = spectral_radius(acl);
    rep.margin = induced_norm(acl, p_star);
    rep.stabilizing = rep.rho < 1.0;
    return rep;
}

} // namespace rhpg
