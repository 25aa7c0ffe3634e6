#pragma once

#include <stdexcept>

#include <Eigen/Core>

namespace rhpg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric positive definite matrix. Construction symmetrizes the input as
// (X + X^T)/2 and rejects it unless lambda_min > n * eps * lambda_max, which
// tolerates the roundoff accumulated by backward recursions.
class PdMatrix {
  public:
    explicit PdMatrix(const Matrix& x);

    const Matrix& mat() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }

    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }

    /// The unique positive definite square root.
    PdMatrix sqrt() const;
    /// Inverse of the square root (computed from the same eigensystem).
    PdMatrix inv_sqrt() const;
    PdMatrix inverse() const;

    static PdMatrix identity(Eigen::Index n);

  private:
    PdMatrix() = default;
    Matrix mat_;
    Matrix eigvecs_;
    Vector eigvals_;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
};

/// Riemannian distance between positive definite matrices:
/// sqrt(sum_i log^2 lambda_i(U V^-1)). Evaluated through the symmetric
/// similarity V^{-1/2} U V^{-1/2}, which has the same spectrum.
double riemannian_distance(const PdMatrix& u, const PdMatrix& v);

/// W-induced norm of X: sup_{z != 0} sqrt(z^T X^T W X z / z^T W z),
/// i.e. the spectral norm of W^{1/2} X W^{-1/2}.
double induced_norm(const Matrix& x, const PdMatrix& w);

/// W-relative norm of a symmetric matrix: |W^{-1/2} X W^{-1/2}|. The natural
/// scaling for value-matrix errors; equals induced_norm/|W| in the scalar
/// case and is monotone in the semidefinite order.
double weighted_sym_norm(const Matrix& x, const PdMatrix& w);

/// Largest singular value.
double spectral_norm(const Matrix& x);

/// max_i |lambda_i(X)| for a general square matrix.
double spectral_radius(const Matrix& x);

PdMatrix pd_sqrt(const PdMatrix& w);

/// lambda_max(W) / lambda_min(W).
double condition_number(const PdMatrix& w);

/// Semidefinite order check X >= Y, i.e. lambda_min(X - Y) >= -tol_scale*|X|.
bool psd_geq(const Matrix& x, const Matrix& y, double tol_scale = 1e-8);

/// Smallest eigenvalue of the symmetrized matrix.
double lambda_min_sym(const Matrix& x);

} // namespace rhpg
