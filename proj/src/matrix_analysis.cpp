#include "rhpg/matrix_analysis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace rhpg {

namespace {

void require_square(const Matrix& x, const char* what) {
    if (x.rows() != x.cols() || x.rows() < 1) {
        std::ostringstream os;
        os << what << ": expected a nonempty square matrix, got " << x.rows()
           << "x" << x.cols();
        throw std::invalid_argument(os.str());
    }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        std::ostringstream os;
        os << what << ": dimension mismatch (" << a << " vs " << b << ")";
        throw std::invalid_argument(os.str());
    }
}

} // namespace

PdMatrix::PdMatrix(const Matrix& x) {
    require_square(x, "PdMatrix");
    mat_ = 0.5 * (x + x.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(mat_);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("PdMatrix: eigensolve failed");
    }
    eigvals_ = es.eigenvalues();
    eigvecs_ = es.eigenvectors();
    lambda_min_ = eigvals_.minCoeff();
    lambda_max_ = eigvals_.maxCoeff();
    const double n = static_cast<double>(mat_.rows());
    const double floor = n * std::numeric_limits<double>::epsilon() * lambda_max_;
    if (!(lambda_max_ > 0.0) || !(lambda_min_ > floor)) {
        std::ostringstream os;
        os << "PdMatrix: matrix is not positive definite (lambda_min="
           << lambda_min_ << ", lambda_max=" << lambda_max_ << ")";
        throw std::invalid_argument(os.str());
    }
}

PdMatrix PdMatrix::identity(Eigen::Index n) {
    return PdMatrix(Matrix::Identity(n, n));
}

PdMatrix PdMatrix::sqrt() const {
    Matrix s = eigvecs_ * eigvals_.cwiseSqrt().asDiagonal() * eigvecs_.transpose();
    return PdMatrix(s);
}

PdMatrix PdMatrix::inv_sqrt() const {
    Matrix s = eigvecs_ * eigvals_.cwiseSqrt().cwiseInverse().asDiagonal() *
               eigvecs_.transpose();
    return PdMatrix(s);
}

PdMatrix PdMatrix::inverse() const {
    Matrix s = eigvecs_ * eigvals_.cwiseInverse().asDiagonal() * eigvecs_.transpose();
    return PdMatrix(s);
}

double riemannian_distance(const PdMatrix& u, const PdMatrix& v) {
    require_same_dim(u.dim(), v.dim(), "riemannian_distance");
    const Matrix vis = v.inv_sqrt().mat();
    Matrix m = vis * u.mat() * vis;
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("riemannian_distance: eigensolve failed");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()[i];
        if (!(lam > 0.0)) {
            throw std::runtime_error("riemannian_distance: similarity lost definiteness");
        }
        const double l = std::log(lam);
        sum += l * l;
    }
    return std::sqrt(sum);
}

double spectral_norm(const Matrix& x) {
    if (x.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(x);
    return svd.singularValues()[0];
}

double induced_norm(const Matrix& x, const PdMatrix& w) {
    require_square(x, "induced_norm");
    require_same_dim(x.rows(), w.dim(), "induced_norm");
    return spectral_norm(w.sqrt().mat() * x * w.inv_sqrt().mat());
}

double weighted_sym_norm(const Matrix& x, const PdMatrix& w) {
    require_square(x, "weighted_sym_norm");
    require_same_dim(x.rows(), w.dim(), "weighted_sym_norm");
    const Matrix s = w.inv_sqrt().mat();
    Matrix m = s * x * s;
    m = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const Matrix& x) {
    require_square(x, "spectral_radius");
    Eigen::EigenSolver<Matrix> es(x, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("spectral_radius: eigensolve failed");
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

PdMatrix pd_sqrt(const PdMatrix& w) { return w.sqrt(); }

double condition_number(const PdMatrix& w) {
    return w.lambda_max() / w.lambda_min();
}

double lambda_min_sym(const Matrix& x) {
    require_square(x, "lambda_min_sym");
    Matrix s = 0.5 * (x + x.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool psd_geq(const Matrix& x, const Matrix& y, double tol_scale) {
    require_same_dim(x.rows(), y.rows(), "psd_geq");
    const double scale = std::max(1.0, spectral_norm(x));
    return lambda_min_sym(x - y) >= -tol_scale * scale;
}

} // namespace rhpg
