#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "rhpg/matrix_analysis.hpp"
#include "rhpg/rng.hpp"

using namespace rhpg;

namespace {

Matrix random_sym_pd(RngStream& rng, int n) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    return g.transpose() * g + 0.1 * Matrix::Identity(n, n);
}

// Independent distance oracle: solve the generalized eigenproblem U z = l V z
// instead of forming the symmetric similarity.
double distance_oracle(const Matrix& u, const Matrix& v) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(u, v);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < ges.eigenvalues().size(); ++i) {
        const double l = std::log(ges.eigenvalues()[i]);
        sum += l * l;
    }
    return std::sqrt(sum);
}

} // namespace

TEST_CASE("pd matrix construction") {
    CHECK_THROWS_AS(PdMatrix(Matrix::Zero(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(PdMatrix(Matrix::Zero(2, 2)), std::invalid_argument);
    Matrix indef(2, 2);
    indef << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS((PdMatrix(indef)), std::invalid_argument);

    // Construction symmetrizes; the stored matrix is exactly symmetric.
    Matrix skewed(2, 2);
    skewed << 2.0, 0.3, 0.1, 1.0;
    PdMatrix p(skewed);
    CHECK(p.mat()(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p.mat()(0, 1) == p.mat()(1, 0));
}

TEST_CASE("riemannian distance closed forms") {
    PdMatrix i2 = PdMatrix::identity(2);
    PdMatrix two_i(2.0 * Matrix::Identity(2, 2));
    CHECK(riemannian_distance(i2, i2) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(riemannian_distance(two_i, i2) ==
          doctest::Approx(std::sqrt(2.0) * std::log(2.0)).epsilon(1e-12));

    RngStream rng(11);
    for (int t = 0; t < 50; ++t) {
        PdMatrix u(random_sym_pd(rng, 3));
        PdMatrix v(random_sym_pd(rng, 3));
        CHECK(riemannian_distance(u, v) ==
              doctest::Approx(distance_oracle(u.mat(), v.mat())).epsilon(1e-9));
    }

    CHECK_THROWS_AS(riemannian_distance(i2, PdMatrix::identity(3)),
                    std::invalid_argument);
}

TEST_CASE("riemannian distance properties") {
    RngStream rng(12);
    for (int t = 0; t < 1000; ++t) {
        const int n = 1 + static_cast<int>(rng.uniform01() * 4.0) % 4;
        PdMatrix u(random_sym_pd(rng, n));
        PdMatrix v(random_sym_pd(rng, n));
        PdMatrix w(random_sym_pd(rng, n));

        const double duv = riemannian_distance(u, v);
        CHECK(std::abs(duv - riemannian_distance(v, u)) <= 1e-9);
        CHECK(riemannian_distance(u, w) <= duv + riemannian_distance(v, w) + 1e-9);

        const double c = rng.uniform(0.1, 10.0);
        PdMatrix cu(c * u.mat());
        PdMatrix cv(c * v.mat());
        CHECK(std::abs(riemannian_distance(cu, cv) - duv) <= 1e-9);
    }
}

TEST_CASE("induced norm") {
    RngStream rng(13);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng.uniform01() * 4.0) % 4;
        Matrix x(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
        const double sn = spectral_norm(x);
        const double in = induced_norm(x, PdMatrix::identity(n));
        CHECK(std::abs(in - sn) <= 1e-10 * std::max(1.0, sn));
    }

    // Scalar case: the weight cancels.
    Matrix x1(1, 1), w1(1, 1);
    x1 << -3.7;
    w1 << 42.0;
    CHECK(induced_norm(x1, PdMatrix(w1)) == doctest::Approx(3.7).epsilon(1e-14));

    // Closed loop of the benchmark instance at the published gain.
    Matrix acl(1, 1), pstar(1, 1);
    acl << 5.0 - 0.33 * 14.5482;
    pstar << 221.4271;
    CHECK(induced_norm(acl, PdMatrix(pstar)) ==
          doctest::Approx(0.199094).epsilon(1e-10));
}

TEST_CASE("weighted symmetric norm") {
    Matrix x(1, 1), w(1, 1);
    x << -6.0;
    w << 3.0;
    CHECK(weighted_sym_norm(x, PdMatrix(w)) == doctest::Approx(2.0).epsilon(1e-14));
    // Monotone in the semidefinite order.
    RngStream rng(14);
    for (int t = 0; t < 100; ++t) {
        PdMatrix wref(random_sym_pd(rng, 3));
        Matrix a = random_sym_pd(rng, 3);
        Matrix b = a + random_sym_pd(rng, 3);
        CHECK(weighted_sym_norm(a, wref) <= weighted_sym_norm(b, wref) + 1e-12);
    }
}

TEST_CASE("spectral radius") {
    Matrix d(2, 2);
    d << 3.0, 0.0, 0.0, -4.0;
    CHECK(spectral_radius(d) == doctest::Approx(4.0).epsilon(1e-14));

    Matrix nil(2, 2);
    nil << 0.0, 5.0, 0.0, 0.0;
    CHECK(spectral_radius(nil) == doctest::Approx(0.0).epsilon(1e-14));

    Matrix acl(1, 1);
    acl << 5.0 - 0.33 * 14.5482;
    CHECK(spectral_radius(acl) == doctest::Approx(0.199094).epsilon(1e-10));
}

TEST_CASE("pd sqrt") {
    PdMatrix i3 = PdMatrix::identity(3);
    CHECK((pd_sqrt(i3).mat() - Matrix::Identity(3, 3)).norm() <= 1e-14);

    Matrix d(2, 2);
    d << 4.0, 0.0, 0.0, 9.0;
    Matrix expected(2, 2);
    expected << 2.0, 0.0, 0.0, 3.0;
    CHECK((pd_sqrt(PdMatrix(d)).mat() - expected).norm() <= 1e-12);

    RngStream rng(15);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng.uniform01() * 5.0) % 5;
        PdMatrix w(random_sym_pd(rng, n));
        PdMatrix s = pd_sqrt(w);
        CHECK((s.mat() * s.mat() - w.mat()).norm() <= 1e-10 * w.mat().norm());
        CHECK(s.lambda_min() > 0.0);
    }
}

TEST_CASE("condition number") {
    CHECK(condition_number(PdMatrix::identity(4)) == doctest::Approx(1.0));
    Matrix d(2, 2);
    d << 10.0, 0.0, 0.0, 2.0;
    CHECK(condition_number(PdMatrix(d)) == doctest::Approx(5.0).epsilon(1e-12));
    Matrix p(1, 1);
    p << 221.4271;
    CHECK(condition_number(PdMatrix(p)) == doctest::Approx(1.0));
}

TEST_CASE("distance bounds against norm differences") {
    // |U-V| <= |V| e^d d, and the series bound under its hypothesis.
    RngStream rng(16);
    for (int t = 0; t < 1000; ++t) {
        const int n = 1 + static_cast<int>(rng.uniform01() * 4.0) % 4;
        PdMatrix v(random_sym_pd(rng, n));
        PdMatrix u(random_sym_pd(rng, n));
        const double d = riemannian_distance(u, v);
        const double diff = spectral_norm(u.mat() - v.mat());
        CHECK(diff <= spectral_norm(v.mat()) * std::exp(d) * d + 1e-9);

        const double vinv = spectral_norm(v.inverse().mat());
        if (vinv * diff < 1.0) {
            CHECK(d <= vinv * (u.mat() - v.mat()).norm() / (1.0 - vinv * diff) + 1e-9);
        }
    }
}

TEST_CASE("psd order check") {
    Matrix a(2, 2), b(2, 2);
    a << 2.0, 0.0, 0.0, 2.0;
    b << 1.0, 0.0, 0.0, 1.0;
    CHECK(psd_geq(a, b));
    CHECK(!psd_geq(b, a));
    CHECK(psd_geq(a, a)); // ties allowed within tolerance
}
