#include "gp_pathwise/kernel.hpp"

#include <doctest.h>

#include <cmath>

using namespace gp;

namespace {

Kernel default_kernel(Eigen::Index d) { return Kernel::isotropic(1.0, std::sqrt(d / 100.0), d); }

}  // namespace

TEST_CASE("kernel evaluates to the amplitude at zero lag") {
    const Kernel k = Kernel::isotropic(1.0, 0.3, 3);
    const Vector x = Vector::Constant(3, 0.4);
    CHECK(kernel_eval(k, x, x) == 1.0);
    const Kernel k2(2.5, Vector::Constant(2, 0.7));
    CHECK(kernel_eval(k2, Vector::Zero(2), Vector::Zero(2)) == 2.5);
}

TEST_CASE("kernel is bit-exactly symmetric") {
    const Kernel k(1.3, (Vector(3) << 0.2, 0.5, 1.1).finished());
    Rng rng(7);
    for (int t = 0; t < 50; ++t) {
        const Vector a = standard_normal(3, rng);
        const Vector b = standard_normal(3, rng);
        CHECK(kernel_eval(k, a, b) == kernel_eval(k, b, a));
    }
}

TEST_CASE("kernel matches a high-precision Matern-5/2 evaluation") {
    // mpmath at 40 digits: r = 0.1 / sqrt(2/100), (1 + s + s^2/3) exp(-s), s = sqrt(5) r
    const Kernel k = default_kernel(2);
    const Vector x = (Vector(2) << 0.1, 0.0).finished();
    CHECK(kernel_eval(k, x, Vector::Zero(2)) == doctest::Approx(0.7024957601538032738733702).epsilon(1e-14));
}

TEST_CASE("kernel rejects dimension mismatch") {
    const Kernel k = default_kernel(2);
    CHECK_THROWS_AS(kernel_eval(k, Vector::Zero(3), Vector::Zero(2)), DimensionError);
    CHECK_THROWS_AS(gram(k, PointSet::Zero(2, 3), PointSet::Zero(2, 2)), DimensionError);
    CHECK_THROWS_AS(Kernel(0.0, Vector::Ones(1)), std::invalid_argument);
}

TEST_CASE("kernel maximum is at zero lag") {
    const Kernel k(2.0, (Vector(2) << 0.3, 0.9).finished());
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const Vector a = standard_normal(2, rng);
        const Vector b = standard_normal(2, rng);
        CHECK(std::abs(k(a, b)) <= k(a, a));
        CHECK(k(a, b) > 0.0);
    }
}

TEST_CASE("kernel gradient matches central differences") {
    const Kernel k(1.7, (Vector(3) << 0.3, 0.5, 0.8).finished());
    Rng rng(11);
    const double h = 1e-6;
    for (int t = 0; t < 20; ++t) {
        const Vector x = uniform_points(1, 3, rng).row(0).transpose();
        const Vector z = uniform_points(1, 3, rng).row(0).transpose();
        const Vector g = k.gradient(x, z);
        for (int c = 0; c < 3; ++c) {
            Vector xp = x, xm = x;
            xp(c) += h;
            xm(c) -= h;
            CHECK(g(c) == doctest::Approx((k(xp, z) - k(xm, z)) / (2 * h)).epsilon(1e-6).scale(1.0));
        }
    }
    CHECK(k.gradient(Vector::Zero(3), Vector::Zero(3)).norm() == 0.0);
}

TEST_CASE("gram matrices") {
    const Kernel k(1.5, Vector::Constant(2, 0.4));
    Rng rng(5);
    const PointSet X = uniform_points(3, 2, rng);
    const PointSet Y = uniform_points(4, 2, rng);

    SUBCASE("singleton") {
        const Matrix G = gram(k, X.topRows(1), X.topRows(1));
        REQUIRE(G.rows() == 1);
        CHECK(G(0, 0) == 1.5);
    }
    SUBCASE("transpose symmetry") {
        CHECK((gram(k, X, Y) - gram(k, Y, X).transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((gram(k, X) - gram(k, X, X)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("entrywise oracle") {
        const Matrix G = gram(k, X, X);
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j)
                CHECK(G(i, j) == doctest::Approx(kernel_eval(k, X.row(i).transpose(), X.row(j).transpose())).epsilon(1e-14));
    }
    SUBCASE("empty sets") {
        const Matrix G = gram(k, PointSet(0, 2), Y);
        CHECK(G.rows() == 0);
        CHECK(G.cols() == 4);
    }
}

TEST_CASE("jittered Cholesky") {
    SUBCASE("identity") {
        const GramCholesky L = cholesky_jittered(Matrix::Identity(4, 4));
        CHECK(L.jitter_used == 0.0);
        CHECK((L.matrix - Matrix::Identity(4, 4)).norm() == 0.0);
    }
    SUBCASE("diagonal") {
        const Matrix A = (Vector(2) << 4.0, 9.0).finished().asDiagonal();
        const GramCholesky L = cholesky_jittered(A);
        CHECK(L.matrix(0, 0) == doctest::Approx(2.0));
        CHECK(L.matrix(1, 1) == doctest::Approx(3.0));
        CHECK(L.matrix(1, 0) == 0.0);
    }
    SUBCASE("near-duplicate points need jitter") {
        const Kernel k = default_kernel(1);
        Rng rng(2);
        PointSet X = PointSet::Constant(16, 1, 0.5) + 1e-9 * uniform_points(16, 1, rng);
        const Matrix A = gram(k, X);
        const GramCholesky L = cholesky_jittered(A);
        CHECK(L.jitter_used > 0.0);
        Matrix jittered = A;
        jittered.diagonal().array() += L.jitter_used;
        CHECK((L.matrix * L.matrix.transpose() - jittered).norm() / jittered.norm() < 1e-8);
        CHECK((L.matrix.diagonal().array() > 0.0).all());
    }
    SUBCASE("well separated points need little jitter") {
        const Kernel k = default_kernel(2);
        PointSet X(25, 2);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) X.row(5 * i + j) << 0.2 * i, 0.2 * j;
        const GramCholesky L = cholesky_jittered(gram(k, X));
        CHECK(L.jitter_used <= 1e-6);
    }
    SUBCASE("indefinite matrix fails at maximum jitter") {
        const Matrix A = (Vector(2) << 1.0, -1.0).finished().asDiagonal();
        CHECK_THROWS_AS(cholesky_jittered(A), NumericalError);
    }
}

TEST_CASE("spectral frequencies") {
    const Kernel k = Kernel::isotropic(1.0, 0.2, 1);

    SUBCASE("deterministic given the seed") {
        Rng a(42), b(42);
        CHECK(sample_spectral_frequencies(k, 64, a) == sample_spectral_frequencies(k, 64, b));
    }
    SUBCASE("zero count is an error") {
        Rng rng(1);
        CHECK_THROWS_AS(sample_spectral_frequencies(k, 0, rng), std::invalid_argument);
    }
    SUBCASE("Bochner Monte-Carlo recovers the correlation") {
        Rng rng(9);
        const Matrix theta = sample_spectral_frequencies(k, 100000, rng);
        for (const double t : {0.0, 0.1, 0.2}) {
            const double estimate = (theta.col(0).array() * t).cos().mean();
            CHECK(std::abs(estimate - k.of_scaled_distance(t / 0.2)) < 0.01);
        }
    }
    SUBCASE("marginal variance matches the scaled Student-t") {
        Rng rng(10);
        const Matrix theta = sample_spectral_frequencies(k, 1000000, rng);
        // Student-t with 5 degrees of freedom has variance 5/3; scale 1/l.
        const double expected = (5.0 / 3.0) / (0.2 * 0.2);
        const double mean = theta.col(0).mean();
        const double var = (theta.col(0).array() - mean).square().mean();
        CHECK(std::abs(var / expected - 1.0) < 0.02);
    }
}

TEST_CASE("spectral Monte-Carlo error decays as one over root l") {
    const Kernel k = Kernel::isotropic(1.0, 0.15, 2);
    Rng rng(77);
    const PointSet X = uniform_points(8, 2, rng);
    const Matrix exact = gram(k, X);
    auto rms = [&](Eigen::Index l) {
        double total = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const Matrix theta = sample_spectral_frequencies(k, l, rng);
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
                    const Vector lag = (X.row(i) - X.row(j)).transpose();
                    const double estimate = (theta * lag).array().cos().mean();
                    total += std::pow(estimate - exact(i, j), 2);
                }
        }
        return std::sqrt(total);
    };
    const double ratio = rms(16000) / rms(4000);
    CHECK(ratio >= 0.3);
    CHECK(ratio <= 0.7);
}
