#include "gp_pathwise/kernel.hpp"

#include <cmath>
#include <sstream>

namespace gp {

namespace {
constexpr double kSqrt5 = 2.2360679774997896964091736687313;
}

Kernel::Kernel(double amplitude, Vector lengthscales)
    : amplitude_(amplitude), lengthscales_(std::move(lengthscales)) {
    if (!(amplitude_ > 0.0)) throw std::invalid_argument("kernel amplitude must be positive");
    if (lengthscales_.size() == 0) throw std::invalid_argument("kernel needs at least one lengthscale");
    if ((lengthscales_.array() <= 0.0).any())
        throw std::invalid_argument("kernel lengthscales must be positive");
    inv_sq_lengthscales_ = lengthscales_.array().square().inverse();
}

Kernel Kernel::isotropic(double amplitude, double lengthscale, Eigen::Index dim) {
    return Kernel(amplitude, Vector::Constant(dim, lengthscale));
}

double Kernel::scaled_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const {
    require_dims(dim(), x.size(), "kernel input");
    require_dims(dim(), xp.size(), "kernel input");
    double sq = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        const double diff = x(i) - xp(i);
        sq += diff * diff * inv_sq_lengthscales_(i);
    }
    return std::sqrt(sq);
}

double Kernel::of_scaled_distance(double r) const {
    const double s = kSqrt5 * r;
    return amplitude_ * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double Kernel::operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const {
    return of_scaled_distance(scaled_distance(x, xp));
}

Vector Kernel::gradient(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const {
    const double s = kSqrt5 * scaled_distance(x, xp);
    // dk/dx = -(5 a / 3) (1 + sqrt5 r) exp(-sqrt5 r) (x - x') / l^2
    const double scale = -(5.0 * amplitude_ / 3.0) * (1.0 + s) * std::exp(-s);
    return scale * ((x - xp).array() * inv_sq_lengthscales_.array()).matrix();
}

double kernel_eval(const Kernel& k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) {
    return k(x, xp);
}

Matrix gram(const Kernel& k, const PointSet& X, const PointSet& Xp) {
    Matrix out(X.rows(), Xp.rows());
    if (X.rows() == 0 || Xp.rows() == 0) return out;
    require_dims(k.dim(), X.cols(), "gram: left point set");
    require_dims(k.dim(), Xp.cols(), "gram: right point set");
    // Scale once so the inner loop is a plain Euclidean distance.
    const Eigen::ArrayXd inv_l = k.lengthscales().array().inverse();
    const Matrix A = X.array().rowwise() * inv_l.transpose();
    const Matrix B = Xp.array().rowwise() * inv_l.transpose();
    const Eigen::Index d = k.dim();
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            double sq = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                const double diff = A(i, c) - B(j, c);
                sq += diff * diff;
            }
            out(i, j) = k.of_scaled_distance(std::sqrt(sq));
        }
    }
    return out;
}

Matrix gram(const Kernel& k, const PointSet& X) {
    Matrix out(X.rows(), X.rows());
    if (X.rows() == 0) return out;
    require_dims(k.dim(), X.cols(), "gram: point set");
    const Eigen::ArrayXd inv_l = k.lengthscales().array().inverse();
    const Matrix A = X.array().rowwise() * inv_l.transpose();
    const Eigen::Index d = k.dim();
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        out(j, j) = k.amplitude();
        for (Eigen::Index i = j + 1; i < A.rows(); ++i) {
            double sq = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                const double diff = A(i, c) - A(j, c);
                sq += diff * diff;
            }
            out(i, j) = out(j, i) = k.of_scaled_distance(std::sqrt(sq));
        }
    }
    return out;
}

Matrix GramCholesky::solve(const Matrix& rhs) const {
    const auto L = matrix.triangularView<Eigen::Lower>();
    return L.transpose().solve(L.solve(rhs));
}

Matrix GramCholesky::solve_lower(const Matrix& rhs) const {
    return matrix.triangularView<Eigen::Lower>().solve(rhs);
}

GramCholesky cholesky_jittered(const Matrix& A) {
    if (A.rows() != A.cols()) throw DimensionError("cholesky_jittered: matrix is not square");
    const Eigen::Index n = A.rows();
    if (n == 0) return {};
    const double mean_diag = A.diagonal().mean();
    const double scale = mean_diag > 0.0 ? mean_diag : 1.0;
    for (const double level : kJitterLadder) {
        const double jitter = level * scale;
        Matrix jittered = A;
        jittered.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(jittered);
        if (llt.info() != Eigen::Success) continue;
        Matrix L = llt.matrixL();
        if ((L.diagonal().array() > 0.0).all() && L.allFinite()) return {std::move(L), jitter};
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "cholesky_jittered: factorization failed at maximum jitter " << kJitterLadder.back() * scale
        << " (size " << n << ", min eigenvalue " << eig.eigenvalues().minCoeff() << ", max eigenvalue "
        << eig.eigenvalues().maxCoeff() << ")";
    throw NumericalError(msg.str());
}

Matrix sample_spectral_frequencies(const Kernel& k, Eigen::Index count, Rng& rng) {
    if (count < 1) throw std::invalid_argument("sample_spectral_frequencies: count must be at least 1");
    const Eigen::Index d = k.dim();
    std::normal_distribution<double> normal;
    std::chi_squared_distribution<double> chi2(2.0 * Kernel::nu);
    Matrix theta(count, d);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (Eigen::Index c = 0; c < d; ++c) theta(i, c) = normal(rng) / k.lengthscales()(c);
        // Gaussian scale mixture: z * sqrt(2 nu / u), u ~ chi^2(2 nu).
        theta.row(i) *= std::sqrt(2.0 * Kernel::nu / chi2(rng));
    }
    return theta;
}

}  // namespace gp
