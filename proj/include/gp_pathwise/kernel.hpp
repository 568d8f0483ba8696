#pragma once

#include "gp_pathwise/random.hpp"
#include "gp_pathwise/types.hpp"

#include <array>

namespace gp {

/// Stationary Matern-5/2 covariance with ARD lengthscales:
///
///   k(x, x') = amplitude * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r),
///   r = || (x - x') / lengthscales ||.
class Kernel {
public:
    static constexpr double nu = 2.5;

    Kernel(double amplitude, Vector lengthscales);

    /// Isotropic convenience constructor.
    static Kernel isotropic(double amplitude, double lengthscale, Eigen::Index dim);

    double amplitude() const { return amplitude_; }
    const Vector& lengthscales() const { return lengthscales_; }
    Eigen::Index dim() const { return lengthscales_.size(); }

    double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const;

    /// Gradient of k(x, xp) with respect to x.
    Vector gradient(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const;

    /// Covariance as a function of the scaled distance r.
    double of_scaled_distance(double r) const;

private:
    double scaled_distance(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp) const;

    double amplitude_;
    Vector lengthscales_;
    Vector inv_sq_lengthscales_;
};

double kernel_eval(const Kernel& k, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& xp);

/// Pairwise covariance matrix, rows indexed by X and columns by Xp.
Matrix gram(const Kernel& k, const PointSet& X, const PointSet& Xp);

/// Symmetric Gram matrix k(X, X); fills only one triangle and mirrors it.
Matrix gram(const Kernel& k, const PointSet& X);

/// Lower Cholesky factor of A + jitter_used * I.
struct GramCholesky {
    Matrix matrix;
    double jitter_used = 0.0;

    Eigen::Index size() const { return matrix.rows(); }
    /// Solves (A + jitter I) x = b.
    Matrix solve(const Matrix& rhs) const;
    /// L^{-1} b
    Matrix solve_lower(const Matrix& rhs) const;
};

/// Relative jitter levels tried in order (multiplied by mean(diag A)).
inline constexpr std::array<double, 4> kJitterLadder{0.0, 1e-8, 1e-6, 1e-4};

/// Cholesky of a symmetric matrix with an escalating diagonal jitter.
/// Throws NumericalError if the last jitter level still fails.
GramCholesky cholesky_jittered(const Matrix& A);

/// Draws `count` frequency vectors (rows) from the normalized spectral
/// density of the kernel, a multivariate Student-t with 2 nu degrees of
/// freedom and scale 1 / lengthscales.
Matrix sample_spectral_frequencies(const Kernel& k, Eigen::Index count, Rng& rng);

}  // namespace gp
