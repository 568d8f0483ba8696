#pragma once

#include "gp_pathwise/features.hpp"
#include "gp_pathwise/models.hpp"

namespace gp {

/// Closed-form 2-Wasserstein distance between two Gaussians,
///
///   W2^2 = |m1 - m2|^2 + tr(K1 + K2 - 2 (K1^1/2 K2 K1^1/2)^1/2),
///
/// with symmetric square roots from an eigendecomposition whose negative
/// eigenvalues are clamped to zero.
double w2_gaussian(const GaussianMoments& g1, const GaussianMoments& g2);

/// Sample mean and unbiased sample covariance of the rows of `samples`.
GaussianMoments empirical_moments(const Matrix& samples);

/// Streams sample rows into running first and second moments.
class MomentAccumulator {
public:
    explicit MomentAccumulator(Eigen::Index dim);

    void add(const Matrix& samples);
    Eigen::Index count() const { return count_; }
    GaussianMoments moments() const;

private:
    Eigen::Index count_ = 0;
    Vector shift_;   // first row seen; improves conditioning of the sums
    Vector sum_;
    Matrix outer_;
};

double w2_empirical_vs_gaussian(const Matrix& samples, const GaussianMoments& g);

struct TransportPlanConfig {
    double epsilon = 1e-2;
    int max_iters = 2000;
    double tolerance = 1e-6;

    void validate() const;
};

struct SinkhornResult {
    double distance = 0.0;   // sqrt of the entropic plan's transport cost
    double violation = 0.0;  // L1 error of the row marginal at exit
    int iterations = 0;
    bool converged = false;
};

/// Entropic optimal transport between uniform empirical measures on P and Q
/// with squared Euclidean cost, solved in the log domain with epsilon
/// scaling.
SinkhornResult sinkhorn_distance(const PointSet& P, const PointSet& Q, const TransportPlanConfig& cfg);

/// max over sign vectors s of |A s|_1, i.e. the l-infinity to l-1 operator
/// norm, by exhaustive enumeration. Refuses more than 20 columns.
double inf_to_one_norm(const Matrix& A);

struct BoundConstants {
    double c1 = 0.0;
    double c3 = 0.0;
    double inverse_gram_norm = 0.0;  // |K_mm^{-1}|_{L(l_inf; l_1)}
};

/// Constants of the Wasserstein (C1) and covariance (C3) error bounds for
/// decoupled sparse sampling with inducing locations Z.
BoundConstants bound_constants(const Kernel& k, const PointSet& Z, double domain_diameter, int dim);

/// max over probe pairs of |phi(x)^T phi(x') - k(x, x')|, diagonal included.
double rff_kernel_error(const Kernel& k, const FourierBasis& basis, const PointSet& probes);

}  // namespace gp
