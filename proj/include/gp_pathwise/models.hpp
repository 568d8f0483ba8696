#pragma once

#include "gp_pathwise/features.hpp"
#include "gp_pathwise/kernel.hpp"

namespace gp {

/// Noisy observations y_i = f(x_i) + eps_i, eps_i ~ N(0, noise_variance).
struct Dataset {
    PointSet X;
    Vector y;
    double noise_variance = 0.0;

    Eigen::Index size() const { return y.size(); }
    void validate() const;
};

/// Mean and covariance of a finite-dimensional Gaussian.
struct GaussianMoments {
    Vector mean;
    Matrix cov;

    Eigen::Index dim() const { return mean.size(); }
};

/// Inducing locations Z with a Gaussian distribution q(u) = N(mean_u, cov_u).
struct InducingModel {
    PointSet Z;
    Vector mean_u;
    Matrix cov_u;
    Kernel kernel;

    Eigen::Index size() const { return Z.rows(); }
};

/// Exact GP regression posterior with the (K + s^2 I) factorization cached.
class ExactPosterior {
public:
    ExactPosterior(Kernel kernel, Dataset data);

    const Kernel& kernel() const { return kernel_; }
    const Dataset& data() const { return data_; }
    const GramCholesky& factor() const { return factor_; }

    Vector mean(const PointSet& Xs) const;
    /// Marginal variances only; cost linear in |Xs|.
    Vector variance(const PointSet& Xs) const;
    GaussianMoments moments(const PointSet& Xs) const;

private:
    Kernel kernel_;
    Dataset data_;
    GramCholesky factor_;
    Vector alpha_;  // (K + s^2 I)^{-1} y
};

GaussianMoments exact_posterior(const Kernel& k, const Dataset& data, const PointSet& Xs);

/// Sparse GP predictive distribution with K_mm's factor cached.
class SparsePosterior {
public:
    explicit SparsePosterior(InducingModel q);

    const InducingModel& model() const { return q_; }
    const GramCholesky& factor() const { return Kmm_; }

    Vector mean(const PointSet& Xs) const;
    Vector variance(const PointSet& Xs) const;
    GaussianMoments moments(const PointSet& Xs) const;

private:
    InducingModel q_;
    GramCholesky Kmm_;
    Vector alpha_;  // K_mm^{-1} mu_u
    Matrix S_;      // L^{-1} (Sigma_u - K_mm) L^{-T}
};

GaussianMoments sparse_posterior(const InducingModel& q, const PointSet& Xs);

/// Closed-form variationally optimal q(u) for fixed inducing locations Z.
InducingModel optimal_inducing(const Kernel& k, const Dataset& data, const PointSet& Z);

enum class WoodburyBranch { automatic, weight_space, data_space };

/// Posterior over Bayesian-linear-model weights. `automatic` solves the
/// smaller of the l x l and n x n systems.
GaussianMoments weight_posterior(const FourierBasis& basis, const Dataset& data,
                                 WoodburyBranch branch = WoodburyBranch::automatic);

/// Draws `count` rows mean + L zeta with L the jittered Cholesky factor of cov.
Matrix location_scale_sample(const GaussianMoments& g, Eigen::Index count, Rng& rng);

/// Same transform with caller-supplied standard normals (p x count).
Matrix location_scale_transform(const GaussianMoments& g, const Matrix& zeta);

/// Gaussian log marginal likelihood of the data under an exact GP.
double log_marginal_likelihood(const Kernel& k, const Dataset& data);

}  // namespace gp
