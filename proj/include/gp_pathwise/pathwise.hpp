#pragma once

#include "gp_pathwise/features.hpp"
#include "gp_pathwise/models.hpp"

#include <optional>
#include <vector>

namespace gp {

/// Conditions a joint Gaussian draw (a, b) on b = beta:
///
///   a + Cov(a, b) Cov(b, b)^{-1} (beta - b).
///
/// `joint` covers the stacked vector [a; b]; the first `a_size` coordinates
/// belong to a.
Vector matheron_condition(const GaussianMoments& joint, Eigen::Index a_size, const Vector& beta,
                          const Vector& a_draw, const Vector& b_draw);

// ---------------------------------------------------------------------------
// Pathwise updates on function values and weights. Every sampler returns one
// draw per row.

/// Joint prior draws f(X) ~ N(0, k(X, X)), one draw per column. Exactly
/// repeated rows of X share a single prior variable.
class JointPrior {
public:
    JointPrior(const Kernel& k, const PointSet& X);
    Matrix draw(Eigen::Index count, Rng& rng) const;

private:
    std::vector<Eigen::Index> index_;
    Matrix factor_;
};

/// f* + K*m Kmm^{-1} (u - f_m) with (f*, f_m) a joint prior draw, u ~ q(u).
class PathwiseSparseSampler {
public:
    PathwiseSparseSampler(const InducingModel& q, const PointSet& Xs);
    Matrix draw(Eigen::Index count, Rng& rng) const;

private:
    Eigen::Index test_size_;
    JointPrior prior_;        // over [Xs; Z]
    Matrix update_;           // K*m Kmm^{-1}
    Vector mean_u_;
    Matrix inducing_factor_;
};

/// f* + K*n (Knn + s^2 I)^{-1} (y - f - eps).
class PathwiseExactSampler {
public:
    PathwiseExactSampler(const Kernel& k, const Dataset& data, const PointSet& Xs);
    Matrix draw(Eigen::Index count, Rng& rng) const;

private:
    Eigen::Index test_size_;
    JointPrior prior_;        // over [Xs; X]
    Matrix update_;           // K*n (Knn + s^2 I)^{-1}
    Vector y_;
    double noise_sd_;
};

Matrix pathwise_sample_sparse(const InducingModel& q, const PointSet& Xs, Eigen::Index count, Rng& rng);
Matrix pathwise_sample_exact(const Kernel& k, const Dataset& data, const PointSet& Xs, Eigen::Index count,
                             Rng& rng);

/// w + Phi^T (Phi Phi^T + s^2 I)^{-1} (y - Phi w - eps) for every column of
/// `weights` (l x count) with matching noise columns (n x count).
Matrix pathwise_update_weights(const FourierBasis& basis, const Dataset& data, const Matrix& weights,
                               const Matrix& noise);

/// count x l posterior weight draws.
Matrix pathwise_sample_weights(const FourierBasis& basis, const Dataset& data, Eigen::Index count, Rng& rng);

// ---------------------------------------------------------------------------
// Decoupled sample paths: Fourier-basis prior plus canonical-basis update,
//
//   path(x) = phi(x)^T w + sum_j v_j k(x, anchor_j).

class DecoupledPath {
public:
    DecoupledPath(FourierBasis basis, WeightVector w, PointSet anchors, Vector coefficients, Kernel kernel);

    const FourierBasis& basis() const { return basis_; }
    const WeightVector& weights() const { return w_; }
    const PointSet& anchors() const { return anchors_; }
    const Vector& coefficients() const { return v_; }
    const Kernel& kernel() const { return kernel_; }
    Eigen::Index dim() const { return kernel_.dim(); }

    Vector operator()(const PointSet& Xs) const;
    double at(const Eigen::Ref<const Vector>& x) const;
    Vector gradient(const Eigen::Ref<const Vector>& x) const;
    /// Value and gradient in one pass over the basis.
    double value_and_gradient(const Eigen::Ref<const Vector>& x, Vector& grad) const;

private:
    FourierBasis basis_;
    WeightVector w_;
    PointSet anchors_;
    Vector v_;
    Kernel kernel_;
};

Vector path_eval(const DecoupledPath& path, const PointSet& Xs);
Vector path_gradient(const DecoupledPath& path, const Eigen::Ref<const Vector>& x);

/// How batched decoupled draws pick their Fourier basis: one basis shared by
/// every draw, or an independent basis per draw (which makes the prior
/// covariance unbiased across draws).
enum class BasisPolicy { shared, per_draw };

/// Caches K_mm's factor for repeated sparse decoupled draws.
class DecoupledSparseSampler {
public:
    explicit DecoupledSparseSampler(InducingModel q);

    const InducingModel& model() const { return q_; }

    /// v = Kmm^{-1} (u - phi(Z) w).
    DecoupledPath path(const FourierBasis& basis, const WeightVector& w, const Vector& u) const;
    DecoupledPath draw(const FourierBasis& basis, Rng& rng) const;

    /// count x |Xs| values of independent draws. With BasisPolicy::shared a
    /// single basis of `basis_size` features is built from rng.
    Matrix draw_values(const PointSet& Xs, Eigen::Index count, Eigen::Index basis_size, BasisPolicy policy,
                       Rng& rng) const;
    /// count x |Xs| values of draws sharing the given basis.
    Matrix draw_values(const FourierBasis& basis, const PointSet& Xs, Eigen::Index count, Rng& rng) const;

private:
    InducingModel q_;
    GramCholesky Kmm_;
    Matrix inducing_factor_;
};

/// Caches the (Knn + s^2 I) factor for repeated exact decoupled draws.
class DecoupledExactSampler {
public:
    DecoupledExactSampler(Kernel k, Dataset data);

    const Dataset& data() const { return data_; }

    /// v = (Knn + s^2 I)^{-1} (y - phi(X) w - eps).
    DecoupledPath path(const FourierBasis& basis, const WeightVector& w, const Vector& eps) const;
    DecoupledPath draw(const FourierBasis& basis, Rng& rng) const;

    Matrix draw_values(const PointSet& Xs, Eigen::Index count, Eigen::Index basis_size, BasisPolicy policy,
                       Rng& rng) const;
    Matrix draw_values(const FourierBasis& basis, const PointSet& Xs, Eigen::Index count, Rng& rng) const;

private:
    Kernel k_;
    Dataset data_;
    std::optional<GramCholesky> factor_;
};

DecoupledPath decoupled_sample_sparse(const InducingModel& q, const FourierBasis& basis, Rng& rng);
DecoupledPath decoupled_sample_exact(const Kernel& k, const Dataset& data, const FourierBasis& basis, Rng& rng);

/// Pure weight-space posterior draw phi(.)^T w, w ~ weight posterior, as a
/// path without anchors.
DecoupledPath weight_space_path(const Kernel& k, const FourierBasis& basis, const Dataset& data, Rng& rng);

}  // namespace gp
