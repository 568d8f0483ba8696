#pragma once

#include "gp_pathwise/kernel.hpp"

namespace gp {

/// Random Fourier feature map
///
///   phi_j(x) = sqrt(2 amplitude / l) cos(theta_j^T x + tau_j),  j = 1..l.
///
/// The amplitude lives in the feature scale so prior weights stay N(0, I).
struct FourierBasis {
    Matrix frequencies;  // l x d
    Vector phases;       // l, in [0, 2 pi)
    double amplitude = 1.0;

    Eigen::Index size() const { return phases.size(); }
    Eigen::Index dim() const { return frequencies.cols(); }
    double scale() const;
};

/// Weights of a Bayesian linear model over a FourierBasis.
struct WeightVector {
    Vector values;
};

FourierBasis build_basis(const Kernel& k, Eigen::Index count, Rng& rng);

/// |X| x l feature matrix.
Matrix features(const FourierBasis& basis, const PointSet& X);

/// l x d Jacobian of phi at a single point.
Matrix features_gradient(const FourierBasis& basis, const Eigen::Ref<const Vector>& x);

WeightVector draw_prior_function(const FourierBasis& basis, Rng& rng);

/// f(X) = phi(X) w
Vector evaluate(const FourierBasis& basis, const WeightVector& w, const PointSet& X);

}  // namespace gp
