#include "gp_pathwise/features.hpp"

#include <cmath>
#include <numbers>

namespace gp {

double FourierBasis::scale() const {
    return std::sqrt(2.0 * amplitude / static_cast<double>(size()));
}

FourierBasis build_basis(const Kernel& k, Eigen::Index count, Rng& rng) {
    FourierBasis basis;
    basis.frequencies = sample_spectral_frequencies(k, count, rng);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    basis.phases.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) basis.phases(i) = phase(rng);
    basis.amplitude = k.amplitude();
    return basis;
}

Matrix features(const FourierBasis& basis, const PointSet& X) {
    if (X.rows() == 0) return Matrix(0, basis.size());
    require_dims(basis.dim(), X.cols(), "features: point dimension");
    Matrix out = X * basis.frequencies.transpose();
    out.rowwise() += basis.phases.transpose();
    return basis.scale() * out.array().cos().matrix();
}

Matrix features_gradient(const FourierBasis& basis, const Eigen::Ref<const Vector>& x) {
    require_dims(basis.dim(), x.size(), "features_gradient: point dimension");
    const Eigen::ArrayXd arg = (basis.frequencies * x + basis.phases).array();
    return (-basis.scale() * arg.sin()).matrix().asDiagonal() * basis.frequencies;
}

WeightVector draw_prior_function(const FourierBasis& basis, Rng& rng) {
    return {standard_normal(basis.size(), rng)};
}

Vector evaluate(const FourierBasis& basis, const WeightVector& w, const PointSet& X) {
    require_dims(basis.size(), w.values.size(), "evaluate: weight count");
    return features(basis, X) * w.values;
}

}  // namespace gp
