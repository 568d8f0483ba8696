#include "gp_pathwise/pathwise.hpp"
#include "gp_pathwise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gp {

namespace {

constexpr Eigen::Index kChunk = 2048;

// Factor used for drawing samples: an exactly zero covariance gets a zero
// factor so degenerate distributions stay degenerate.
Matrix sampling_factor(const Matrix& cov) {
    if (cov.size() == 0 || cov.isZero(0.0)) return Matrix::Zero(cov.rows(), cov.cols());
    return cholesky_jittered(cov).matrix;
}

PointSet stack(const PointSet& A, const PointSet& B) {
    PointSet out(A.rows() + B.rows(), std::max(A.cols(), B.cols()));
    if (A.rows() > 0) out.topRows(A.rows()) = A;
    if (B.rows() > 0) out.bottomRows(B.rows()) = B;
    return out;
}

// Splits `count` draws into fixed-size chunks, each with its own generator
// stream derived from one value of `rng`; results do not depend on the
// number of worker threads.
template <class ChunkFn>
Matrix chunked_draws(Eigen::Index count, Eigen::Index width, Rng& rng, ChunkFn&& fn) {
    if (count < 0) throw std::invalid_argument("sample count must be nonnegative");
    Matrix out(count, width);
    const std::uint64_t base = rng();
    const auto chunks = static_cast<std::size_t>((count + kChunk - 1) / kChunk);
    parallel_for(chunks, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunk;
        const Eigen::Index size = std::min(kChunk, count - begin);
        Rng chunk_rng = make_stream(base, c);
        out.middleRows(begin, size) = fn(size, chunk_rng);
    });
    return out;
}

}  // namespace

Vector matheron_condition(const GaussianMoments& joint, Eigen::Index a_size, const Vector& beta,
                          const Vector& a_draw, const Vector& b_draw) {
    const Eigen::Index b_size = joint.dim() - a_size;
    if (a_size < 0 || b_size < 0) throw DimensionError("matheron_condition: partition larger than joint");
    require_dims(joint.dim(), joint.cov.rows(), "matheron_condition: joint covariance");
    require_dims(a_size, a_draw.size(), "matheron_condition: a draw");
    require_dims(b_size, b_draw.size(), "matheron_condition: b draw");
    require_dims(b_size, beta.size(), "matheron_condition: observed values");
    const GramCholesky Lbb = cholesky_jittered(joint.cov.bottomRightCorner(b_size, b_size));
    return a_draw + joint.cov.topRightCorner(a_size, b_size) * Lbb.solve(beta - b_draw);
}

// --------------------------------------------------------------------------

JointPrior::JointPrior(const Kernel& k, const PointSet& X) {
    std::map<std::vector<double>, Eigen::Index> seen;
    std::vector<Eigen::Index> keep;
    index_.resize(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::vector<double> key(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index c = 0; c < X.cols(); ++c) key[static_cast<std::size_t>(c)] = X(i, c);
        auto [it, inserted] = seen.emplace(std::move(key), static_cast<Eigen::Index>(keep.size()));
        if (inserted) keep.push_back(i);
        index_[static_cast<std::size_t>(i)] = it->second;
    }
    PointSet unique(static_cast<Eigen::Index>(keep.size()), X.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) unique.row(static_cast<Eigen::Index>(r)) = X.row(keep[r]);
    factor_ = cholesky_jittered(gram(k, unique)).matrix;
}

Matrix JointPrior::draw(Eigen::Index count, Rng& rng) const {
    const Matrix base = factor_.triangularView<Eigen::Lower>() * standard_normal(factor_.rows(), count, rng);
    Matrix out(static_cast<Eigen::Index>(index_.size()), count);
    for (std::size_t i = 0; i < index_.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = base.row(index_[i]);
    return out;
}

PathwiseSparseSampler::PathwiseSparseSampler(const InducingModel& q, const PointSet& Xs)
    : test_size_(Xs.rows()), prior_(q.kernel, stack(Xs, q.Z)), mean_u_(q.mean_u) {
    require_dims(q.size(), q.mean_u.size(), "pathwise sparse: inducing mean");
    require_dims(q.size(), q.cov_u.rows(), "pathwise sparse: inducing covariance");
    if (Xs.rows() == 0) throw std::invalid_argument("pathwise sparse: empty test set");
    const GramCholesky Kmm = cholesky_jittered(gram(q.kernel, q.Z));
    update_ = Kmm.solve(gram(q.kernel, q.Z, Xs)).transpose();
    inducing_factor_ = sampling_factor(q.cov_u);
}

Matrix PathwiseSparseSampler::draw(Eigen::Index count, Rng& rng) const {
    return chunked_draws(count, test_size_, rng, [&](Eigen::Index size, Rng& r) -> Matrix {
        const Eigen::Index m = mean_u_.size();
        const Matrix f = prior_.draw(size, r);
        Matrix u = inducing_factor_ * standard_normal(m, size, r);
        u.colwise() += mean_u_;
        const Matrix out = f.topRows(test_size_) + update_ * (u - f.bottomRows(m));
        return out.transpose();
    });
}

PathwiseExactSampler::PathwiseExactSampler(const Kernel& k, const Dataset& data, const PointSet& Xs)
    : test_size_(Xs.rows()), prior_(k, stack(Xs, data.X)), y_(data.y), noise_sd_(std::sqrt(data.noise_variance)) {
    data.validate();
    if (data.size() > 0) {
        Matrix K = gram(k, data.X);
        K.diagonal().array() += data.noise_variance;
        update_ = cholesky_jittered(K).solve(gram(k, data.X, Xs)).transpose();
    }
}

Matrix PathwiseExactSampler::draw(Eigen::Index count, Rng& rng) const {
    return chunked_draws(count, test_size_, rng, [&](Eigen::Index size, Rng& r) -> Matrix {
        const Eigen::Index n = y_.size();
        const Matrix f = prior_.draw(size, r);
        if (n == 0) return f.transpose();
        Matrix residual = -f.bottomRows(n) - noise_sd_ * standard_normal(n, size, r);
        residual.colwise() += y_;
        const Matrix out = f.topRows(test_size_) + update_ * residual;
        return out.transpose();
    });
}

Matrix pathwise_sample_sparse(const InducingModel& q, const PointSet& Xs, Eigen::Index count, Rng& rng) {
    return PathwiseSparseSampler(q, Xs).draw(count, rng);
}

Matrix pathwise_sample_exact(const Kernel& k, const Dataset& data, const PointSet& Xs, Eigen::Index count,
                             Rng& rng) {
    return PathwiseExactSampler(k, data, Xs).draw(count, rng);
}

Matrix pathwise_update_weights(const FourierBasis& basis, const Dataset& data, const Matrix& weights,
                               const Matrix& noise) {
    data.validate();
    require_dims(basis.size(), weights.rows(), "pathwise weights: weight length");
    const Eigen::Index n = data.size();
    if (n == 0) return weights;
    require_dims(n, noise.rows(), "pathwise weights: noise length");
    require_dims(weights.cols(), noise.cols(), "pathwise weights: noise count");
    const Matrix Phi = features(basis, data.X);
    Matrix G = Phi * Phi.transpose();
    G.diagonal().array() += data.noise_variance;
    Matrix residual = -(Phi * weights) - noise;
    residual.colwise() += data.y;
    return weights + Phi.transpose() * cholesky_jittered(G).solve(residual);
}

Matrix pathwise_sample_weights(const FourierBasis& basis, const Dataset& data, Eigen::Index count, Rng& rng) {
    const Matrix w = standard_normal(basis.size(), count, rng);
    const Matrix eps = std::sqrt(data.noise_variance) * standard_normal(data.size(), count, rng);
    return pathwise_update_weights(basis, data, w, eps).transpose();
}

// --------------------------------------------------------------------------

DecoupledPath::DecoupledPath(FourierBasis basis, WeightVector w, PointSet anchors, Vector coefficients,
                             Kernel kernel)
    : basis_(std::move(basis)),
      w_(std::move(w)),
      anchors_(std::move(anchors)),
      v_(std::move(coefficients)),
      kernel_(std::move(kernel)) {
    require_dims(basis_.size(), w_.values.size(), "decoupled path: weights");
    require_dims(anchors_.rows(), v_.size(), "decoupled path: update coefficients");
    require_dims(kernel_.dim(), basis_.dim(), "decoupled path: basis dimension");
}

Vector DecoupledPath::operator()(const PointSet& Xs) const {
    require_dims(dim(), Xs.cols(), "path_eval: point dimension");
    // Blocks of rows bound the temporary feature and Gram matrices.
    constexpr Eigen::Index kBlock = 512;
    Vector out(Xs.rows());
    for (Eigen::Index begin = 0; begin < Xs.rows(); begin += kBlock) {
        const Eigen::Index size = std::min(kBlock, Xs.rows() - begin);
        const PointSet block = Xs.middleRows(begin, size);
        out.segment(begin, size).noalias() = features(basis_, block) * w_.values;
        if (v_.size() > 0) out.segment(begin, size).noalias() += gram(kernel_, block, anchors_) * v_;
    }
    return out;
}

double DecoupledPath::at(const Eigen::Ref<const Vector>& x) const {
    require_dims(dim(), x.size(), "path_eval: point dimension");
    const Eigen::ArrayXd arg = (basis_.frequencies * x + basis_.phases).array();
    double value = basis_.scale() * (arg.cos() * w_.values.array()).sum();
    for (Eigen::Index j = 0; j < v_.size(); ++j) value += v_(j) * kernel_(x, anchors_.row(j).transpose());
    return value;
}

Vector DecoupledPath::gradient(const Eigen::Ref<const Vector>& x) const {
    Vector g = features_gradient(basis_, x).transpose() * w_.values;
    for (Eigen::Index j = 0; j < v_.size(); ++j) g += v_(j) * kernel_.gradient(x, anchors_.row(j).transpose());
    return g;
}

double DecoupledPath::value_and_gradient(const Eigen::Ref<const Vector>& x, Vector& grad) const {
    require_dims(dim(), x.size(), "path gradient: point dimension");
    const Vector arg = basis_.frequencies * x + basis_.phases;
    const double scale = basis_.scale();
    double value = 0.0;
    Vector weighted_sin(arg.size());
    for (Eigen::Index j = 0; j < arg.size(); ++j) {
        double s = 0.0, c = 0.0;
        ::sincos(arg(j), &s, &c);
        value += c * w_.values(j);
        weighted_sin(j) = s * w_.values(j);
    }
    value *= scale;
    grad = -scale * (basis_.frequencies.transpose() * weighted_sin);
    for (Eigen::Index j = 0; j < v_.size(); ++j) {
        const Vector z = anchors_.row(j).transpose();
        value += v_(j) * kernel_(x, z);
        grad += v_(j) * kernel_.gradient(x, z);
    }
    return value;
}

Vector path_eval(const DecoupledPath& path, const PointSet& Xs) { return path(Xs); }

Vector path_gradient(const DecoupledPath& path, const Eigen::Ref<const Vector>& x) { return path.gradient(x); }

DecoupledSparseSampler::DecoupledSparseSampler(InducingModel q) : q_(std::move(q)) {
    require_dims(q_.size(), q_.mean_u.size(), "decoupled sparse: inducing mean");
    require_dims(q_.size(), q_.cov_u.rows(), "decoupled sparse: inducing covariance");
    Kmm_ = cholesky_jittered(gram(q_.kernel, q_.Z));
    inducing_factor_ = sampling_factor(q_.cov_u);
}

DecoupledPath DecoupledSparseSampler::path(const FourierBasis& basis, const WeightVector& w, const Vector& u) const {
    require_dims(q_.size(), u.size(), "decoupled sparse: inducing values");
    require_dims(basis.size(), w.values.size(), "decoupled sparse: weights");
    Vector v = Kmm_.solve(u - features(basis, q_.Z) * w.values);
    return DecoupledPath(basis, w, q_.Z, std::move(v), q_.kernel);
}

DecoupledPath DecoupledSparseSampler::draw(const FourierBasis& basis, Rng& rng) const {
    WeightVector w = draw_prior_function(basis, rng);
    const Vector u = q_.mean_u + inducing_factor_ * standard_normal(q_.size(), rng);
    return path(basis, w, u);
}

Matrix DecoupledSparseSampler::draw_values(const FourierBasis& basis, const PointSet& Xs, Eigen::Index count,
                                           Rng& rng) const {
    // values = (Phi* - H Phi_z) W + H U with H = K*m Kmm^{-1}
    const Matrix H = Kmm_.solve(gram(q_.kernel, q_.Z, Xs)).transpose();
    const Matrix G = features(basis, Xs) - H * features(basis, q_.Z);
    const Eigen::Index m = q_.size();
    return chunked_draws(count, Xs.rows(), rng, [&](Eigen::Index size, Rng& r) -> Matrix {
        const Matrix W = standard_normal(basis.size(), size, r);
        Matrix U = inducing_factor_ * standard_normal(m, size, r);
        U.colwise() += q_.mean_u;
        const Matrix out = G * W + H * U;
        return out.transpose();
    });
}

Matrix DecoupledSparseSampler::draw_values(const PointSet& Xs, Eigen::Index count, Eigen::Index basis_size,
                                           BasisPolicy policy, Rng& rng) const {
    if (policy == BasisPolicy::shared) return draw_values(build_basis(q_.kernel, basis_size, rng), Xs, count, rng);
    const Matrix H = Kmm_.solve(gram(q_.kernel, q_.Z, Xs)).transpose();
    const Eigen::Index m = q_.size();
    return chunked_draws(count, Xs.rows(), rng, [&](Eigen::Index size, Rng& r) -> Matrix {
        Matrix out(size, Xs.rows());
        for (Eigen::Index s = 0; s < size; ++s) {
            const FourierBasis basis = build_basis(q_.kernel, basis_size, r);
            const Vector w = standard_normal(basis_size, r);
            const Vector u = q_.mean_u + inducing_factor_ * standard_normal(m, r);
            out.row(s) = (features(basis, Xs) * w + H * (u - features(basis, q_.Z) * w)).transpose();
        }
        return out;
    });
}

DecoupledExactSampler::DecoupledExactSampler(Kernel k, Dataset data) : k_(std::move(k)), data_(std::move(data)) {
    data_.validate();
    if (data_.size() > 0) {
        Matrix K = gram(k_, data_.X);
        K.diagonal().array() += data_.noise_variance;
        factor_ = cholesky_jittered(K);
    }
}

DecoupledPath DecoupledExactSampler::path(const FourierBasis& basis, const WeightVector& w, const Vector& eps) const {
    require_dims(data_.size(), eps.size(), "decoupled exact: noise");
    if (data_.size() == 0) return DecoupledPath(basis, w, PointSet(0, k_.dim()), Vector(0), k_);
    Vector v = factor_->solve(data_.y - features(basis, data_.X) * w.values - eps);
    return DecoupledPath(basis, w, data_.X, std::move(v), k_);
}

DecoupledPath DecoupledExactSampler::draw(const FourierBasis& basis, Rng& rng) const {
    WeightVector w = draw_prior_function(basis, rng);
    const Vector eps = std::sqrt(data_.noise_variance) * standard_normal(data_.size(), rng);
    return path(basis, w, eps);
}

Matrix DecoupledExactSampler::draw_values(const FourierBasis& basis, const PointSet& Xs, Eigen::Index count,
                                          Rng& rng) const {
    const Eigen::Index n = data_.size();
    const double noise_sd = std::sqrt(data_.noise_variance);
    const Matrix Phis = features(basis, Xs);
    if (n == 0) {
        return chunked_draws(count, Xs.rows(), rng, [&](Eigen::Index size, Rng& r) -> Matrix {
            return (Phis * standard_normal(basis.size(), size, r)).transpose();
        });
    }
    const Matrix H = factor_->solve(gram(k_, data_.X, Xs)).transpose();
    const Matrix G = Phis - H * features(basis, data_.X);
    const Vector Hy = H * data_.y;
    return chunked_draws(count, Xs.rows(), rng, [&](Eigen::Index size, Rng& r) -> Matrix {
        const Matrix W = standard_normal(basis.size(), size, r);
        const Matrix E = standard_normal(n, size, r);
        Matrix out = G * W - noise_sd * (H * E);
        out.colwise() += Hy;
        return out.transpose();
    });
}

Matrix DecoupledExactSampler::draw_values(const PointSet& Xs, Eigen::Index count, Eigen::Index basis_size,
                                          BasisPolicy policy, Rng& rng) const {
    if (policy == BasisPolicy::shared) return draw_values(build_basis(k_, basis_size, rng), Xs, count, rng);
    const Eigen::Index n = data_.size();
    const double noise_sd = std::sqrt(data_.noise_variance);
    const Matrix H = n > 0 ? Matrix(factor_->solve(gram(k_, data_.X, Xs)).transpose()) : Matrix(Xs.rows(), 0);
    return chunked_draws(count, Xs.rows(), rng, [&](Eigen::Index size, Rng& r) -> Matrix {
        Matrix out(size, Xs.rows());
        for (Eigen::Index s = 0; s < size; ++s) {
            const FourierBasis basis = build_basis(k_, basis_size, r);
            const Vector w = standard_normal(basis_size, r);
            Vector value = features(basis, Xs) * w;
            if (n > 0) {
                const Vector eps = noise_sd * standard_normal(n, r);
                value += H * (data_.y - features(basis, data_.X) * w - eps);
            }
            out.row(s) = value.transpose();
        }
        return out;
    });
}

DecoupledPath decoupled_sample_sparse(const InducingModel& q, const FourierBasis& basis, Rng& rng) {
    return DecoupledSparseSampler(q).draw(basis, rng);
}

DecoupledPath decoupled_sample_exact(const Kernel& k, const Dataset& data, const FourierBasis& basis, Rng& rng) {
    return DecoupledExactSampler(k, data).draw(basis, rng);
}

DecoupledPath weight_space_path(const Kernel& k, const FourierBasis& basis, const Dataset& data, Rng& rng) {
    // The pathwise update solves an n x n system; with more data than
    // features the l x l location-scale draw is cheaper.
    Vector w = data.size() > basis.size()
                   ? Vector(location_scale_sample(weight_posterior(basis, data), 1, rng).row(0).transpose())
                   : Vector(pathwise_sample_weights(basis, data, 1, rng).row(0).transpose());
    return DecoupledPath(basis, WeightVector{std::move(w)}, PointSet(0, k.dim()), Vector(0), k);
}

}  // namespace gp
