#include "gp_pathwise/models.hpp"

#include <cmath>
#include <numbers>

namespace gp {

void Dataset::validate() const {
    if (X.rows() != y.size()) throw DimensionError("dataset: row count of X does not match length of y");
    if (noise_variance < 0.0) throw std::invalid_argument("dataset: negative noise variance");
}

namespace {

Matrix noisy_gram(const Kernel& k, const Dataset& data) {
    Matrix K = gram(k, data.X);
    K.diagonal().array() += data.noise_variance;
    return K;
}

Matrix symmetrized(const Matrix& A) { return 0.5 * (A + A.transpose()); }

}  // namespace

ExactPosterior::ExactPosterior(Kernel kernel, Dataset data) : kernel_(std::move(kernel)), data_(std::move(data)) {
    data_.validate();
    if (data_.size() > 0) {
        require_dims(kernel_.dim(), data_.X.cols(), "exact posterior: training inputs");
        factor_ = cholesky_jittered(noisy_gram(kernel_, data_));
        alpha_ = factor_.solve(data_.y);
    }
}

Vector ExactPosterior::mean(const PointSet& Xs) const {
    if (data_.size() == 0) return Vector::Zero(Xs.rows());
    return gram(kernel_, Xs, data_.X) * alpha_;
}

Vector ExactPosterior::variance(const PointSet& Xs) const {
    Vector var = Vector::Constant(Xs.rows(), kernel_.amplitude());
    if (data_.size() == 0) return var;
    const Matrix A = factor_.solve_lower(gram(kernel_, data_.X, Xs));
    var -= A.colwise().squaredNorm().transpose();
    return var;
}

GaussianMoments ExactPosterior::moments(const PointSet& Xs) const {
    GaussianMoments out;
    Matrix K = gram(kernel_, Xs);
    if (data_.size() == 0) return {Vector::Zero(Xs.rows()), std::move(K)};
    const Matrix Kxs = gram(kernel_, data_.X, Xs);
    out.mean = Kxs.transpose() * alpha_;
    const Matrix A = factor_.solve_lower(Kxs);
    K.noalias() -= A.transpose() * A;
    out.cov = symmetrized(K);
    return out;
}

GaussianMoments exact_posterior(const Kernel& k, const Dataset& data, const PointSet& Xs) {
    return ExactPosterior(k, data).moments(Xs);
}

SparsePosterior::SparsePosterior(InducingModel q) : q_(std::move(q)) {
    require_dims(q_.size(), q_.mean_u.size(), "sparse posterior: inducing mean");
    require_dims(q_.size(), q_.cov_u.rows(), "sparse posterior: inducing covariance");
    if (q_.size() == 0) return;
    const Matrix Kmm = gram(q_.kernel, q_.Z);
    Kmm_ = cholesky_jittered(Kmm);
    alpha_ = Kmm_.solve(q_.mean_u);
    // With A = L^{-1} K_m*:  cov = K** + A^T L^{-1} (Sigma_u - K_mm) L^{-T} A
    const Matrix left = Kmm_.solve_lower(q_.cov_u - Kmm);
    S_ = symmetrized(Kmm_.solve_lower(Matrix(left.transpose())));
}

Vector SparsePosterior::mean(const PointSet& Xs) const {
    if (q_.size() == 0) return Vector::Zero(Xs.rows());
    return gram(q_.kernel, Xs, q_.Z) * alpha_;
}

Vector SparsePosterior::variance(const PointSet& Xs) const {
    Vector var = Vector::Constant(Xs.rows(), q_.kernel.amplitude());
    if (q_.size() == 0) return var;
    const Matrix A = Kmm_.solve_lower(gram(q_.kernel, q_.Z, Xs));
    var += (A.array() * (S_ * A).array()).colwise().sum().transpose().matrix();
    return var;
}

GaussianMoments SparsePosterior::moments(const PointSet& Xs) const {
    Matrix K = gram(q_.kernel, Xs);
    if (q_.size() == 0) return {Vector::Zero(Xs.rows()), std::move(K)};
    const Matrix Kms = gram(q_.kernel, q_.Z, Xs);
    const Matrix A = Kmm_.solve_lower(Kms);
    K.noalias() += A.transpose() * S_ * A;
    return {Kms.transpose() * alpha_, symmetrized(K)};
}

GaussianMoments sparse_posterior(const InducingModel& q, const PointSet& Xs) { return SparsePosterior(q).moments(Xs); }

InducingModel optimal_inducing(const Kernel& k, const Dataset& data, const PointSet& Z) {
    data.validate();
    if (data.size() < 1) throw std::invalid_argument("optimal_inducing: needs at least one observation");
    if (!(data.noise_variance > 0.0)) throw std::invalid_argument("optimal_inducing: noise variance must be positive");
    // With K_mm = L L^T and B = I + s^-2 L^{-1} K_mn K_nm L^{-T}:
    //   Sigma_u = L B^{-1} L^T,  mu_u = s^-2 L B^{-1} L^{-1} K_mn y.
    const GramCholesky Lm = cholesky_jittered(gram(k, Z));
    const Matrix P = Lm.solve_lower(gram(k, Z, data.X));  // L^{-1} K_mn
    const double inv_noise = 1.0 / data.noise_variance;
    Matrix Bmat = inv_noise * P * P.transpose();
    Bmat.diagonal().array() += 1.0;
    const GramCholesky LB = cholesky_jittered(symmetrized(Bmat));
    const auto L = Lm.matrix.triangularView<Eigen::Lower>();

    InducingModel q{Z, Vector(), Matrix(), k};
    q.mean_u = L * LB.solve(inv_noise * (P * data.y));
    const Matrix C = LB.solve_lower(Lm.matrix.transpose());  // LB^{-1} L^T
    q.cov_u = symmetrized(C.transpose() * C);
    return q;
}

GaussianMoments weight_posterior(const FourierBasis& basis, const Dataset& data, WoodburyBranch branch) {
    data.validate();
    const Eigen::Index l = basis.size();
    const Eigen::Index n = data.size();
    if (n == 0) return {Vector::Zero(l), Matrix::Identity(l, l)};
    if (!(data.noise_variance > 0.0)) throw std::invalid_argument("weight_posterior: noise variance must be positive");
    const Matrix Phi = features(basis, data.X);
    const double s2 = data.noise_variance;
    if (branch == WoodburyBranch::automatic)
        branch = l > n ? WoodburyBranch::data_space : WoodburyBranch::weight_space;

    GaussianMoments out;
    if (branch == WoodburyBranch::weight_space) {
        Matrix A = Phi.transpose() * Phi;
        A.diagonal().array() += s2;
        const GramCholesky LA = cholesky_jittered(A);
        out.mean = LA.solve(Phi.transpose() * data.y);
        const Matrix Linv = LA.solve_lower(Matrix::Identity(l, l));
        out.cov = symmetrized(s2 * Linv.transpose() * Linv);
    } else {
        // (Phi^T Phi + s^2 I)^{-1} = s^-2 (I - Phi^T (Phi Phi^T + s^2 I)^{-1} Phi)
        Matrix G = Phi * Phi.transpose();
        G.diagonal().array() += s2;
        const GramCholesky LG = cholesky_jittered(G);
        out.mean = Phi.transpose() * LG.solve(data.y);
        const Matrix A = LG.solve_lower(Phi);
        Matrix cov = -(A.transpose() * A);
        cov.diagonal().array() += 1.0;
        out.cov = symmetrized(cov);
    }
    return out;
}

Matrix location_scale_transform(const GaussianMoments& g, const Matrix& zeta) {
    require_dims(g.dim(), zeta.rows(), "location_scale_transform: normal draws");
    const GramCholesky L = cholesky_jittered(g.cov);
    Matrix out = (L.matrix.triangularView<Eigen::Lower>() * zeta).transpose();
    out.rowwise() += g.mean.transpose();
    return out;
}

Matrix location_scale_sample(const GaussianMoments& g, Eigen::Index count, Rng& rng) {
    return location_scale_transform(g, standard_normal(g.dim(), count, rng));
}

double log_marginal_likelihood(const Kernel& k, const Dataset& data) {
    data.validate();
    const Eigen::Index n = data.size();
    if (n == 0) return 0.0;
    const GramCholesky L = cholesky_jittered(noisy_gram(k, data));
    const Vector a = L.solve_lower(data.y);
    return -0.5 * a.squaredNorm() - L.matrix.diagonal().array().log().sum() -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

}  // namespace gp
