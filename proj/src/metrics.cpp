#include "gp_pathwise/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace gp {

namespace {

Matrix symmetric_sqrt(const Matrix& A) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()));
    const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double w2_gaussian(const GaussianMoments& g1, const GaussianMoments& g2) {
    require_dims(g1.dim(), g2.dim(), "w2_gaussian: dimension");
    require_dims(g1.dim(), g1.cov.rows(), "w2_gaussian: first covariance");
    require_dims(g2.dim(), g2.cov.rows(), "w2_gaussian: second covariance");
    if (g1.dim() == 0) return 0.0;
    const Matrix root1 = symmetric_sqrt(g1.cov);
    const Matrix cross = root1 * g2.cov * root1;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (cross + cross.transpose()), Eigen::EigenvaluesOnly);
    const double bures = g1.cov.trace() + g2.cov.trace() - 2.0 * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double sq = (g1.mean - g2.mean).squaredNorm() + bures;
    // The Bures term cancels traces of order tr(K1) + tr(K2); anything below
    // that cancellation's rounding level is indistinguishable from zero, and
    // the square root would inflate it to ~1e-7.
    const double resolution = 1e3 * std::numeric_limits<double>::epsilon() * (g1.cov.trace() + g2.cov.trace());
    return sq <= resolution ? 0.0 : std::sqrt(sq);
}

GaussianMoments empirical_moments(const Matrix& samples) {
    MomentAccumulator acc(samples.cols());
    acc.add(samples);
    return acc.moments();
}

MomentAccumulator::MomentAccumulator(Eigen::Index dim)
    : shift_(Vector::Zero(dim)), sum_(Vector::Zero(dim)), outer_(Matrix::Zero(dim, dim)) {}

void MomentAccumulator::add(const Matrix& samples) {
    require_dims(sum_.size(), samples.cols(), "moment accumulator: sample width");
    if (samples.rows() == 0) return;
    if (count_ == 0) shift_ = samples.row(0).transpose();
    const Matrix centered = samples.rowwise() - shift_.transpose();
    sum_ += centered.colwise().sum().transpose();
    outer_.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    count_ += samples.rows();
}

GaussianMoments MomentAccumulator::moments() const {
    if (count_ < 2) throw std::invalid_argument("empirical moments need at least two samples");
    const double s = static_cast<double>(count_);
    const Vector centered_mean = sum_ / s;
    Matrix cov = outer_.selfadjointView<Eigen::Lower>();
    cov = (cov - s * centered_mean * centered_mean.transpose()) / (s - 1.0);
    return {shift_ + centered_mean, 0.5 * (cov + cov.transpose())};
}

double w2_empirical_vs_gaussian(const Matrix& samples, const GaussianMoments& g) {
    if (samples.rows() < 2) throw std::invalid_argument("w2_empirical_vs_gaussian: needs at least two samples");
    return w2_gaussian(empirical_moments(samples), g);
}

void TransportPlanConfig::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("sinkhorn: max_iters must be at least 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("sinkhorn: tolerance must be positive");
}

SinkhornResult sinkhorn_distance(const PointSet& P, const PointSet& Q, const TransportPlanConfig& cfg) {
    cfg.validate();
    if (P.rows() == 0 || Q.rows() == 0) throw std::invalid_argument("sinkhorn: empty point cloud");
    require_dims(P.cols(), Q.cols(), "sinkhorn: point dimension");
    const Eigen::Index n = P.rows();
    const Eigen::Index m = Q.rows();

    // Cost stored both ways so each half-step scans contiguous memory.
    Matrix cost(m, n);  // cost(j, i) = |p_i - q_j|^2
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) cost(j, i) = (P.row(i) - Q.row(j)).squaredNorm();
    const Matrix cost_t = cost.transpose();
    const double log_a = -std::log(static_cast<double>(n));
    const double log_b = -std::log(static_cast<double>(m));

    Vector f = Vector::Zero(n);
    Vector g = Vector::Zero(m);
    Eigen::ArrayXd work(std::max(n, m));

    // f_i = eps log a - eps LSE_j((g_j - C_ij) / eps), and symmetrically for g.
    auto update_f = [&](double eps) {
        for (Eigen::Index i = 0; i < n; ++i) {
            auto w = work.head(m);
            w = (g.array() - cost.col(i).array()) / eps;
            const double top = w.maxCoeff();
            f(i) = eps * log_a - eps * (top + std::log((w - top).exp().sum()));
        }
    };
    auto update_g = [&](double eps) {
        for (Eigen::Index j = 0; j < m; ++j) {
            auto w = work.head(n);
            w = (f.array() - cost_t.col(j).array()) / eps;
            const double top = w.maxCoeff();
            g(j) = eps * log_b - eps * (top + std::log((w - top).exp().sum()));
        }
    };
    // After a g update the column marginals are exact; measure the rows.
    auto row_violation = [&](double eps) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mass = ((g.array() + f(i) - cost.col(i).array()) / eps).exp().sum();
            total += std::abs(mass - 1.0 / static_cast<double>(n));
        }
        return total;
    };

    // Epsilon scaling warm-starts the potentials from a coarse problem.
    const double max_cost = std::max(cost.maxCoeff(), cfg.epsilon);
    SinkhornResult result;
    for (double eps = max_cost; eps > cfg.epsilon; eps *= 0.5) {
        for (int it = 0; it < 10; ++it) {
            update_f(eps);
            update_g(eps);
        }
    }
    const double eps = cfg.epsilon;
    for (int it = 0; it < cfg.max_iters; ++it) {
        update_f(eps);
        update_g(eps);
        result.iterations = it + 1;
        if (it % 10 == 9 || it + 1 == cfg.max_iters) {
            result.violation = row_violation(eps);
            if (result.violation < cfg.tolerance) {
                result.converged = true;
                break;
            }
        }
    }
    double transport = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::ArrayXd plan = ((g.array() + f(i) - cost.col(i).array()) / eps).exp();
        transport += (plan * cost.col(i).array()).sum();
    }
    result.distance = std::sqrt(std::max(transport, 0.0));
    return result;
}

double inf_to_one_norm(const Matrix& A) {
    const Eigen::Index m = A.cols();
    if (m > 20) throw std::invalid_argument("inf_to_one_norm: more than 20 columns; enumeration refused");
    if (m == 0) return 0.0;
    // s and -s give the same norm, so fix the sign of the last coordinate.
    // Walk the remaining signs in Gray-code order: one column flips per step.
    Vector s = Vector::Ones(m);
    Vector As = A * s;
    double best = As.lpNorm<1>();
    const std::uint64_t total = std::uint64_t{1} << (m - 1);
    for (std::uint64_t step = 1; step < total; ++step) {
        const auto bit = static_cast<Eigen::Index>(std::countr_zero(step));
        s(bit) = -s(bit);
        As += 2.0 * s(bit) * A.col(bit);
        best = std::max(best, As.lpNorm<1>());
    }
    return best;
}

BoundConstants bound_constants(const Kernel& k, const PointSet& Z, double domain_diameter, int dim) {
    if (Z.rows() > 20) throw std::invalid_argument("bound_constants: m > 20; exhaustive norm refused");
    if (Z.rows() == 0) throw std::invalid_argument("bound_constants: empty inducing set");
    const GramCholesky L = cholesky_jittered(gram(k, Z));
    const Matrix inverse = L.solve(Matrix::Identity(Z.rows(), Z.rows()));
    BoundConstants out;
    out.inverse_gram_norm = inf_to_one_norm(inverse);
    // sup |k| over X^2 is the amplitude for a stationary kernel.
    const double kernel_sup = k.amplitude();
    const double product = kernel_sup * out.inverse_gram_norm;
    out.c1 = std::sqrt(2.0 * std::pow(domain_diameter, dim) * (1.0 + product * product));
    out.c3 = static_cast<double>(Z.rows()) * (1.0 + product) * (1.0 + product);
    return out;
}

double rff_kernel_error(const Kernel& k, const FourierBasis& basis, const PointSet& probes) {
    if (probes.rows() == 0) throw std::invalid_argument("rff_kernel_error: empty probe set");
    const Matrix Phi = features(basis, probes);
    return (Phi * Phi.transpose() - gram(k, probes)).cwiseAbs().maxCoeff();
}

}  // namespace gp
