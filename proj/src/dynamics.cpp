#include "gp_pathwise/dynamics.hpp"

#include "gp_pathwise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace gp {

Vector fhn_drift(const Vector& state, double current, const FhnParameters& p) {
    require_dims(2, state.size(), "fhn_drift state");
    const double v = state(0), w = state(1);
    Vector out(2);
    out(0) = v - v * v * v / 3.0 - w + current;
    out(1) = (v + p.a - p.b * w) / p.c;
    return out;
}

Vector fhn_equilibrium(double current, const FhnParameters& p) {
    // On the w-nullcline w = (v + a) / b the v-drift is strictly decreasing
    // in v when b < 1, so the root is unique; Newton is kept inside a bracket.
    auto g = [&](double v) { return v - v * v * v / 3.0 - (v + p.a) / p.b + current; };
    auto dg = [&](double v) { return 1.0 - v * v - 1.0 / p.b; };
    double lo = -3.0 - std::abs(current), hi = 3.0 + std::abs(current);
    while (g(lo) < 0.0) lo *= 2.0;
    while (g(hi) > 0.0) hi *= 2.0;
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double gv = g(v);
        if (gv == 0.0) break;
        (gv > 0.0 ? lo : hi) = v;
        double next = v - gv / dg(v);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - v) <= 1e-15 * std::max(1.0, std::abs(v))) {
            v = next;
            break;
        }
        v = next;
    }
    Vector out(2);
    out << v, (v + p.a) / p.b;
    return out;
}

double sinusoidal_control(Eigen::Index step, Eigen::Index horizon) {
    const double period = static_cast<double>(horizon) / 2.0;
    return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * static_cast<double>(step) / period);
}

SdeConfig SdeConfig::standard(Eigen::Index horizon) {
    SdeConfig cfg;
    cfg.horizon = horizon;
    cfg.control = [horizon](Eigen::Index step) { return sinusoidal_control(step, horizon); };
    return cfg;
}

void SdeConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("sde: dt must be positive");
    require_dims(2, diffusion.size(), "sde diffusion");
    if ((diffusion.array() < 0.0).any()) throw std::invalid_argument("sde: diffusion must be nonnegative");
    if (horizon < 1) throw std::invalid_argument("sde: horizon must be at least 1");
}

Vector euler_step(const Vector& state, const Vector& drift, const SdeConfig& cfg, Rng& rng) {
    require_dims(state.size(), drift.size(), "euler_step drift");
    require_dims(state.size(), cfg.diffusion.size(), "euler_step diffusion");
    const Vector noise = standard_normal(state.size(), rng);
    return state + cfg.dt * drift + ((cfg.dt * cfg.diffusion).array().sqrt() * noise.array()).matrix();
}

// ---------------------------------------------------------------------------

Trajectories::Trajectories(Eigen::Index count, Eigen::Index horizon)
    : count_(count), horizon_(horizon),
      values_(static_cast<std::size_t>(count * (horizon + 1) * 2), 0.0) {
    if (count < 0 || horizon < 0) throw std::invalid_argument("trajectories: negative size");
}

Eigen::Vector2d Trajectories::state(Eigen::Index member, Eigen::Index step) const {
    const auto at = static_cast<std::size_t>((member * (horizon_ + 1) + step) * 2);
    return {values_[at], values_[at + 1]};
}

void Trajectories::set_state(Eigen::Index member, Eigen::Index step, const Eigen::Vector2d& s) {
    const auto at = static_cast<std::size_t>((member * (horizon_ + 1) + step) * 2);
    values_[at] = s(0);
    values_[at + 1] = s(1);
}

PointSet Trajectories::states_at(Eigen::Index step) const {
    PointSet out(count_, 2);
    for (Eigen::Index i = 0; i < count_; ++i) out.row(i) = state(i, step).transpose();
    return out;
}

namespace {

/// Runs one trajectory per member on its own stream of a base seed drawn
/// from rng, so results do not depend on the worker count.
template <class Member>
Trajectories rollout_members(Eigen::Index count, const SdeConfig& cfg, Rng& rng, Member&& member) {
    cfg.validate();
    Trajectories out(count, cfg.horizon);
    const std::uint64_t base = rng();
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        Rng stream = make_stream(base, i);
        member(static_cast<Eigen::Index>(i), stream, out);
    });
    return out;
}

std::vector<Eigen::Index> random_subset(Eigen::Index n, Eigen::Index count, Rng& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < count; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

}  // namespace

Trajectories simulate_truth(const Vector& s0, const SdeConfig& cfg, Eigen::Index count, Rng& rng,
                            const FhnParameters& p) {
    require_dims(2, s0.size(), "simulate_truth s0");
    return rollout_members(count, cfg, rng, [&](Eigen::Index i, Rng& stream, Trajectories& out) {
        Vector s = s0;
        out.set_state(i, 0, s);
        for (Eigen::Index t = 0; t < cfg.horizon; ++t) {
            s = euler_step(s, fhn_drift(s, cfg.control_at(t), p), cfg, stream);
            out.set_state(i, t + 1, s);
        }
    });
}

// ---------------------------------------------------------------------------

StateBox StateBox::from_ensemble(const Trajectories& pilot, double padding) {
    if (pilot.count() == 0) throw std::invalid_argument("state box: empty ensemble");
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (Eigen::Index i = 0; i < pilot.count(); ++i)
        for (Eigen::Index t = 0; t <= pilot.horizon(); ++t) {
            const Eigen::Vector2d s = pilot.state(i, t);
            lo = lo.cwiseMin(s);
            hi = hi.cwiseMax(s);
        }
    const Eigen::Vector2d extent = (hi - lo).cwiseMax(1e-6);
    return {lo - padding * extent, hi + padding * extent};
}

Vector StateBox::to_unit(const Vector& state, double control) const {
    require_dims(2, state.size(), "state box state");
    Vector x(3);
    x.head<2>() = (state - lower).cwiseQuotient(upper - lower);
    x(2) = control;
    return x;
}

Eigen::Vector2d StateBox::from_unit(const Eigen::Vector2d& unit) const {
    return lower + unit.cwiseProduct(upper - lower);
}

Vector sample_transition(const StateBox& box, const SdeConfig& cfg, const Vector& x, Rng& rng,
                         const FhnParameters& p) {
    require_dims(3, x.size(), "sample_transition input");
    const Vector s = box.from_unit(x.head<2>());
    return euler_step(s, fhn_drift(s, x(2), p), cfg, rng) - s;
}

std::array<Dataset, 2> generate_training_data(const StateBox& box, const SdeConfig& cfg, Eigen::Index n, Rng& rng,
                                              const FhnParameters& p) {
    cfg.validate();
    const PointSet X = uniform_points(n, 3, rng);
    std::array<Dataset, 2> out;
    for (int c = 0; c < 2; ++c) {
        out[c].X = X;
        out[c].y.resize(n);
        out[c].noise_variance = cfg.dt * cfg.diffusion(c);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector delta = sample_transition(box, cfg, X.row(i).transpose(), rng, p);
        for (int c = 0; c < 2; ++c) out[c].y(i) = delta(c);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

using Score = std::function<double(const Kernel&, double noise_variance)>;

/// Isotropic search, then coordinate sweeps moving one lengthscale at a time
/// (re-choosing the noise fraction with each candidate).
Hyperparameters coordinate_grid_search(Eigen::Index dim, double second_moment, const HyperparameterGrid& grid,
                                       const Score& score) {
    if (grid.lengthscales.empty() || grid.noise_fractions.empty())
        throw std::invalid_argument("grid_search: empty grid");
    for (const double f : grid.noise_fractions)
        if (!(f > 0.0 && f < 1.0)) throw std::invalid_argument("grid_search: noise fractions must lie in (0, 1)");
    second_moment = std::max(second_moment, 1e-12);

    auto best_of = [&](const std::vector<Vector>& shapes) {
        const std::size_t cols = grid.noise_fractions.size();
        std::vector<Hyperparameters> results(shapes.size() * cols);
        parallel_for(results.size(), [&](std::size_t j) {
            const double fraction = grid.noise_fractions[j % cols];
            Hyperparameters& h = results[j];
            h.lengthscales = shapes[j / cols];
            h.amplitude = (1.0 - fraction) * second_moment;
            h.noise_variance = fraction * second_moment;
            h.log_marginal_likelihood = score(Kernel(h.amplitude, h.lengthscales), h.noise_variance);
        });
        return *std::max_element(results.begin(), results.end(), [](const auto& a, const auto& b) {
            return a.log_marginal_likelihood < b.log_marginal_likelihood;
        });
    };

    std::vector<Vector> shapes;
    for (const double l : grid.lengthscales) shapes.push_back(Vector::Constant(dim, l));
    Hyperparameters best = best_of(shapes);
    for (int sweep = 0; sweep < grid.sweeps; ++sweep) {
        bool improved = false;
        for (Eigen::Index k = 0; k < dim; ++k) {
            shapes.clear();
            for (const double l : grid.lengthscales) {
                shapes.push_back(best.lengthscales);
                shapes.back()(k) = l;
            }
            const Hyperparameters candidate = best_of(shapes);
            if (candidate.log_marginal_likelihood > best.log_marginal_likelihood) {
                best = candidate;
                improved = true;
            }
        }
        if (!improved) break;
    }
    return best;
}

double second_moment(const Vector& y) { return y.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(y.size(), 1)); }

}  // namespace

Hyperparameters grid_search(const Dataset& data, const HyperparameterGrid& grid, Rng& rng) {
    data.validate();
    const Eigen::Index n = std::min(data.size(), grid.subsample);
    if (n == 0) throw std::invalid_argument("grid_search: no data");
    const auto idx = random_subset(data.size(), n, rng);
    Dataset sub;
    sub.X.resize(n, data.X.cols());
    sub.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sub.X.row(i) = data.X.row(idx[static_cast<std::size_t>(i)]);
        sub.y(i) = data.y(idx[static_cast<std::size_t>(i)]);
    }
    return coordinate_grid_search(data.X.cols(), second_moment(sub.y), grid, [&](const Kernel& k, double noise) {
        Dataset d = sub;
        d.noise_variance = noise;
        return log_marginal_likelihood(k, d);
    });
}

double collapsed_bound(const Kernel& k, const Dataset& data, const PointSet& Z) {
    data.validate();
    require_dims(data.X.cols(), Z.cols(), "collapsed_bound inducing points");
    if (!(data.noise_variance > 0.0)) throw std::invalid_argument("collapsed_bound: noise variance must be positive");
    const auto n = static_cast<double>(data.size());
    const double s2 = data.noise_variance;
    const GramCholesky L = cholesky_jittered(gram(k, Z));
    const Matrix A = L.solve_lower(gram(k, Z, data.X)) / std::sqrt(s2);
    Matrix B = A * A.transpose();
    B.diagonal().array() += 1.0;
    const Eigen::LLT<Matrix> LB(B);
    if (LB.info() != Eigen::Success) throw NumericalError("collapsed_bound: factorization failed");
    const Vector c = LB.matrixL().solve(A * data.y) / std::sqrt(s2);
    const Matrix LBm = LB.matrixL();
    const double trace_knn = n * k.amplitude();
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - LBm.diagonal().array().log().sum() -
           0.5 * n * std::log(s2) - 0.5 * data.y.squaredNorm() / s2 + 0.5 * c.squaredNorm() -
           0.5 * trace_knn / s2 + 0.5 * A.squaredNorm();
}

Hyperparameters grid_search_sparse(const Dataset& data, const PointSet& Z, const HyperparameterGrid& grid) {
    data.validate();
    if (data.size() == 0) throw std::invalid_argument("grid_search_sparse: no data");
    return coordinate_grid_search(data.X.cols(), second_moment(data.y), grid, [&](const Kernel& k, double noise) {
        Dataset d{data.X, data.y, noise};
        return collapsed_bound(k, d, Z);
    });
}

PointSet kmeans_centers(const PointSet& X, Eigen::Index m, Rng& rng, int iterations) {
    const Eigen::Index n = X.rows();
    if (m < 1 || m > n) throw std::invalid_argument("kmeans_centers: need 1 <= m <= rows");
    PointSet C(m, X.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    C.row(0) = X.row(first(rng));
    Vector nearest = (X.rowwise() - C.row(0)).rowwise().squaredNorm();
    for (Eigen::Index j = 1; j < m; ++j) {
        // k-means++: the next seed is drawn proportionally to squared distance.
        std::uniform_real_distribution<double> u(0.0, nearest.sum());
        double target = u(rng);
        Eigen::Index pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            target -= nearest(i);
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        C.row(j) = X.row(pick);
        nearest = nearest.cwiseMin((X.rowwise() - C.row(j)).rowwise().squaredNorm());
    }
    std::vector<Eigen::Index> label(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < iterations; ++it) {
        bool moved = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index j;
            (C.rowwise() - X.row(i)).rowwise().squaredNorm().minCoeff(&j);
            if (label[static_cast<std::size_t>(i)] != j) {
                label[static_cast<std::size_t>(i)] = j;
                moved = true;
            }
        }
        if (!moved) break;
        PointSet sum = PointSet::Zero(m, X.cols());
        Vector count = Vector::Zero(m);
        for (Eigen::Index i = 0; i < n; ++i) {
            sum.row(label[static_cast<std::size_t>(i)]) += X.row(i);
            count(label[static_cast<std::size_t>(i)]) += 1.0;
        }
        for (Eigen::Index j = 0; j < m; ++j)
            if (count(j) > 0.0) C.row(j) = sum.row(j) / count(j);
    }
    return C;
}

DynamicsModel train_dynamics_model(const std::array<Dataset, 2>& transitions, const StateBox& box,
                                   const SdeConfig& cfg, Eigen::Index m, Rng& rng, const HyperparameterGrid& grid) {
    cfg.validate();
    for (const Dataset& raw : transitions) {
        raw.validate();
        require_dims(3, raw.X.cols(), "dynamics training inputs");
    }
    if (transitions[0].X != transitions[1].X)
        throw std::invalid_argument("train_dynamics_model: coordinates must share training inputs");
    if (m < 1 || m > transitions[0].size()) throw std::invalid_argument("train_dynamics_model: bad inducing count");
    const PointSet Z = kmeans_centers(transitions[0].X, m, rng);
    std::array<Hyperparameters, 2> hyper;
    std::vector<InducingModel> drift;
    for (int c = 0; c < 2; ++c) {
        Dataset scaled{transitions[c].X, transitions[c].y / cfg.dt, 0.0};
        hyper[c] = grid_search_sparse(scaled, Z, grid);
        scaled.noise_variance = hyper[c].noise_variance;
        drift.push_back(optimal_inducing(Kernel(hyper[c].amplitude, hyper[c].lengthscales), scaled, Z));
    }
    return DynamicsModel{box, {std::move(drift[0]), std::move(drift[1])}, hyper};
}

// ---------------------------------------------------------------------------

Trajectories rollout_decoupled(const DynamicsModel& model, const Vector& s0, const SdeConfig& cfg,
                               Eigen::Index count, Eigen::Index basis_size, Rng& rng) {
    require_dims(2, s0.size(), "rollout s0");
    if (basis_size < 1) throw std::invalid_argument("rollout_decoupled: basis_size must be positive");
    const std::array<DecoupledSparseSampler, 2> samplers{DecoupledSparseSampler(model.drift[0]),
                                                         DecoupledSparseSampler(model.drift[1])};
    return rollout_members(count, cfg, rng, [&](Eigen::Index i, Rng& stream, Trajectories& out) {
        std::vector<DecoupledPath> paths;
        for (int c = 0; c < 2; ++c)
            paths.push_back(samplers[c].draw(build_basis(model.drift[c].kernel, basis_size, stream), stream));
        Vector s = s0, f(2);
        out.set_state(i, 0, s);
        for (Eigen::Index t = 0; t < cfg.horizon; ++t) {
            const Vector x = model.box.to_unit(s, cfg.control_at(t));
            for (int c = 0; c < 2; ++c) f(c) = paths[c].at(x);
            s = euler_step(s, f, cfg, stream);
            out.set_state(i, t + 1, s);
        }
    });
}

Matrix rank1_downdate(Matrix L, Vector v) {
    const Eigen::Index n = L.rows();
    if (L.cols() != n) throw DimensionError("rank1_downdate: factor must be square");
    require_dims(n, v.size(), "rank1_downdate vector");
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double a = L(k, k), x = v(k);
        if (x == 0.0) continue;
        const double r2 = (a - x) * (a + x);
        const double tol = 64.0 * eps * a * a;
        if (!(a > 0.0) || r2 < -tol) throw NumericalError("rank1_downdate: result is not positive semidefinite");
        const Eigen::Index rest = n - k - 1;
        if (r2 <= tol) {
            // |v_k| = L_kk: the rest of v must be parallel to column k, which
            // the downdate then removes entirely.
            const double s = x / a;
            const double scale = a + L.col(k).tail(rest).norm() + v.tail(rest).norm();
            if ((L.col(k).tail(rest) - s * v.tail(rest)).norm() > 1e-8 * scale)
                throw NumericalError("rank1_downdate: result is not positive semidefinite");
            L.col(k).tail(rest + 1).setZero();
            return L;
        }
        const double r = std::sqrt(r2);
        const double c = r / a, s = x / a;
        L(k, k) = r;
        L.col(k).tail(rest) = (L.col(k).tail(rest) - s * v.tail(rest)) / c;
        v.tail(rest) = c * v.tail(rest) - s * L.col(k).tail(rest);
    }
    return L;
}

IterativeSampler::IterativeSampler(const InducingModel& q, Eigen::Index capacity)
    : kernel_(q.kernel), m_(q.size()), size_(q.size()) {
    require_dims(m_, q.mean_u.size(), "iterative sampler mean");
    if (capacity < m_) throw std::invalid_argument("iterative sampler: capacity below inducing count");
    Z_ = PointSet::Zero(capacity, q.Z.cols());
    Z_.topRows(m_) = q.Z;
    L_ = Matrix::Zero(capacity, capacity);
    L_.topLeftCorner(m_, m_) = cholesky_jittered(gram(kernel_, q.Z)).matrix;
    mu_ = Vector::Zero(capacity);
    mu_.head(m_) = q.mean_u;
    S_ = cholesky_jittered(0.5 * (q.cov_u + q.cov_u.transpose())).matrix;
}

std::pair<double, double> IterativeSampler::predictive(const Vector& x) const {
    require_dims(Z_.cols(), x.size(), "iterative sampler point");
    Vector kz(size_);
    for (Eigen::Index i = 0; i < size_; ++i) kz(i) = kernel_(Z_.row(i).transpose(), x);
    const auto L = L_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>();
    const Vector l = L.solve(kz);
    const Vector b = L.transpose().solve(l);
    const double prior_var = std::max(kernel_.amplitude() - l.squaredNorm(), 0.0);
    const Vector Sb = S_.transpose() * b.head(m_);
    return {b.dot(mu_.head(size_)), prior_var + Sb.squaredNorm()};
}

double IterativeSampler::draw(const Vector& x, Rng& rng) {
    std::normal_distribution<double> normal;
    return draw_with(x, normal(rng));
}

double IterativeSampler::draw_with(const Vector& x, double zeta) {
    require_dims(Z_.cols(), x.size(), "iterative sampler point");
    if (size_ >= Z_.rows()) throw std::length_error("iterative sampler: capacity exhausted");
    Vector kz(size_);
    for (Eigen::Index i = 0; i < size_; ++i) kz(i) = kernel_(Z_.row(i).transpose(), x);
    const auto L = L_.topLeftCorner(size_, size_).triangularView<Eigen::Lower>();
    const Vector l = L.solve(kz);
    const Vector b = L.transpose().solve(l);
    const double prior_var = std::max(kernel_.amplitude() - l.squaredNorm(), 0.0);
    const Vector Sb = S_.transpose() * b.head(m_);
    const double mean = b.dot(mu_.head(size_));
    const double var = prior_var + Sb.squaredNorm();
    const double f = mean + std::sqrt(var) * zeta;

    if (var > 0.0) {
        // Condition the inducing values on the draw: mu += Sigma b (f - m) / s^2
        // and Sigma -= (Sigma b)(Sigma b)^T / s^2.
        const Vector Sigma_b = S_ * Sb;
        mu_.head(m_) += Sigma_b * ((f - mean) / var);
        const Vector v = Sigma_b / std::sqrt(var);
        try {
            S_ = rank1_downdate(S_, v);
        } catch (const NumericalError&) {
            Matrix Sigma = S_ * S_.transpose() - v * v.transpose();
            S_ = cholesky_jittered(0.5 * (Sigma + Sigma.transpose())).matrix;
            ++refactorizations_;
        }
    }

    // Append the draw as an exactly known inducing value.
    Z_.row(size_) = x.transpose();
    mu_(size_) = f;
    L_.row(size_).head(size_) = l.transpose();
    L_(size_, size_) = std::sqrt(prior_var + kJitterLadder[1] * kernel_.amplitude());
    ++size_;
    return f;
}

Matrix IterativeSampler::augmented_covariance() const {
    Matrix out = Matrix::Zero(size_, size_);
    out.topLeftCorner(m_, m_) = S_ * S_.transpose();
    return out;
}

Trajectories rollout_iterative(const DynamicsModel& model, const Vector& s0, const SdeConfig& cfg,
                               Eigen::Index count, Rng& rng, IterativeStats* stats) {
    require_dims(2, s0.size(), "rollout s0");
    std::vector<Eigen::Index> refactorizations(static_cast<std::size_t>(count), 0);
    Trajectories out = rollout_members(count, cfg, rng, [&](Eigen::Index i, Rng& stream, Trajectories& traj) {
        std::array<IterativeSampler, 2> samplers{IterativeSampler(model.drift[0], model.drift[0].size() + cfg.horizon),
                                                 IterativeSampler(model.drift[1], model.drift[1].size() + cfg.horizon)};
        Vector s = s0, f(2);
        traj.set_state(i, 0, s);
        for (Eigen::Index t = 0; t < cfg.horizon; ++t) {
            const Vector x = model.box.to_unit(s, cfg.control_at(t));
            for (int c = 0; c < 2; ++c) f(c) = samplers[c].draw(x, stream);
            s = euler_step(s, f, cfg, stream);
            traj.set_state(i, t + 1, s);
        }
        refactorizations[static_cast<std::size_t>(i)] = samplers[0].refactorizations() + samplers[1].refactorizations();
    });
    if (stats) stats->refactorizations = std::accumulate(refactorizations.begin(), refactorizations.end(), Eigen::Index{0});
    return out;
}

DistanceSeries compare_rollouts(const Trajectories& truth, const Trajectories& candidate,
                                const TransportPlanConfig& cfg, const Trajectories* second_truth,
                                Eigen::Index stride) {
    if (stride < 1) throw std::invalid_argument("compare_rollouts: stride must be positive");
    if (truth.horizon() != candidate.horizon() || (second_truth && second_truth->horizon() != truth.horizon()))
        throw DimensionError("compare_rollouts: horizons differ");
    DistanceSeries out;
    for (Eigen::Index t = stride; t < truth.horizon(); t += stride) out.steps.push_back(t);
    out.steps.push_back(truth.horizon());
    const auto count = static_cast<Eigen::Index>(out.steps.size());
    out.distance = Vector::Zero(count);
    out.noise_floor = second_truth ? Vector::Zero(count) : Vector();
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t j) {
        const Eigen::Index t = out.steps[j];
        const PointSet P = truth.states_at(t);
        out.distance(static_cast<Eigen::Index>(j)) = sinkhorn_distance(P, candidate.states_at(t), cfg).distance;
        if (second_truth)
            out.noise_floor(static_cast<Eigen::Index>(j)) =
                sinkhorn_distance(P, second_truth->states_at(t), cfg).distance;
    });
    return out;
}

}  // namespace gp
