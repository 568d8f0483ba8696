#pragma once

#include "gp_pathwise/metrics.hpp"
#include "gp_pathwise/pathwise.hpp"

#include <array>
#include <functional>
#include <vector>

namespace gp {

// ---------------------------------------------------------------------------
// Ground truth: a FitzHugh-Nagumo neuron driven by an injected current I,
//
//   dv = v - v^3 / 3 - w + I,   dw = (v + a - b w) / c.

struct FhnParameters {
    double a = 0.7;
    double b = 0.8;
    double c = 12.5;
};

Vector fhn_drift(const Vector& state, double current, const FhnParameters& p = {});

/// Fixed point of the drift at a constant current, by Newton's method on v.
Vector fhn_equilibrium(double current, const FhnParameters& p = {});

/// 0.5 + 0.5 sin(2 pi t / T) with T = horizon / 2 steps.
double sinusoidal_control(Eigen::Index step, Eigen::Index horizon);

struct SdeConfig {
    double dt = 0.25;
    Vector diffusion = Vector::Constant(2, 0.01);  // diagonal of Sigma
    Eigen::Index horizon = 200;
    std::function<double(Eigen::Index)> control;   // step -> current

    /// dt = 0.25, Sigma = 0.01 I and the sinusoidal drive over `horizon` steps.
    static SdeConfig standard(Eigen::Index horizon);

    double control_at(Eigen::Index step) const { return control ? control(step) : 0.0; }
    void validate() const;
};

/// s + f dt + sqrt(dt Sigma) eps with eps ~ N(0, I).
Vector euler_step(const Vector& state, const Vector& drift, const SdeConfig& cfg, Rng& rng);

/// An ensemble of state trajectories, states 0..horizon for each member.
class Trajectories {
public:
    Trajectories(Eigen::Index count, Eigen::Index horizon);

    Eigen::Index count() const { return count_; }
    Eigen::Index horizon() const { return horizon_; }

    Eigen::Vector2d state(Eigen::Index member, Eigen::Index step) const;
    void set_state(Eigen::Index member, Eigen::Index step, const Eigen::Vector2d& s);
    /// count x 2 cloud of states at one step.
    PointSet states_at(Eigen::Index step) const;

    bool operator==(const Trajectories& other) const = default;

private:
    Eigen::Index count_;
    Eigen::Index horizon_;
    std::vector<double> values_;  // member-major, then step, then coordinate
};

Trajectories simulate_truth(const Vector& s0, const SdeConfig& cfg, Eigen::Index count, Rng& rng,
                            const FhnParameters& p = {});

// ---------------------------------------------------------------------------
// Normalized inputs x = [unit(s), c] in the unit cube.

struct StateBox {
    Eigen::Vector2d lower = Eigen::Vector2d::Zero();
    Eigen::Vector2d upper = Eigen::Vector2d::Ones();

    /// Bounding box of every state in the ensemble, widened by `padding`
    /// times its extent on each side.
    static StateBox from_ensemble(const Trajectories& pilot, double padding = 0.1);

    Vector to_unit(const Vector& state, double control) const;
    Eigen::Vector2d from_unit(const Eigen::Vector2d& unit) const;
};

/// Noisy transition s' - s of the true system from the normalized input
/// x = [unit(s), c].
Vector sample_transition(const StateBox& box, const SdeConfig& cfg, const Vector& x, Rng& rng,
                         const FhnParameters& p = {});

/// Uniform inputs on the unit cube with noisy one-step transitions of the
/// true system as targets: one dataset per state coordinate, sharing X.
std::array<Dataset, 2> generate_training_data(const StateBox& box, const SdeConfig& cfg, Eigen::Index n, Rng& rng,
                                              const FhnParameters& p = {});

// ---------------------------------------------------------------------------
// Learned drift model.

struct Hyperparameters {
    double amplitude = 1.0;
    Vector lengthscales = Vector::Constant(3, 0.2);
    double noise_variance = 1e-3;
    double log_marginal_likelihood = 0.0;
};

struct HyperparameterGrid {
    std::vector<double> lengthscales{0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
    /// Noise variance as a fraction of the target second moment; the
    /// amplitude takes the remainder.
    std::vector<double> noise_fractions{1e-4, 1e-3, 1e-2, 1e-1, 0.3, 0.5, 0.7, 0.9};
    Eigen::Index subsample = 512;
    int sweeps = 3;  // coordinate sweeps over per-dimension lengthscales
};

/// Exact-GP log marginal likelihood maximized over the grid on a random
/// subsample: an isotropic search, then coordinate sweeps that move one
/// lengthscale at a time (re-choosing the noise fraction each time).
Hyperparameters grid_search(const Dataset& data, const HyperparameterGrid& grid, Rng& rng);

/// Collapsed variational lower bound on log p(y) for a sparse GP with
/// inducing inputs Z and the optimal q(u).
double collapsed_bound(const Kernel& k, const Dataset& data, const PointSet& Z);

/// Same search as grid_search, scored by the collapsed bound on all data.
Hyperparameters grid_search_sparse(const Dataset& data, const PointSet& Z, const HyperparameterGrid& grid);

/// m cluster centres of X by k-means++ seeding and Lloyd iterations.
PointSet kmeans_centers(const PointSet& X, Eigen::Index m, Rng& rng, int iterations = 50);

struct DynamicsModel {
    StateBox box;
    std::array<InducingModel, 2> drift;  // per coordinate, targets transition / dt
    std::array<Hyperparameters, 2> hyper;
};

/// Fits each coordinate's drift (transition / dt): m k-means centres of the
/// shared training inputs serve as inducing inputs for both coordinates,
/// hyperparameters come from grid_search_sparse, then the optimal q(u).
DynamicsModel train_dynamics_model(const std::array<Dataset, 2>& transitions, const StateBox& box,
                                   const SdeConfig& cfg, Eigen::Index m, Rng& rng,
                                   const HyperparameterGrid& grid = {});

// ---------------------------------------------------------------------------
// Rollouts of the learned model.

/// One decoupled path per coordinate and trajectory, reused for every step.
Trajectories rollout_decoupled(const DynamicsModel& model, const Vector& s0, const SdeConfig& cfg,
                               Eigen::Index count, Eigen::Index basis_size, Rng& rng);

/// Lower-triangular M with M M^T = L L^T - v v^T by hyperbolic rotations in
/// O(m^2). Throws NumericalError when the result would be indefinite.
Matrix rank1_downdate(Matrix L, Vector v);

/// Sequential sampling of f(x_1), f(x_2), ... from a sparse posterior, each
/// draw conditioned on all earlier ones. Every draw is appended to the
/// inducing set as an exactly observed value, which downdates the inducing
/// covariance by rank one and grows the prior factor by one row.
class IterativeSampler {
public:
    IterativeSampler(const InducingModel& q, Eigen::Index capacity);

    /// Predictive mean and variance at x given all earlier draws.
    std::pair<double, double> predictive(const Vector& x) const;
    /// Draws f(x) with the given standard normal and conditions on it.
    double draw_with(const Vector& x, double zeta);
    double draw(const Vector& x, Rng& rng);

    Eigen::Index size() const { return size_; }
    Eigen::Index inducing_count() const { return m_; }
    /// Lower factor of the (only nonzero) leading m x m covariance block.
    const Matrix& inducing_factor() const { return S_; }
    /// Full (m + t) x (m + t) covariance of the augmented inducing values.
    Matrix augmented_covariance() const;
    Vector augmented_mean() const { return mu_.head(size_); }
    Eigen::Index refactorizations() const { return refactorizations_; }

private:
    Kernel kernel_;
    Eigen::Index m_;
    Eigen::Index size_;
    PointSet Z_;   // capacity rows, first size_ used
    Matrix L_;     // prior factor of k(Z, Z), leading size_ block used
    Vector mu_;
    Matrix S_;
    Eigen::Index refactorizations_ = 0;
};

struct IterativeStats {
    Eigen::Index refactorizations = 0;
};

/// Euler-Maruyama rollouts drawing the drift sequentially from the sparse
/// posterior conditioned on the trajectory's earlier drift draws.
Trajectories rollout_iterative(const DynamicsModel& model, const Vector& s0, const SdeConfig& cfg,
                               Eigen::Index count, Rng& rng, IterativeStats* stats = nullptr);

struct DistanceSeries {
    std::vector<Eigen::Index> steps;
    Vector distance;     // truth vs candidate
    Vector noise_floor;  // truth vs an independent truth ensemble
};

/// Sinkhorn distance between state clouds every `stride` steps (and at the
/// final step). The noise floor is filled when `second_truth` is given.
DistanceSeries compare_rollouts(const Trajectories& truth, const Trajectories& candidate,
                                const TransportPlanConfig& cfg, const Trajectories* second_truth = nullptr,
                                Eigen::Index stride = 1);

}  // namespace gp
