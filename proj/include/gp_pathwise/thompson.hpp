#pragma once

#include "gp_pathwise/optimize.hpp"
#include "gp_pathwise/pathwise.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gp {

enum class TSSampler { function_space, weight_space, decoupled, random_search };

std::string to_string(TSSampler sampler);
TSSampler parse_sampler(const std::string& name);

struct TSConfig {
    Eigen::Index dim = 2;
    Eigen::Index batch = 2;         // kappa
    Eigen::Index mesh_size = 4096;
    Eigen::Index top_s = 512;       // function-space active set
    Eigen::Index starts = 32;       // pathwise gradient starts
    Eigen::Index budget = 256;      // total objective evaluations
    TSSampler sampler = TSSampler::decoupled;
    Eigen::Index basis_size = 64;   // initial Fourier allocation l
    double noise_variance = 1e-3;
    Eigen::Index exact_limit = 1024;  // exact GP while n <= exact_limit
    Eigen::Index max_inducing = 512;
    BoxOptions optimizer{};

    /// Full-size mesh sizes: 1e6 points and 2048 active for function
    /// space, 250 000 points and 32 starts for pathwise samplers.
    static TSConfig paper(TSSampler sampler, Eigen::Index dim);
    /// Same proportions at a size that runs on a laptop.
    static TSConfig desk(TSSampler sampler, Eigen::Index dim);

    /// Kernel of the known prior: unit amplitude, lengthscale sqrt(d / 100).
    Kernel kernel() const;
    void validate() const;
};

struct TSIteration {
    PointSet points;   // kappa x d
    Vector values;     // noise-free objective at the points
    Vector observed;   // noisy observations
    double incumbent = 0.0;
    double seconds = 0.0;
};

struct TSTrace {
    std::vector<TSIteration> iterations;
    /// Total number of objective evaluations.
    Eigen::Index evaluations() const;
};

/// Predictive model for one TS iteration: exact GP while n <= exact_limit,
/// otherwise a sparse GP with optimal q(u) on a random subset of the inputs.
class TSPosterior {
public:
    TSPosterior(const Kernel& k, const Dataset& data, const TSConfig& cfg, Rng& rng);

    bool is_sparse() const { return sparse_.has_value(); }
    const Kernel& kernel() const { return kernel_; }
    /// Number of canonical basis functions a decoupled draw carries.
    Eigen::Index canonical_size() const;

    Vector mean(const PointSet& Xs) const;
    Vector variance(const PointSet& Xs) const;
    GaussianMoments moments(const PointSet& Xs) const;

    DecoupledPath draw_decoupled(Eigen::Index basis_size, Rng& rng) const;
    DecoupledPath draw_weight_space(Eigen::Index basis_size, Rng& rng) const;

private:
    Kernel kernel_;
    Dataset data_;
    std::optional<ExactPosterior> exact_;
    std::optional<SparsePosterior> sparse_;
    std::optional<DecoupledExactSampler> exact_sampler_;
    std::optional<DecoupledSparseSampler> sparse_sampler_;
};

/// One batch from the mesh procedure: per element, independent marginal
/// draws on the shared mesh pick an active set of top_s points, on which a
/// joint posterior draw is minimized. Returns cfg.batch mesh points.
PointSet ts_step_function_space(const TSPosterior& post, const PointSet& mesh, const TSConfig& cfg, Rng& rng);
/// Same with a fresh uniform mesh of cfg.mesh_size points.
PointSet ts_step_function_space(const Kernel& k, const Dataset& data, const TSConfig& cfg, Rng& rng);

using PathFactory = std::function<DecoupledPath(Rng&)>;

/// Multi-start minimization of one path: the `starts` best mesh points are
/// refined by the box optimizer and the best result is returned.
struct PathMinimum {
    Vector x;
    double value = 0.0;
    double mesh_best = 0.0;
};
PathMinimum minimize_path(const DecoupledPath& path, const PointSet& mesh, Eigen::Index starts,
                          const BoxOptions& options);

/// One batch of pathwise minimizers, one independently drawn path per element.
PointSet ts_step_pathwise(const PathFactory& factory, const PointSet& mesh, const TSConfig& cfg, Rng& rng);
PointSet ts_step_pathwise(const PathFactory& factory, const TSConfig& cfg, Rng& rng);

using Objective = std::function<double(const Vector&)>;

TSTrace run_ts(const Objective& objective, const TSConfig& cfg, Rng& rng);

struct TestObjective {
    DecoupledPath path;
    Vector argmin;
    double minimum = 0.0;

    double operator()(const Vector& x) const { return path.at(x); }
};

/// Prior function draw with 2^14 Fourier features; its global minimum is
/// estimated by box-constrained descent from the `starts` best points of a
/// random mesh eight times that size.
TestObjective sample_test_objective(const Kernel& k, Eigen::Index dim, Rng& rng, Eigen::Index starts = 512,
                                    Eigen::Index basis_size = Eigen::Index{1} << 14);

/// Re-estimates the minimum of an existing objective with a different
/// number of starts.
double estimate_minimum(const DecoupledPath& path, Eigen::Index starts, Rng& rng, Vector* argmin = nullptr);

}  // namespace gp
