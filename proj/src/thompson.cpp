#include "gp_pathwise/thompson.hpp"
#include "gp_pathwise/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace gp {

namespace {

// Indices of the `count` smallest entries, in ascending order of value.
std::vector<Eigen::Index> smallest(const Vector& values, Eigen::Index count) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    const auto keep = static_cast<std::size_t>(std::min(count, values.size()));
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
    idx.resize(keep);
    return idx;
}

PointSet rows(const PointSet& X, const std::vector<Eigen::Index>& idx) {
    PointSet out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
}

}  // namespace

std::string to_string(TSSampler sampler) {
    switch (sampler) {
        case TSSampler::function_space: return "function_space";
        case TSSampler::weight_space: return "weight_space";
        case TSSampler::decoupled: return "decoupled";
        case TSSampler::random_search: return "random_search";
    }
    return "unknown";
}

TSSampler parse_sampler(const std::string& name) {
    for (const auto s : {TSSampler::function_space, TSSampler::weight_space, TSSampler::decoupled,
                         TSSampler::random_search})
        if (to_string(s) == name) return s;
    throw std::invalid_argument("unknown Thompson sampler '" + name + "'");
}

TSConfig TSConfig::paper(TSSampler sampler, Eigen::Index dim) {
    TSConfig cfg;
    cfg.dim = dim;
    cfg.batch = dim;
    cfg.sampler = sampler;
    cfg.mesh_size = sampler == TSSampler::function_space ? 1000000 : 250000;
    cfg.top_s = 2048;
    cfg.starts = 32;
    return cfg;
}

TSConfig TSConfig::desk(TSSampler sampler, Eigen::Index dim) {
    TSConfig cfg = paper(sampler, dim);
    cfg.mesh_size = sampler == TSSampler::function_space ? 16384 : 4096;
    cfg.top_s = 512;
    return cfg;
}

Kernel TSConfig::kernel() const {
    return Kernel::isotropic(1.0, std::sqrt(static_cast<double>(dim) / 100.0), dim);
}

void TSConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("ts config: dim must be at least 1");
    if (batch < 1) throw std::invalid_argument("ts config: batch size must be at least 1");
    if (mesh_size < 1) throw std::invalid_argument("ts config: mesh_size must be at least 1");
    if (top_s < 1 || top_s > mesh_size) throw std::invalid_argument("ts config: need 1 <= top_s <= mesh_size");
    if (starts < 1) throw std::invalid_argument("ts config: starts must be at least 1");
    if (budget < 1) throw std::invalid_argument("ts config: budget must be at least 1");
    if (basis_size < 1) throw std::invalid_argument("ts config: basis_size must be at least 1");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("ts config: noise variance must be positive");
    if (max_inducing < 1) throw std::invalid_argument("ts config: max_inducing must be at least 1");
}

Eigen::Index TSTrace::evaluations() const {
    Eigen::Index total = 0;
    for (const auto& it : iterations) total += it.points.rows();
    return total;
}

// --------------------------------------------------------------------------

TSPosterior::TSPosterior(const Kernel& k, const Dataset& data, const TSConfig& cfg, Rng& rng)
    : kernel_(k), data_(data) {
    if (data.size() <= cfg.exact_limit) {
        exact_.emplace(k, data);
        exact_sampler_.emplace(k, data);
        return;
    }
    // Inducing locations: a uniformly random subset of the training inputs.
    const Eigen::Index m = std::min(data.size(), cfg.max_inducing);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, data.size() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(m));
    InducingModel q = optimal_inducing(k, data, rows(data.X, idx));
    sparse_.emplace(q);
    sparse_sampler_.emplace(std::move(q));
}

Eigen::Index TSPosterior::canonical_size() const { return sparse_ ? sparse_->model().size() : data_.size(); }

Vector TSPosterior::mean(const PointSet& Xs) const { return sparse_ ? sparse_->mean(Xs) : exact_->mean(Xs); }

Vector TSPosterior::variance(const PointSet& Xs) const {
    return sparse_ ? sparse_->variance(Xs) : exact_->variance(Xs);
}

GaussianMoments TSPosterior::moments(const PointSet& Xs) const {
    return sparse_ ? sparse_->moments(Xs) : exact_->moments(Xs);
}

DecoupledPath TSPosterior::draw_decoupled(Eigen::Index basis_size, Rng& rng) const {
    const FourierBasis basis = build_basis(kernel_, basis_size, rng);
    return sparse_ ? sparse_sampler_->draw(basis, rng) : exact_sampler_->draw(basis, rng);
}

DecoupledPath TSPosterior::draw_weight_space(Eigen::Index basis_size, Rng& rng) const {
    return weight_space_path(kernel_, build_basis(kernel_, basis_size, rng), data_, rng);
}

// --------------------------------------------------------------------------

PointSet ts_step_function_space(const TSPosterior& post, const PointSet& mesh, const TSConfig& cfg, Rng& rng) {
    cfg.validate();
    require_dims(cfg.dim, mesh.cols(), "function-space step: mesh dimension");
    if (mesh.rows() == 0) throw std::invalid_argument("function-space step: empty mesh");
    const Vector mean = post.mean(mesh);
    const Vector sd = post.variance(mesh).cwiseMax(0.0).cwiseSqrt();
    const std::uint64_t base = rng();
    PointSet out(cfg.batch, cfg.dim);
    parallel_for(static_cast<std::size_t>(cfg.batch), [&](std::size_t i) {
        Rng r = make_stream(base, i);
        const Vector marginal = mean + sd.cwiseProduct(standard_normal(mesh.rows(), r));
        const std::vector<Eigen::Index> active = smallest(marginal, cfg.top_s);
        const PointSet Xs = rows(mesh, active);
        const Matrix joint = location_scale_sample(post.moments(Xs), 1, r);
        Eigen::Index best = 0;
        joint.row(0).minCoeff(&best);
        out.row(static_cast<Eigen::Index>(i)) = Xs.row(best);
    });
    return out;
}

PointSet ts_step_function_space(const Kernel& k, const Dataset& data, const TSConfig& cfg, Rng& rng) {
    const TSPosterior post(k, data, cfg, rng);
    return ts_step_function_space(post, uniform_points(cfg.mesh_size, cfg.dim, rng), cfg, rng);
}

PathMinimum minimize_path(const DecoupledPath& path, const PointSet& mesh, Eigen::Index starts,
                          const BoxOptions& options) {
    if (mesh.rows() == 0) throw std::invalid_argument("minimize_path: empty mesh");
    const Vector values = path(mesh);
    const std::vector<Eigen::Index> idx = smallest(values, starts);
    PathMinimum best{mesh.row(idx.front()).transpose(), values(idx.front()), values(idx.front())};
    const ValueAndGradient fg = [&](const Vector& x, Vector& g) { return path.value_and_gradient(x, g); };
    for (const Eigen::Index i : idx) {
        const BoxResult r = minimize_box(fg, mesh.row(i).transpose(), options);
        if (r.value < best.value) {
            best.x = r.x;
            best.value = r.value;
        }
    }
    return best;
}

PointSet ts_step_pathwise(const PathFactory& factory, const TSConfig& cfg, Rng& rng) {
    const PointSet mesh = uniform_points(cfg.mesh_size, cfg.dim, rng);
    return ts_step_pathwise(factory, mesh, cfg, rng);
}

PointSet ts_step_pathwise(const PathFactory& factory, const PointSet& mesh, const TSConfig& cfg, Rng& rng) {
    cfg.validate();
    require_dims(cfg.dim, mesh.cols(), "pathwise step: mesh dimension");
    const std::uint64_t base = rng();
    PointSet out(cfg.batch, cfg.dim);
    parallel_for(static_cast<std::size_t>(cfg.batch), [&](std::size_t i) {
        Rng r = make_stream(base, i);
        const DecoupledPath path = factory(r);
        const PathMinimum best = minimize_path(path, mesh, cfg.starts, cfg.optimizer);
        out.row(static_cast<Eigen::Index>(i)) = best.x.cwiseMax(0.0).cwiseMin(1.0).transpose();
    });
    return out;
}

TSTrace run_ts(const Objective& objective, const TSConfig& cfg, Rng& rng) {
    cfg.validate();
    const Kernel k = cfg.kernel();
    const double noise_sd = std::sqrt(cfg.noise_variance);
    Dataset data{PointSet(0, cfg.dim), Vector(0), cfg.noise_variance};
    TSTrace trace;
    double incumbent = std::numeric_limits<double>::infinity();
    while (data.size() < cfg.budget) {
        TSConfig step = cfg;
        step.batch = std::min(cfg.batch, cfg.budget - data.size());
        const auto start = std::chrono::steady_clock::now();
        PointSet points;
        switch (cfg.sampler) {
            case TSSampler::random_search:
                points = uniform_points(step.batch, cfg.dim, rng);
                break;
            case TSSampler::function_space:
                points = ts_step_function_space(k, data, step, rng);
                break;
            case TSSampler::decoupled: {
                const TSPosterior post(k, data, step, rng);
                points = ts_step_pathwise([&](Rng& r) { return post.draw_decoupled(step.basis_size, r); }, step, rng);
                break;
            }
            case TSSampler::weight_space: {
                // Matched budget: as many features as the decoupled sampler
                // has Fourier plus canonical basis functions.
                const TSPosterior post(k, data, step, rng);
                const Eigen::Index features = step.basis_size + post.canonical_size();
                points = ts_step_pathwise([&](Rng& r) { return post.draw_weight_space(features, r); }, step, rng);
                break;
            }
        }
        TSIteration it;
        it.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        it.points = points;
        it.values.resize(points.rows());
        it.observed.resize(points.rows());
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            it.values(i) = objective(points.row(i).transpose());
            it.observed(i) = it.values(i) + noise_sd * standard_normal(1, rng)(0);
            incumbent = std::min(incumbent, it.values(i));
        }
        it.incumbent = incumbent;

        const Eigen::Index n = data.size();
        data.X.conservativeResize(n + points.rows(), Eigen::NoChange);
        data.X.bottomRows(points.rows()) = points;
        data.y.conservativeResize(n + points.rows());
        data.y.tail(points.rows()) = it.observed;
        trace.iterations.push_back(std::move(it));
    }
    return trace;
}

// --------------------------------------------------------------------------

double estimate_minimum(const DecoupledPath& path, Eigen::Index starts, Rng& rng, Vector* argmin) {
    if (starts < 1) throw std::invalid_argument("estimate_minimum: starts must be at least 1");
    const PointSet mesh = uniform_points(8 * starts, path.dim(), rng);
    BoxOptions options;
    options.max_iters = 100;
    const PathMinimum best = minimize_path(path, mesh, starts, options);
    if (argmin) *argmin = best.x;
    return best.value;
}

TestObjective sample_test_objective(const Kernel& k, Eigen::Index dim, Rng& rng, Eigen::Index starts,
                                    Eigen::Index basis_size) {
    require_dims(k.dim(), dim, "sample_test_objective: kernel dimension");
    FourierBasis basis = build_basis(k, basis_size, rng);
    WeightVector w = draw_prior_function(basis, rng);
    TestObjective out{DecoupledPath(std::move(basis), std::move(w), PointSet(0, dim), Vector(0), k), Vector(), 0.0};
    out.minimum = estimate_minimum(out.path, starts, rng, &out.argmin);
    return out;
}

}  // namespace gp
