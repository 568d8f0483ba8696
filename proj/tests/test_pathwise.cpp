#include "gp_pathwise/metrics.hpp"
#include "gp_pathwise/pathwise.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>

using namespace gp;

namespace {

Kernel paper_kernel(Eigen::Index d) { return Kernel::isotropic(1.0, std::sqrt(d / 100.0), d); }

Dataset prior_dataset(const Kernel& k, Eigen::Index n, double noise, Rng& rng) {
    Dataset data{uniform_points(n, k.dim(), rng), Vector(), noise};
    Matrix K = gram(k, data.X);
    K.diagonal().array() += noise;
    data.y = cholesky_jittered(K).matrix * standard_normal(n, rng);
    return data;
}

InducingModel random_inducing(const Kernel& k, Eigen::Index m, Rng& rng) {
    const Dataset data = prior_dataset(k, 16, 1e-3, rng);
    return optimal_inducing(k, data, uniform_points(m, k.dim(), rng));
}

double max_abs(const Matrix& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

// Largest entrywise deviation of the sample moments from `g`, measured in
// Monte-Carlo standard errors of each entry.
double worst_standard_error(const Matrix& samples, const GaussianMoments& g) {
    const GaussianMoments e = empirical_moments(samples);
    const double s = static_cast<double>(samples.rows());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < g.dim(); ++i) {
        worst = std::max(worst, std::abs(e.mean(i) - g.mean(i)) / std::sqrt(g.cov(i, i) / s));
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double se = std::sqrt((g.cov(i, i) * g.cov(j, j) + g.cov(i, j) * g.cov(i, j)) / s);
            worst = std::max(worst, std::abs(e.cov(i, j) - g.cov(i, j)) / se);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("finite-dimensional Matheron rule") {
    SUBCASE("independent blocks leave the draw unchanged") {
        const GaussianMoments joint{Vector::Zero(3), (Vector(3) << 1.0, 2.0, 3.0).finished().asDiagonal()};
        const Vector a = (Vector(1) << 0.7).finished();
        const Vector out = matheron_condition(joint, 1, Vector::Constant(2, 5.0), a, Vector::Constant(2, -1.0));
        CHECK(out(0) == 0.7);
    }
    SUBCASE("perfectly correlated scalars return the observation") {
        const GaussianMoments joint{Vector::Zero(2), Matrix::Constant(2, 2, 1.5)};
        const Vector b = (Vector(1) << 0.3).finished();
        const Vector out = matheron_condition(joint, 1, (Vector(1) << 2.0).finished(), b, b);
        CHECK(out(0) == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("conditioned draws match the block formula") {
        const Matrix C = (Matrix(2, 2) << 2.0, 0.8, 0.8, 1.0).finished();
        const GaussianMoments joint{(Vector(2) << 0.5, -0.2).finished(), C};
        const double beta = 0.7;
        Rng rng(3);
        const Matrix draws = location_scale_sample(joint, 100000, rng);
        Matrix out(100000, 1);
        for (Eigen::Index s = 0; s < draws.rows(); ++s)
            out(s, 0) = matheron_condition(joint, 1, Vector::Constant(1, beta), Vector::Constant(1, draws(s, 0)),
                                           Vector::Constant(1, draws(s, 1)))(0);
        const GaussianMoments e = empirical_moments(out);
        CHECK(std::abs(e.mean(0) - (0.5 + 0.8 * (beta + 0.2))) < 0.02);
        CHECK(std::abs(e.cov(0, 0) - (2.0 - 0.64)) < 0.02);
    }
}

TEST_CASE("pathwise sparse sampling") {
    const Kernel k = paper_kernel(1);
    Rng rng(10);

    SUBCASE("deterministic inducing values at the anchors") {
        InducingModel q = random_inducing(k, 8, rng);
        q.cov_u.setZero();
        const Matrix s = pathwise_sample_sparse(q, q.Z, 50, rng);
        for (Eigen::Index r = 0; r < s.rows(); ++r) CHECK(max_abs(s.row(r).transpose() - q.mean_u) < 1e-10);
    }
    SUBCASE("moments match the closed form") {
        const InducingModel q = random_inducing(k, 8, rng);
        const PointSet Xs = uniform_points(16, 1, rng);
        const Matrix s = pathwise_sample_sparse(q, Xs, 100000, rng);
        CHECK(w2_empirical_vs_gaussian(s, sparse_posterior(q, Xs)) < 0.05);
    }
    SUBCASE("prior marginal as q(u) gives the prior") {
        const PointSet Z = uniform_points(8, 1, rng);
        const InducingModel q{Z, Vector::Zero(8), gram(k, Z), k};
        const PointSet Xs = uniform_points(16, 1, rng);
        const Matrix s = pathwise_sample_sparse(q, Xs, 100000, rng);
        CHECK(w2_empirical_vs_gaussian(s, {Vector::Zero(16), gram(k, Xs)}) < 0.05);
    }
}

TEST_CASE("pathwise exact sampling") {
    const Kernel k = paper_kernel(1);
    Rng rng(11);

    SUBCASE("no data gives prior samples") {
        const PointSet Xs = uniform_points(8, 1, rng);
        const Matrix s = pathwise_sample_exact(k, Dataset{PointSet(0, 1), Vector(0), 1e-3}, Xs, 100000, rng);
        CHECK(w2_empirical_vs_gaussian(s, {Vector::Zero(8), gram(k, Xs)}) < 0.05);
    }
    SUBCASE("noiseless interpolation") {
        const Dataset data = prior_dataset(k, 6, 0.0, rng);
        const Matrix s = pathwise_sample_exact(k, data, data.X, 100, rng);
        for (Eigen::Index r = 0; r < s.rows(); ++r) CHECK(max_abs(s.row(r).transpose() - data.y) <= 1e-6);
    }
    SUBCASE("dense test grid") {
        // On 1024 locations the unscaled W2 carries a Monte-Carlo floor near
        // sqrt(tr K / draws) = 0.1 from the mean alone; the comparison is made
        // on the L2-discretized scale sqrt(1/|X*|) used for function-space W2.
        const Dataset data = prior_dataset(k, 4, 1e-3, rng);
        const PointSet Xs = uniform_points(1024, 1, rng);
        const PathwiseExactSampler sampler(k, data, Xs);
        MomentAccumulator acc(Xs.rows());
        for (int batch = 0; batch < 10; ++batch) acc.add(sampler.draw(10000, rng));
        const double scale = std::sqrt(1.0 / 1024.0);
        CHECK(scale * w2_gaussian(acc.moments(), exact_posterior(k, data, Xs)) < 0.1);
    }
}

TEST_CASE("pathwise weight updates") {
    const Kernel k = paper_kernel(1);
    Rng rng(12);
    const FourierBasis b = build_basis(k, 8, rng);

    SUBCASE("no data leaves weights unchanged") {
        const Matrix w = standard_normal(8, 5, rng);
        CHECK(pathwise_update_weights(b, Dataset{PointSet(0, 1), Vector(0), 1e-3}, w, Matrix(0, 5)) == w);
    }
    SUBCASE("zero residual leaves weights unchanged") {
        const Vector w = standard_normal(8, rng);
        Dataset data{uniform_points(16, 1, rng), Vector(), 1e-3};
        data.y = features(b, data.X) * w;
        CHECK(max_abs(pathwise_update_weights(b, data, w, Matrix::Zero(16, 1)) - w) < 1e-12);
    }
    SUBCASE("moments match the weight posterior") {
        const Dataset data = prior_dataset(k, 16, 1e-2, rng);
        const Matrix s = pathwise_sample_weights(b, data, 100000, rng);
        const GaussianMoments target = weight_posterior(b, data);
        const GaussianMoments e = empirical_moments(s);
        CHECK(max_abs(e.mean - target.mean) < 0.02);
        CHECK(max_abs(e.cov - target.cov) < 0.02);
    }
}

TEST_CASE("decoupled sparse paths") {
    const Kernel k = paper_kernel(1);
    Rng rng(13);
    const InducingModel q = random_inducing(k, 8, rng);
    const DecoupledSparseSampler sampler(q);

    SUBCASE("paths interpolate the inducing values") {
        const FourierBasis b = build_basis(k, 512, rng);
        const WeightVector w = draw_prior_function(b, rng);
        const Vector u = standard_normal(8, rng);
        const DecoupledPath p = sampler.path(b, w, u);
        CHECK(max_abs(path_eval(p, q.Z) - u) <= 1e-6);
        CHECK(max_abs(gram(k, q.Z) * p.coefficients() + features(b, q.Z) * w.values - u) <= 1e-6);
    }
    SUBCASE("zero weights and mean inducing values give the posterior mean") {
        const FourierBasis b = build_basis(k, 512, rng);
        const DecoupledPath p = sampler.path(b, WeightVector{Vector::Zero(512)}, q.mean_u);
        const PointSet Xs = uniform_points(64, 1, rng);
        CHECK(max_abs(path_eval(p, Xs) - sparse_posterior(q, Xs).mean) <= 1e-6);
    }
    SUBCASE("moments with a shared basis") {
        const PointSet Xs = uniform_points(16, 1, rng);
        const Matrix s = sampler.draw_values(Xs, 100000, 4096, BasisPolicy::shared, rng);
        const GaussianMoments target = sparse_posterior(q, Xs);
        const GaussianMoments e = empirical_moments(s);
        CHECK(max_abs(e.mean - target.mean) < 0.01);
        CHECK(max_abs(e.cov - target.cov) < 0.05);
    }
    SUBCASE("batched values match explicit paths") {
        const FourierBasis b = build_basis(k, 64, rng);
        const PointSet Xs = uniform_points(5, 1, rng);
        Rng a(99);
        const DecoupledPath p = sampler.draw(b, a);
        CHECK(p.anchors() == q.Z);
        CHECK(p.weights().values.size() == 64);
        CHECK(std::isfinite(path_eval(p, Xs).sum()));
    }
}

TEST_CASE("decoupled exact paths") {
    const Kernel k = paper_kernel(1);
    Rng rng(14);

    SUBCASE("noiseless interpolation") {
        const Dataset data = prior_dataset(k, 10, 0.0, rng);
        const DecoupledExactSampler sampler(k, data);
        const FourierBasis b = build_basis(k, 256, rng);
        const DecoupledPath p = sampler.path(b, draw_prior_function(b, rng), Vector::Zero(10));
        CHECK(max_abs(path_eval(p, data.X) - data.y) <= 1e-6);
    }
    SUBCASE("mean matches the exact posterior") {
        const Dataset data = prior_dataset(k, 16, 1e-3, rng);
        const PointSet Xs = uniform_points(16, 1, rng);
        const Matrix s = DecoupledExactSampler(k, data).draw_values(Xs, 100000, 4096, BasisPolicy::shared, rng);
        CHECK(max_abs(s.colwise().mean().transpose() - exact_posterior(k, data, Xs).mean) < 0.01);
    }
    SUBCASE("far from the data the paths revert to the prior") {
        const Dataset data = prior_dataset(k, 16, 1e-3, rng);
        const PointSet far = PointSet::Constant(1, 1, 1.0 + 10.0 * 0.1);
        const Matrix s = DecoupledExactSampler(k, data).draw_values(far, 100000, 4096, BasisPolicy::shared, rng);
        CHECK(std::abs(empirical_moments(s).cov(0, 0) - k.amplitude()) < 0.05);
    }
    SUBCASE("no data gives prior paths") {
        const DecoupledExactSampler sampler(k, Dataset{PointSet(0, 1), Vector(0), 1e-3});
        const FourierBasis b = build_basis(k, 32, rng);
        const DecoupledPath p = sampler.draw(b, rng);
        CHECK(p.anchors().rows() == 0);
        const PointSet Xs = uniform_points(4, 1, rng);
        CHECK(max_abs(path_eval(p, Xs) - features(b, Xs) * p.weights().values) == 0.0);
    }
}

TEST_CASE("moment matching for every sampler") {
    const Kernel k = paper_kernel(1);
    Rng rng(15);
    const Dataset data = prior_dataset(k, 16, 1e-3, rng);
    const InducingModel q = optimal_inducing(k, data, uniform_points(8, 1, rng));
    const PointSet Xs = uniform_points(8, 1, rng);
    const Eigen::Index draws = 100000;
    const GaussianMoments exact = exact_posterior(k, data, Xs);
    const GaussianMoments sparse = sparse_posterior(q, Xs);

    CHECK(worst_standard_error(location_scale_sample(exact, draws, rng), exact) <= 4.0);
    CHECK(worst_standard_error(pathwise_sample_sparse(q, Xs, draws, rng), sparse) <= 4.0);
    CHECK(worst_standard_error(pathwise_sample_exact(k, data, Xs, draws, rng), exact) <= 4.0);
    CHECK(worst_standard_error(DecoupledSparseSampler(q).draw_values(Xs, draws, 256, BasisPolicy::per_draw, rng),
                               sparse) <= 4.0);
    CHECK(worst_standard_error(DecoupledExactSampler(k, data).draw_values(Xs, draws, 256, BasisPolicy::per_draw, rng),
                               exact) <= 4.0);

    const FourierBasis b = build_basis(k, 32, rng);
    const GaussianMoments wpost = weight_posterior(b, data);
    const Matrix Phi = features(b, Xs);
    const GaussianMoments fvals{Phi * wpost.mean, Phi * wpost.cov * Phi.transpose()};
    CHECK(worst_standard_error(pathwise_sample_weights(b, data, draws, rng) * Phi.transpose(), fvals) <= 4.0);
}

TEST_CASE("path evaluation") {
    const Kernel k = paper_kernel(2);
    Rng rng(16);
    const Dataset data = prior_dataset(k, 12, 1e-3, rng);
    const FourierBasis b = build_basis(k, 128, rng);
    const DecoupledPath p = decoupled_sample_exact(k, data, b, rng);
    const PointSet Xs = uniform_points(20, 2, rng);

    CHECK(path_eval(p, Xs) == path_eval(p, Xs));
    const Vector batched = path_eval(p, Xs);
    for (Eigen::Index i = 0; i < Xs.rows(); ++i) {
        CHECK(path_eval(p, Xs.row(i))(0) == doctest::Approx(batched(i)).epsilon(1e-13).scale(1.0));
        CHECK(p.at(Xs.row(i).transpose()) == doctest::Approx(batched(i)).epsilon(1e-13).scale(1.0));
    }
    CHECK_THROWS_AS(path_eval(p, PointSet::Zero(2, 3)), DimensionError);
}

TEST_CASE("path gradient") {
    const Kernel k = paper_kernel(2);
    Rng rng(17);

    SUBCASE("zero path has zero gradient") {
        const FourierBasis b = build_basis(k, 16, rng);
        const DecoupledPath p(b, WeightVector{Vector::Zero(16)}, uniform_points(3, 2, rng), Vector::Zero(3), k);
        CHECK(path_gradient(p, Vector::Constant(2, 0.5)).norm() == 0.0);
    }
    SUBCASE("central differences") {
        const Dataset data = prior_dataset(k, 12, 1e-3, rng);
        const FourierBasis b = build_basis(k, 256, rng);
        const DecoupledPath p = decoupled_sample_exact(k, data, b, rng);
        const double h = 1e-5;
        double worst = 0.0;
        for (int t = 0; t < 20; ++t) {
            const Vector x = uniform_points(1, 2, rng).row(0).transpose();
            const Vector g = path_gradient(p, x);
            for (int c = 0; c < 2; ++c) {
                auto at = [&](double offset) {
                    Vector xs = x;
                    xs(c) += offset;
                    return p.at(xs);
                };
                const double fd = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
                worst = std::max(worst, std::abs(g(c) - fd));
            }
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("path evaluation cost is linear in the number of points") {
    const Kernel k = paper_kernel(2);
    Rng rng(18);
    const Dataset data = prior_dataset(k, 64, 1e-3, rng);
    const FourierBasis b = build_basis(k, 256, rng);
    const DecoupledPath p = decoupled_sample_exact(k, data, b, rng);
    auto seconds = [&](Eigen::Index size) {
        const PointSet Xs = uniform_points(size, 2, rng);
        double best = 1e30;
        for (int rep = 0; rep < 7; ++rep) {
            const auto start = std::chrono::steady_clock::now();
            const Vector v = path_eval(p, Xs);
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            CHECK(std::isfinite(v(0)));
            best = std::min(best, elapsed);
        }
        return best / static_cast<double>(size);
    };
    double previous = seconds(1 << 10);
    for (int e = 11; e <= 14; ++e) {
        const double current = seconds(Eigen::Index{1} << e);
        // Per-point cost may grow at most 1.5x per doubling.
        CHECK(current <= 1.5 * previous);
        previous = current;
    }
}
