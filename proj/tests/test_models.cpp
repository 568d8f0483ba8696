#include "gp_pathwise/metrics.hpp"
#include "gp_pathwise/models.hpp"

#include <doctest.h>

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

double max_abs(const Matrix& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("exact posterior") {
    const Kernel k = paper_kernel(1);
    Rng rng(1);
    const PointSet Xs = uniform_points(10, 1, rng);

    SUBCASE("no data gives the prior") {
        const GaussianMoments g = exact_posterior(k, Dataset{PointSet(0, 1), Vector(0), 1e-3}, Xs);
        CHECK(g.mean.norm() == 0.0);
        CHECK(max_abs(g.cov - gram(k, Xs)) < 1e-15);
    }
    SUBCASE("noiseless interpolation") {
        Dataset data = prior_dataset(k, 6, 0.0, rng);
        const GaussianMoments g = exact_posterior(k, data, data.X);
        CHECK(max_abs(g.mean - data.y) <= 1e-6);
        CHECK(g.cov.diagonal().maxCoeff() <= 1e-6);
    }
    SUBCASE("direct inversion oracle") {
        const Dataset data = prior_dataset(k, 4, 1e-3, rng);
        Matrix Knn = gram(k, data.X);
        Knn.diagonal().array() += data.noise_variance;
        const Matrix inv = Knn.inverse();
        const Matrix Ksn = gram(k, Xs, data.X);
        const Vector mean = Ksn * inv * data.y;
        const Matrix cov = gram(k, Xs) - Ksn * inv * Ksn.transpose();
        const GaussianMoments g = exact_posterior(k, data, Xs);
        CHECK(max_abs(g.mean - mean) < 1e-8);
        CHECK(max_abs(g.cov - cov) < 1e-8);
        const ExactPosterior post(k, data);
        CHECK(max_abs(post.variance(Xs) - cov.diagonal()) < 1e-8);
        CHECK(max_abs(post.mean(Xs) - mean) < 1e-8);
    }
    SUBCASE("posterior contraction") {
        const Dataset data = prior_dataset(k, 20, 1e-3, rng);
        const Vector var = ExactPosterior(k, data).variance(uniform_points(500, 1, rng));
        CHECK(var.maxCoeff() <= k.amplitude() + 1e-8);
    }
    SUBCASE("duplicate observation reduces variance") {
        Dataset data = prior_dataset(k, 5, 1e-2, rng);
        const PointSet x = data.X.topRows(1);
        const double before = ExactPosterior(k, data).variance(x)(0);
        Dataset more = data;
        more.X.conservativeResize(6, Eigen::NoChange);
        more.X.row(5) = x.row(0);
        more.y.conservativeResize(6);
        more.y(5) = data.y(0);
        CHECK(ExactPosterior(k, more).variance(x)(0) < before);
    }
    SUBCASE("mismatched dataset") {
        CHECK_THROWS_AS(exact_posterior(k, Dataset{PointSet::Zero(3, 1), Vector::Zero(2), 0.1}, Xs), DimensionError);
    }
}

TEST_CASE("sparse posterior") {
    const Kernel k = paper_kernel(1);
    Rng rng(2);
    const PointSet Z = uniform_points(8, 1, rng);
    const PointSet Xs = uniform_points(12, 1, rng);
    const Matrix Kmm = gram(k, Z);

    SUBCASE("uninformative q(u) gives the prior") {
        const GaussianMoments g = sparse_posterior({Z, Vector::Zero(8), Kmm, k}, Xs);
        CHECK(g.mean.norm() < 1e-12);
        CHECK(max_abs(g.cov - gram(k, Xs)) < 1e-8);
    }
    SUBCASE("deterministic inducing values") {
        const Vector mu = standard_normal(8, rng);
        const GaussianMoments g = sparse_posterior({Z, mu, Matrix::Zero(8, 8), k}, Z);
        CHECK(max_abs(g.mean - mu) < 1e-6);
        CHECK(max_abs(g.cov) < 1e-6);
    }
    SUBCASE("direct inversion oracle") {
        const Vector mu = standard_normal(8, rng);
        const Matrix R = standard_normal(8, 8, rng);
        const Matrix S = 0.1 * R * R.transpose();
        const Matrix inv = Kmm.inverse();
        const Matrix Ksm = gram(k, Xs, Z);
        const GaussianMoments g = sparse_posterior({Z, mu, S, k}, Xs);
        CHECK(max_abs(g.mean - Ksm * inv * mu) < 1e-8);
        CHECK(max_abs(g.cov - (gram(k, Xs) + Ksm * inv * (S - Kmm) * inv * Ksm.transpose())) < 1e-8);
        const SparsePosterior cached({Z, mu, S, k});
        CHECK(max_abs(cached.variance(Xs) - g.cov.diagonal()) < 1e-10);
        CHECK(max_abs(cached.mean(Xs) - g.mean) < 1e-12);
    }
}

TEST_CASE("optimal inducing distribution") {
    const Kernel k = paper_kernel(1);
    Rng rng(3);

    SUBCASE("interpolation limit") {
        Dataset data = prior_dataset(k, 10, 1e-8, rng);
        const GaussianMoments g = sparse_posterior(optimal_inducing(k, data, data.X), data.X);
        CHECK(max_abs(g.mean - data.y) <= 1e-3);
    }
    SUBCASE("full inducing set reproduces the exact posterior") {
        const Dataset data = prior_dataset(k, 12, 1e-3, rng);
        const PointSet Xs = uniform_points(20, 1, rng);
        const GaussianMoments sparse = sparse_posterior(optimal_inducing(k, data, data.X), Xs);
        const GaussianMoments exact = exact_posterior(k, data, Xs);
        CHECK(max_abs(sparse.mean - exact.mean) < 1e-6);
        CHECK(max_abs(sparse.cov - exact.cov) < 1e-6);
    }
    SUBCASE("zero data") {
        Dataset data = prior_dataset(k, 10, 1e-3, rng);
        data.y.setZero();
        const InducingModel q = optimal_inducing(k, data, uniform_points(5, 1, rng));
        CHECK(q.mean_u.norm() == 0.0);
        CHECK(max_abs(q.cov_u - q.cov_u.transpose()) == 0.0);
        CHECK_NOTHROW(cholesky_jittered(q.cov_u));
    }
    SUBCASE("preconditions") {
        CHECK_THROWS(optimal_inducing(k, Dataset{PointSet(0, 1), Vector(0), 1e-3}, uniform_points(3, 1, rng)));
        Dataset data = prior_dataset(k, 4, 0.0, rng);
        CHECK_THROWS(optimal_inducing(k, data, data.X));
    }
}

TEST_CASE("weight posterior") {
    const Kernel k = paper_kernel(1);
    Rng rng(4);

    SUBCASE("zero targets") {
        const FourierBasis b = build_basis(k, 10, rng);
        Dataset data = prior_dataset(k, 6, 1e-2, rng);
        data.y.setZero();
        const Matrix Phi = features(b, data.X);
        Matrix A = Phi.transpose() * Phi;
        A.diagonal().array() += data.noise_variance;
        for (const auto branch : {WoodburyBranch::weight_space, WoodburyBranch::data_space}) {
            const GaussianMoments g = weight_posterior(b, data, branch);
            CHECK(g.mean.norm() == 0.0);
            CHECK(max_abs(g.cov - data.noise_variance * A.inverse()) < 1e-8);
        }
    }
    SUBCASE("no data gives the prior") {
        const FourierBasis b = build_basis(k, 7, rng);
        const GaussianMoments g = weight_posterior(b, Dataset{PointSet(0, 1), Vector(0), 1e-3});
        CHECK(g.mean.norm() == 0.0);
        CHECK(g.cov == Matrix::Identity(7, 7));
    }
    SUBCASE("Woodbury branches agree") {
        const FourierBasis b = build_basis(k, 30, rng);
        const Dataset data = prior_dataset(k, 20, 1e-3, rng);
        const GaussianMoments ws = weight_posterior(b, data, WoodburyBranch::weight_space);
        const GaussianMoments ds = weight_posterior(b, data, WoodburyBranch::data_space);
        CHECK(max_abs(ws.mean - ds.mean) < 1e-8);
        CHECK(max_abs(ws.cov - ds.cov) < 1e-8);
    }
}

TEST_CASE("weight-space mean converges to the exact mean") {
    const Kernel k = paper_kernel(1);
    Rng rng(5);
    double small = 0.0, large = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Dataset data = prior_dataset(k, 64, 1e-3, rng);
        const PointSet Xs = uniform_points(64, 1, rng);
        const Vector exact = ExactPosterior(k, data).mean(Xs);
        auto gap = [&](Eigen::Index l) {
            const FourierBasis b = build_basis(k, l, rng);
            return max_abs(features(b, Xs) * weight_posterior(b, data).mean - exact);
        };
        small += gap(1000);
        large += gap(4000);
    }
    const double ratio = large / small;
    CHECK(ratio >= 0.3);
    CHECK(ratio <= 0.8);
}

TEST_CASE("location-scale sampling") {
    const Kernel k = paper_kernel(1);
    Rng rng(6);
    const PointSet X = uniform_points(4, 1, rng);
    const GaussianMoments g{standard_normal(4, rng), gram(k, X)};

    SUBCASE("zero normals give the mean") {
        const Matrix s = location_scale_transform(g, Matrix::Zero(4, 3));
        for (int r = 0; r < 3; ++r) CHECK(max_abs(s.row(r).transpose() - g.mean) == 0.0);
    }
    SUBCASE("deterministic given the seed") {
        Rng a(9), b(9);
        CHECK(location_scale_sample(g, 10, a) == location_scale_sample(g, 10, b));
    }
    SUBCASE("moments") {
        const Matrix s = location_scale_sample(g, 100000, rng);
        const GaussianMoments e = empirical_moments(s);
        for (Eigen::Index i = 0; i < 4; ++i)
            CHECK(std::abs(e.mean(i) - g.mean(i)) <= 4.0 * std::sqrt(g.cov(i, i) / 100000.0));
        CHECK(max_abs(e.cov - g.cov) <= 0.02 * max_abs(g.cov));
    }
}

TEST_CASE("log marginal likelihood") {
    const Kernel k = paper_kernel(1);
    Rng rng(7);
    const Dataset data = prior_dataset(k, 5, 1e-2, rng);
    Matrix K = gram(k, data.X);
    K.diagonal().array() += data.noise_variance;
    const double direct = -0.5 * data.y.dot(K.inverse() * data.y) - 0.5 * std::log(K.determinant()) -
                          2.5 * std::log(2.0 * M_PI);
    CHECK(log_marginal_likelihood(k, data) == doctest::Approx(direct).epsilon(1e-10));
}
