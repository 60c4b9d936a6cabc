#include <cmath>
#include <random>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "mixsum/dpmm_gibbs.hpp"
#include "oracles.hpp"

using namespace mixsum;

namespace {

DpmmHyper hyper2d(int k, double alpha = 1.0) {
    Vector mu0(2);
    mu0 << 0.5, -1.0;
    Matrix psi(2, 2);
    psi << 2.0, 0.3, 0.3, 1.0;
    return DpmmHyper{NiwParams{mu0, 1.5, SpdMatrix(psi), 5.0}, alpha, k};
}

DataMatrix gaussian_data(int n, const Vector& mean, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, sd);
    Matrix m(n, mean.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < mean.size(); ++j) m(i, j) = mean[j] + z(rng);
    return DataMatrix(m);
}

GibbsState fixed_state(std::vector<double> weights, std::vector<GaussianAtom> atoms, int n) {
    DpmmHyper h = hyper2d(static_cast<int>(weights.size()));
    h.niw = NiwParams{Vector::Zero(atoms[0].dim()), 1.0, SpdMatrix::identity(atoms[0].dim()), atoms[0].dim() + 2.0};
    return GibbsState{{}, std::move(weights), LabelVector(n, 1), std::move(atoms), h};
}

}  // namespace

TEST(NiwParams, Validation) {
    auto h = hyper2d(3);
    EXPECT_NO_THROW(h.validate());
    h.niw.nu = 1.0;
    EXPECT_THROW(h.validate(), ValidationError);
    h = hyper2d(3);
    h.niw.lambda = 0.0;
    EXPECT_THROW(h.validate(), ValidationError);
    h = hyper2d(0);
    EXPECT_THROW(h.validate(), ValidationError);
    h = hyper2d(3, -1.0);
    EXPECT_THROW(h.validate(), ValidationError);
    EXPECT_THROW((ChainConfig{10, 10, 1, 1}.validate()), ValidationError);
    EXPECT_EQ((ChainConfig{10000, 9000, 1, 1}.draws()), 1000);
    EXPECT_EQ((ChainConfig{10000, 9000, 5, 1}.draws()), 200);
}

TEST(NiwPosterior, EmptyClusterKeepsPrior) {
    auto p = hyper2d(1).niw;
    auto q = niw_posterior(p, ClusterStats{0, Vector::Zero(2), Matrix::Zero(2, 2)});
    EXPECT_EQ(q.mu0, p.mu0);
    EXPECT_EQ(q.lambda, p.lambda);
    EXPECT_EQ(q.nu, p.nu);
    EXPECT_EQ(q.psi.matrix(), p.psi.matrix());
}

TEST(NiwPosterior, SinglePointAtPriorMean) {
    auto p = hyper2d(1).niw;
    p.lambda = 1.0;
    auto q = niw_posterior(p, ClusterStats{1, p.mu0, Matrix::Zero(2, 2)});
    EXPECT_TRUE(q.mu0.isApprox(p.mu0, 1e-15));
    EXPECT_EQ(q.lambda, 2.0);
    EXPECT_EQ(q.nu, p.nu + 1.0);
    EXPECT_TRUE(q.psi.matrix().isApprox(p.psi.matrix(), 1e-15));
}

TEST(StepLabels, SingleComponentAlwaysOne) {
    std::mt19937_64 data_rng(71);
    auto data = gaussian_data(200, Vector::Zero(2), 5.0, data_rng);
    auto state = fixed_state({1.0}, {GaussianAtom(Vector::Zero(2), SpdMatrix::identity(2))}, data.n());
    Rng rng(1);
    step_labels(state, data, rng);
    for (int z : state.labels) EXPECT_EQ(z, 1);
}

TEST(StepLabels, WellSeparatedPointStaysWithItsAtom) {
    Vector m1 = Vector::Zero(2), m2 = Vector::Constant(2, 10.0);
    // Density ratio at m1 is exp(-|m1 - m2|^2 / 2) = exp(-100).
    Matrix pts = m1.transpose().replicate(10000, 1);
    DataMatrix data(pts);
    auto state = fixed_state({0.5, 0.5}, {GaussianAtom(m1, SpdMatrix::identity(2)), GaussianAtom(m2, SpdMatrix::identity(2))},
                             data.n());
    Rng rng(2);
    step_labels(state, data, rng);
    int ones = 0;
    for (int z : state.labels) ones += z == 1;
    EXPECT_GT(ones / 10000.0, 0.999);
}

TEST(StepLabels, CategoricalFrequencies) {
    const int n = 100000;
    DataMatrix data(Matrix::Zero(n, 1));
    GaussianAtom a(Vector::Zero(1), SpdMatrix::identity(1));
    auto state = fixed_state({0.2, 0.3, 0.5}, {a, a, a}, n);
    Rng rng(3);
    step_labels(state, data, rng);
    auto counts = state.counts();
    const double p[3] = {0.2, 0.3, 0.5};
    for (int k = 0; k < 3; ++k) {
        double sd = std::sqrt(n * p[k] * (1.0 - p[k]));
        EXPECT_NEAR(counts[k], n * p[k], 3.0 * sd) << "component " << k + 1;
    }
}

TEST(StepLabels, ZeroWeightComponentsNeverChosen) {
    DataMatrix data(Matrix::Zero(1000, 1));
    GaussianAtom a(Vector::Zero(1), SpdMatrix::identity(1));
    auto state = fixed_state({0.0, 1.0, 0.0}, {a, a, a}, data.n());
    Rng rng(4);
    step_labels(state, data, rng);
    for (int z : state.labels) EXPECT_EQ(z, 2);
}

TEST(StepSticks, WeightsFollowStickBreaking) {
    std::mt19937_64 data_rng(72);
    auto data = gaussian_data(30, Vector::Zero(2), 1.0, data_rng);
    Rng rng(5);
    auto state = initial_state(data, hyper2d(20), rng);
    for (int rep = 0; rep < 20; ++rep) {
        step_sticks(state, rng);
        double sum = 0.0, rest = 1.0;
        for (int k = 0; k < 20; ++k) {
            if (k + 1 < 20) {
                EXPECT_NEAR(state.weights[k], state.sticks[k] * rest, 1e-15);
            }
            rest *= 1.0 - state.sticks[k];
            sum += state.weights[k];
        }
        EXPECT_EQ(state.sticks.back(), 1.0);
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_NO_THROW(state.measure());
    }
}

TEST(StepSticks, FullFirstClusterMean) {
    // n_1 = n gives beta_1 ~ Beta(1 + n, alpha).
    const int n = 20;
    const double alpha = 2.0;
    GibbsState state{{}, {}, LabelVector(n, 1), {}, hyper2d(5, alpha)};
    Rng rng(6);
    const int reps = 10000;
    double sum = 0.0, sq = 0.0;
    for (int r = 0; r < reps; ++r) {
        step_sticks(state, rng);
        sum += state.sticks[0];
        sq += state.sticks[0] * state.sticks[0];
    }
    const double a = 1.0 + n, b = alpha, mean = a / (a + b);
    const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
    EXPECT_NEAR(sum / reps, mean, 3.0 * sd / std::sqrt(reps));
    EXPECT_NEAR(std::sqrt(sq / reps - (sum / reps) * (sum / reps)), sd, 0.05 * sd);
}

TEST(InverseWishart, MeanMatchesScaleOverDof) {
    auto p = hyper2d(1).niw;
    Rng rng(7);
    const int reps = 40000;
    Matrix sum = Matrix::Zero(2, 2);
    for (int r = 0; r < reps; ++r) sum += sample_inverse_wishart(p.psi, p.nu, rng).matrix();
    Matrix expected = p.psi.matrix() / (p.nu - 2.0 - 1.0);
    EXPECT_TRUE((sum / reps - expected).cwiseAbs().maxCoeff() < 0.03) << sum / reps;
}

TEST(RunChain, PriorRecoveryWithoutData) {
    // With no observations every sweep draws sticks and atoms from the prior.
    const auto h = hyper2d(4, 1.5);
    auto draws = run_chain(DataMatrix::empty(2), h, ChainConfig{3000, 0, 1, 11});
    ASSERT_EQ(draws.size(), 3000u);
    const double d = 2.0, dof = h.niw.nu - d + 1.0;
    std::vector<double> w1, mu0, s11;
    for (const auto& dr : draws) {
        w1.push_back(dr.measure.weight(0));
        mu0.push_back(dr.measure.atom(1).mean()[0]);
        s11.push_back(dr.measure.atom(2).cov()(0, 0));
    }
    boost::math::beta_distribution<double> stick(1.0, h.alpha);
    EXPECT_GT(oracle::ks_pvalue(w1, [&](double x) { return boost::math::cdf(stick, x); }), 0.01);

    boost::math::students_t_distribution<double> t(dof);
    const double scale = std::sqrt(h.niw.psi(0, 0) / (h.niw.lambda * dof));
    EXPECT_GT(oracle::ks_pvalue(mu0, [&](double x) { return boost::math::cdf(t, (x - h.niw.mu0[0]) / scale); }), 0.01);

    boost::math::inverse_gamma_distribution<double> ig(dof / 2.0, h.niw.psi(0, 0) / 2.0);
    EXPECT_GT(oracle::ks_pvalue(s11, [&](double x) { return boost::math::cdf(ig, x); }), 0.01);
}

TEST(RunChain, SingleClusterConjugatePosteriorMean) {
    std::mt19937_64 data_rng(73);
    Vector truth(2);
    truth << 3.0, -2.0;
    auto data = gaussian_data(40, truth, 1.0, data_rng);
    auto h = hyper2d(1);
    const int reps = 20000;
    auto draws = run_chain(data, h, ChainConfig{reps, 0, 1, 12});
    ASSERT_EQ(static_cast<int>(draws.size()), reps);
    Vector mean = Vector::Zero(2);
    for (const auto& dr : draws) mean += dr.measure.atom(0).mean();
    mean /= reps;

    ClusterStats s{data.n(), data.rows().colwise().mean().transpose(), Matrix::Zero(2, 2)};
    for (int i = 0; i < data.n(); ++i) {
        Vector r = data.row(i) - s.mean;
        s.scatter += r * r.transpose();
    }
    auto post = niw_posterior(h.niw, s);
    for (int j = 0; j < 2; ++j) {
        double var = post.psi(j, j) / ((post.nu - 2.0 - 1.0) * post.lambda);
        EXPECT_NEAR(mean[j], post.mu0[j], 3.0 * std::sqrt(var / reps)) << "component " << j;
    }
}

TEST(RunChain, DeterministicAndThinned) {
    std::mt19937_64 data_rng(74);
    auto data = gaussian_data(25, Vector::Zero(2), 2.0, data_rng);
    ChainConfig cfg{60, 30, 5, 99};
    auto a = run_chain(data, hyper2d(10), cfg), b = run_chain(data, hyper2d(10), cfg);
    ASSERT_EQ(a.size(), 6u);
    ASSERT_EQ(b.size(), 6u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].iteration, 35 + 5 * static_cast<int>(i));
        EXPECT_EQ(a[i].labels, b[i].labels);
        EXPECT_EQ(a[i].measure.weights(), b[i].measure.weights());
        for (std::size_t k = 0; k < a[i].measure.size(); ++k) {
            EXPECT_EQ(a[i].measure.atom(k).mean(), b[i].measure.atom(k).mean());
            EXPECT_EQ(a[i].measure.atom(k).cov().matrix(), b[i].measure.atom(k).cov().matrix());
        }
        EXPECT_EQ(a[i].measure.size(), 10u);
    }
    auto c = run_chain(data, hyper2d(10), ChainConfig{60, 30, 5, 100});
    EXPECT_NE(a.back().measure.weights(), c.back().measure.weights());
}

TEST(RunChain, RejectsDimensionMismatch) {
    std::mt19937_64 data_rng(75);
    auto data = gaussian_data(5, Vector::Zero(3), 1.0, data_rng);
    EXPECT_THROW(run_chain(data, hyper2d(3), ChainConfig{10, 5, 1, 1}), ValidationError);
}

TEST(ConditionalRefresh, CountsAndFrozenLabels) {
    std::mt19937_64 data_rng(76);
    auto data = gaussian_data(30, Vector::Zero(2), 1.0, data_rng);
    LabelVector z(30, 1);
    for (int i = 15; i < 30; ++i) z[i] = 3;
    auto ms = conditional_density_refresh(z, data, hyper2d(5), 10, 8);
    ASSERT_EQ(ms.size(), 10u);
    for (const auto& g : ms) EXPECT_EQ(g.size(), 5u);
    auto again = conditional_density_refresh(z, data, hyper2d(5), 10, 8);
    EXPECT_EQ(ms[9].weights(), again[9].weights());
    z[0] = 6;
    EXPECT_THROW(conditional_density_refresh(z, data, hyper2d(5), 10, 8), ValidationError);
    EXPECT_THROW(conditional_density_refresh(LabelVector(29, 1), data, hyper2d(5), 10, 8), ValidationError);
}

TEST(ConditionalRefresh, SingleClusterUsesConjugatePosterior) {
    std::mt19937_64 data_rng(77);
    Vector truth(2);
    truth << -4.0, 1.0;
    auto data = gaussian_data(60, truth, 0.5, data_rng);
    auto h = hyper2d(1);
    auto ms = conditional_density_refresh(LabelVector(60, 1), data, h, 4000, 9);
    Vector mean = Vector::Zero(2);
    for (const auto& g : ms) {
        EXPECT_EQ(g.weight(0), 1.0);
        mean += g.atom(0).mean();
    }
    mean /= 4000.0;
    Vector ybar = data.rows().colwise().mean().transpose();
    Vector expected = (h.niw.lambda * h.niw.mu0 + 60.0 * ybar) / (h.niw.lambda + 60.0);
    EXPECT_LT((mean - expected).norm(), 0.02);
}
