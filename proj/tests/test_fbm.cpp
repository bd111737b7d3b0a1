#include <gtest/gtest.h>

#include <cmath>

#include "volrough/fbm.hpp"

using namespace volrough;

TEST(FbmCovariance, HalfIsMin) {
    for (double s : {0.1, 0.7, 2.0})
        for (double t : {0.3, 1.1}) EXPECT_NEAR(fbm_covariance(0.5, s, t), std::min(s, t), 1e-15);
}

TEST(FbmCovariance, DiagonalIsPower) {
    for (double h : {0.05, 0.3, 0.8}) EXPECT_NEAR(fbm_covariance(h, 1.7, 1.7), std::pow(1.7, 2 * h), 1e-14);
}

TEST(FbmCovariance, QuarterExample) {
    EXPECT_NEAR(fbm_covariance(0.25, 1.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(fbm_covariance(0.25, 1.0, 2.0), 0.70710678118654752, 1e-12);
    EXPECT_NEAR(fbm_covariance(0.25, 2.0, 2.0), 1.41421356237309505, 1e-12);
    const FbmEngine e(0.25, {1.0, 2.0});
    EXPECT_NEAR(e.covariance(0, 1), 0.70710678118654752, 1e-12);
}

TEST(FbmEngine, FactorReproducesCovariance) {
    const auto e = FbmEngine::uniform(0.1, 60, 0.004);
    const auto& l = e.factor();
    const Eigen::MatrixXd c = l * l.transpose();
    double worst = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = 0; j < e.size(); ++j)
            worst = std::max(worst, std::fabs(c(i, j) - e.covariance(i, j)));
    EXPECT_LT(worst, 1e-12);
    EXPECT_FALSE(e.jittered());
}

TEST(FbmEngine, ZeroNormalsGiveZeroPath) {
    const auto e = FbmEngine::uniform(0.3, 20, 0.01);
    for (double w : e.apply(std::vector<double>(20, 0.0))) EXPECT_EQ(w, 0.0);
}

TEST(FbmEngine, WhitenInvertsApply) {
    const auto e = FbmEngine::uniform(0.2, 80, 0.004);
    GaussianStream g(3, StreamId{});
    const auto d = e.draw(g);
    ASSERT_EQ(d.values.size(), 81u);
    EXPECT_EQ(d.values.front(), 0.0);
    const auto x = e.whiten(std::vector<double>(d.values.begin() + 1, d.values.end()));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], d.normals[i], 1e-8);
}

TEST(FbmEngine, ContinuationReassemblesPath) {
    const auto e = FbmEngine::uniform(0.1, 50, 0.004);
    GaussianStream g(5, StreamId{});
    const auto d = e.draw(g);
    const std::size_t i = 20, horizon = 35;
    auto tail = e.conditional_mean(std::span<const double>(d.normals).first(i), horizon);
    e.add_fresh(i, std::span<const double>(d.normals).subspan(i, horizon - i), tail);
    for (std::size_t r = 0; r < tail.size(); ++r) EXPECT_NEAR(tail[r], d.values[i + r + 1], 1e-12);
}

TEST(FbmEngine, ZeroFreshIsConditionalMean) {
    const auto e = FbmEngine::uniform(0.1, 30, 0.004);
    GaussianStream g(5, StreamId{});
    const auto d = e.draw(g);
    const auto mean = e.conditional_mean(std::span<const double>(d.normals).first(10), 30);
    auto out = mean;
    e.add_fresh(10, std::vector<double>(20, 0.0), out);
    EXPECT_EQ(out, mean);
    for (std::size_t r = 0; r < mean.size(); ++r) {
        double expect = 0.0;
        for (std::size_t p = 0; p < 10; ++p) expect += e.factor()(10 + r, p) * d.normals[p];
        EXPECT_NEAR(mean[r], expect, 1e-14);
    }
}

TEST(FbmEngine, ContinuationErrors) {
    const auto e = FbmEngine::uniform(0.3, 10, 0.1);
    GaussianStream g(1, StreamId{});
    const std::vector<double> known(5, 0.0);
    EXPECT_THROW(e.continue_path(known, g, 5), SizeError);
    EXPECT_THROW(e.continue_path(known, g, 11), SizeError);
    EXPECT_THROW(FbmEngine(0.3, {0.0, 1.0}), ConfigError);
    EXPECT_THROW(FbmEngine(1.2, {1.0}), ConfigError);
}

TEST(FbmEngine, TerminalVarianceMonteCarlo) {
    const double h = 0.3;
    const auto e = FbmEngine::uniform(h, 16, 0.25);
    const int n = 100000;
    double s2 = 0.0, s4 = 0.0;
    for (int k = 0; k < n; ++k) {
        GaussianStream g(11, StreamId{StreamPurpose::generic, static_cast<std::uint64_t>(k), 0, 0});
        const double w = e.draw(g).values.back();
        s2 += w * w;
        s4 += w * w * w * w;
    }
    const double var = s2 / n;
    const double se = std::sqrt((s4 / n - var * var) / n);
    EXPECT_NEAR(var, std::pow(4.0, 2 * h), 3.0 * se);
}

TEST(FbmEngine, BrownianIncrementsUncorrelated) {
    const auto e = FbmEngine::uniform(0.5, 4000, 0.001);
    GaussianStream g(2, StreamId{});
    const auto v = e.draw(g).values;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 2; i < v.size(); ++i) {
        const double a = v[i] - v[i - 1], b = v[i - 1] - v[i - 2];
        sxy += a * b;
        sxx += a * a;
    }
    EXPECT_LT(std::fabs(sxy / sxx), 3.0 / std::sqrt(4000.0));
}

TEST(FbmEngine, ContinuationFromZeroMatchesDrawLaw) {
    const auto e = FbmEngine::uniform(0.2, 6, 0.5);
    const int n = 10000;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(6, 6);
    for (int k = 0; k < n; ++k) {
        GaussianStream g(13, StreamId{StreamPurpose::sub_path, static_cast<std::uint64_t>(k), 0, 0});
        const auto w = e.continue_path({}, g, 6);
        Eigen::Map<const Eigen::VectorXd> x(w.data(), 6);
        s += x * x.transpose();
    }
    s /= n;
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 6; ++j) {
            const double c = e.covariance(i, j);
            const double se = std::sqrt((e.covariance(i, i) * e.covariance(j, j) + c * c) / n);
            EXPECT_NEAR(s(i, j), c, 3.5 * se) << i << "," << j;
        }
}

TEST(FbmEngine, ContinuationMeanMonteCarlo) {
    const auto e = FbmEngine::uniform(0.1, 40, 0.004);
    GaussianStream g0(21, StreamId{});
    const auto d = e.draw(g0);
    const std::span<const double> known(d.normals.data(), 25);
    const auto mean = e.conditional_mean(known, 40);
    const int m = 10000;
    std::vector<double> s(15, 0.0), s2(15, 0.0);
    for (int k = 0; k < m; ++k) {
        GaussianStream g(22, StreamId{StreamPurpose::sub_path, 0, 0, static_cast<std::uint64_t>(k)});
        const auto w = e.continue_path(known, g, 40);
        for (std::size_t r = 0; r < 15; ++r) {
            s[r] += w[r];
            s2[r] += w[r] * w[r];
        }
    }
    for (std::size_t r = 0; r < 15; ++r) {
        const double avg = s[r] / m;
        const double se = std::sqrt((s2[r] / m - avg * avg) / m);
        EXPECT_NEAR(avg, mean[r], 3.5 * se);
    }
}
