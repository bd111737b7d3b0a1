#include <gtest/gtest.h>

#include <cmath>

#include "volrough/fbm.hpp"
#include "volrough/random.hpp"
#include "volrough/regression.hpp"

using namespace volrough;

TEST(Moment, ConstantPathIsZero) {
    const auto p = TimeSeriesPath::daily(std::vector<double>(50, 0.3));
    for (double q : {0.5, 2.0})
        for (std::size_t lag : {1u, 7u}) EXPECT_EQ(moment(p, q, lag), 0.0);
}

TEST(Moment, Alternating) {
    std::vector<double> v(40);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 2);
    EXPECT_DOUBLE_EQ(moment(TimeSeriesPath::daily(v), 2.0, 1), 1.0);
}

TEST(Moment, LinearPath) {
    std::vector<double> v(100);
    const double c = 0.37;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * static_cast<double>(i);
    for (std::size_t lag : {1u, 5u, 20u}) EXPECT_NEAR(moment(TimeSeriesPath::daily(v), 1.0, lag), c * lag, 1e-12);
}

TEST(Moment, LagOutOfRange) {
    const auto p = TimeSeriesPath::daily(std::vector<double>(10, 1.0));
    EXPECT_THROW(moment(p, 1.0, 10), SizeError);
    EXPECT_THROW(moment(p, 1.0, 0), SizeError);
}

TEST(Regression, LinearPathExact) {
    std::vector<double> v(400);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
    const auto r = estimate_h_regression(TimeSeriesPath::daily(v), RegressionConfig{});
    EXPECT_EQ(r.max_lag, 10u);
    EXPECT_NEAR(r.h, 1.0, 1e-10);
    for (std::size_t i = 0; i < r.q_list.size(); ++i) EXPECT_NEAR(r.zeta[i], r.q_list[i], 1e-10);
    EXPECT_EQ(r.moments.size(), r.q_list.size() * r.max_lag);
}

TEST(Regression, BrownianNearHalf) {
    double sum = 0.0;
    const int n_paths = 20;
    for (int s = 0; s < n_paths; ++s) {
        GaussianStream g(42, StreamId{StreamPurpose::brownian, static_cast<std::uint64_t>(s), 0, 0});
        std::vector<double> v(2000, 0.0);
        for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + g.next();
        sum += estimate_h_regression(TimeSeriesPath::daily(v), RegressionConfig{}).h;
    }
    EXPECT_NEAR(sum / n_paths, 0.5, 0.05);
}

TEST(Regression, FbmH03) {
    const auto engine = FbmEngine::uniform(0.3, 1000, 0.004);
    double sum = 0.0;
    const int n_paths = 20;
    for (int s = 0; s < n_paths; ++s) {
        GaussianStream g(7, StreamId{StreamPurpose::generic, static_cast<std::uint64_t>(s), 0, 0});
        sum += estimate_h_regression(TimeSeriesPath::daily(engine.draw(g).values), RegressionConfig{}).h;
    }
    EXPECT_NEAR(sum / n_paths, 0.3, 0.05);
}

TEST(Regression, Errors) {
    EXPECT_THROW(estimate_h_regression(TimeSeriesPath::daily(std::vector<double>(400, 1.0)), RegressionConfig{}),
                 DegenerateMomentError);
    RegressionConfig c;
    c.max_lag = 30;
    std::vector<double> v(100);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(static_cast<double>(i));
    EXPECT_THROW(estimate_h_regression(TimeSeriesPath::daily(v), c), DataError);
    c = RegressionConfig{};
    c.q_list = {};
    EXPECT_THROW(estimate_h_regression(TimeSeriesPath::daily(v), c), ConfigError);
}
