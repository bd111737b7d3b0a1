#include <gtest/gtest.h>

#include <cmath>

#include "volrough/models.hpp"
#include "volrough/pvariation.hpp"

using namespace volrough;

TEST(RoughExp, EtaZeroIsConstant) {
    GaussianStream g(1, StreamId{});
    const auto p = simulate_rough_exp_vol(RoughExpParams{0.5, 0.0, 0.1}, SimGrid{0.004, 0.4}, g);
    ASSERT_EQ(p.vol.size(), 101u);
    for (double v : p.vol) EXPECT_EQ(v, 1.0);
}

TEST(RoughExp, LogVolVarianceAtOne) {
    const RoughExpParams params{0.5, 0.5, 0.5};
    const auto engine = FbmEngine::uniform(0.5, 10, 0.1);
    const int n = 10000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    for (int k = 0; k < n; ++k) {
        GaussianStream g(3, StreamId{StreamPurpose::initial_path, static_cast<std::uint64_t>(k), 0, 0});
        const double x = std::log(simulate_rough_exp_vol(params, engine, g).vol.back());
        s += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    const double var = s2 / n - (s / n) * (s / n);
    const double se = std::sqrt((s4 / n - (s2 / n) * (s2 / n)) / n);
    EXPECT_NEAR(var, 0.25, 3.0 * se);
}

TEST(RoughExp, ParamValidation) {
    EXPECT_THROW((RoughExpParams{0.0, 0.5, 0.1}.validate()), ConfigError);
    EXPECT_THROW((RoughExpParams{0.5, -1.0, 0.1}.validate()), ConfigError);
    EXPECT_THROW((RoughExpParams{0.5, 0.5, 1.0}.validate()), ConfigError);
}

TEST(SimGrid, StepsPerDay) {
    EXPECT_EQ((SimGrid{0.001, 4.0}.steps_per_day()), 4u);
    EXPECT_EQ((SimGrid{0.0004, 4.0}.steps_per_day()), 10u);
    EXPECT_EQ((SimGrid{0.001, 4.0}.days()), 1000u);
    EXPECT_THROW((SimGrid{0.003, 4.0}.steps_per_day()), ConfigError);
}

TEST(Heston, FixedPoint) {
    GaussianStream g(1, StreamId{});
    HestonParams p;
    p.xi = 1e-300;  // validate() requires xi > 0
    const auto path = simulate_heston(p, SimGrid{0.004, 1.0}, g);
    for (double v : path.variance) EXPECT_NEAR(v, p.theta, 1e-15);
}

TEST(Heston, OdeRelaxation) {
    HestonParams p;
    p.xi = 1e-300;
    p.v0 = 0.09;
    for (double dt : {0.004, 0.001}) {
        GaussianStream g(1, StreamId{});
        const auto path = simulate_heston(p, SimGrid{dt, 2.0}, g);
        double worst = 0.0;
        for (std::size_t i = 0; i < path.variance.size(); ++i) {
            const double exact = p.theta + (p.v0 - p.theta) * std::exp(-p.kappa * path.times[i]);
            worst = std::max(worst, std::fabs(path.variance[i] - exact));
        }
        EXPECT_LT(worst, (p.v0 - p.theta) * p.kappa * dt);
    }
}

TEST(Heston, FullTruncationKeepsSpotFinite) {
    HestonParams p{0.01, 0.5, 0.01, 1.0, -0.9};
    EXPECT_FALSE(p.feller());
    GaussianStream g(4, StreamId{StreamPurpose::heston, 0, 0, 0});
    const auto path = simulate_heston(p, SimGrid{0.004, 5.0}, g);
    for (std::size_t i = 0; i < path.spot.size(); ++i) ASSERT_TRUE(std::isfinite(path.spot[i]) && path.spot[i] > 0.0);
    for (double v : path.vol()) EXPECT_GE(v, 0.0);
}

TEST(Heston, DefaultsSatisfyFeller) { EXPECT_TRUE(HestonParams{}.feller()); }

TEST(HestonProxy, Examples) {
    HestonParams p;
    for (double tau : {0.01, 1.0, 10.0}) EXPECT_NEAR(heston_atm_vol_proxy(p, p.theta, tau), 0.2, 1e-15);
    EXPECT_NEAR(heston_atm_vol_proxy(p, 0.09, 1e-8), 0.3, 1e-6);
    const double radicand = 0.04 + 0.05 * (1.0 - std::exp(-1.0 / 12.0)) * 12.0;
    EXPECT_NEAR(heston_atm_vol_proxy(p, 0.09, 1.0 / 12.0), std::sqrt(radicand), 1e-14);
    EXPECT_NEAR(heston_atm_vol_proxy(p, 0.09, 1.0 / 12.0), 0.2965, 2e-4);  // radicand 0.0880
    EXPECT_THROW(heston_atm_vol_proxy(p, 0.09, 0.0), DomainError);
}
