#include <gtest/gtest.h>

#include <cmath>

#include "volrough/pricing.hpp"

using namespace volrough;

TEST(Black76, Examples) {
    EXPECT_EQ(black76_atm_call(0.0), 0.0);
    EXPECT_NEAR(black76_atm_call(1e4), 1.0, 1e-12);
    EXPECT_NEAR(black76_atm_call(0.04), 2.0 * norm_cdf(0.1) - 1.0, 1e-15);
    EXPECT_NEAR(black76_atm_call(0.04), 0.0796557, 1e-7);
    EXPECT_THROW(black76_atm_call(-1.0), DomainError);
}

TEST(ImpliedVol, Examples) {
    EXPECT_NEAR(implied_vol_from_price(black76_atm_call(0.04), 1.0), 0.2, 1e-14);
    EXPECT_NEAR(implied_vol_from_price(0.5, 1.0), 2.0 * 0.6744897501960817, 1e-12);
    EXPECT_NEAR(implied_vol_from_price(0.5, 1.0), 1.3490, 1e-4);
    EXPECT_LT(implied_vol_from_price(1e-12, 1.0), 1e-11);
    EXPECT_THROW(implied_vol_from_price(0.0, 1.0), InversionError);
    EXPECT_THROW(implied_vol_from_price(1.0, 1.0), InversionError);
}

TEST(ImpliedVol, RoundTripOverTotalVariance) {
    double worst = 0.0;
    for (double lw = std::log(1e-8); lw <= std::log(25.0); lw += 0.05) {
        const double w = std::exp(lw);
        const double vol = implied_vol_from_price(black76_atm_call(w), 1.0);
        worst = std::max(worst, std::fabs(vol * vol - w) / w);
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Quadrature, HandExample) {
    const std::vector<double> v{0.0, 1.0, 2.0};
    EXPECT_DOUBLE_EQ(total_variance(v, 1.0, 1.0, QuadratureRule::right_rectangular), 5.0);
    EXPECT_DOUBLE_EQ(total_variance(v, 1.0, 1.0, QuadratureRule::left_rectangular), 1.0);
    EXPECT_DOUBLE_EQ(total_variance(v, 1.0, 1.0, QuadratureRule::trapezoidal), 3.0);
}

TEST(Quadrature, ConstantExact) {
    const std::vector<double> v(11, 0.3);
    for (auto r : {QuadratureRule::left_rectangular, QuadratureRule::right_rectangular, QuadratureRule::trapezoidal})
        EXPECT_NEAR(total_variance(v, 0.5, 0.001, r), 0.25 * 0.09 * 0.01, 1e-17);
}

TEST(Quadrature, Identities) {
    GaussianStream g(8, StreamId{});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(2 + trial % 9);
        for (auto& x : v) x = std::exp(0.5 * g.next());
        const double s = 0.7, dt = 0.001;
        const double l = total_variance(v, s, dt, QuadratureRule::left_rectangular);
        const double r = total_variance(v, s, dt, QuadratureRule::right_rectangular);
        const double t = total_variance(v, s, dt, QuadratureRule::trapezoidal);
        EXPECT_NEAR(t, 0.5 * (l + r), 1e-14 * t);
        EXPECT_NEAR(t - r, 0.5 * s * s * (v.front() * v.front() - v.back() * v.back()) * dt, 1e-14 * t);
    }
    EXPECT_THROW(total_variance(std::vector<double>{1.0}, 1.0, 1.0, QuadratureRule::trapezoidal), SizeError);
}

TEST(Quadrature, ParseRule) {
    EXPECT_EQ(parse_rule("trap"), QuadratureRule::trapezoidal);
    EXPECT_EQ(parse_rule(to_string(QuadratureRule::left_rectangular)), QuadratureRule::left_rectangular);
    EXPECT_THROW(parse_rule("simpson"), ConfigError);
}

namespace {

struct PricedPath {
    SimGrid grid{0.002, 0.2};
    FbmEngine engine = FbmEngine::uniform(0.1, 100, 0.002);
    RoughExpPath path;
    PricedPath(double eta) {
        GaussianStream g(5, StreamId{StreamPurpose::initial_path, 0, 0, 0});
        path = simulate_rough_exp_vol(RoughExpParams{0.5, eta, 0.1}, engine, g);
    }
};

}  // namespace

TEST(McImpliedVol, EtaZeroGivesSigma) {
    PricedPath s(0.0);
    for (auto rule : {QuadratureRule::left_rectangular, QuadratureRule::trapezoidal}) {
        for (std::size_t m : {4u, 64u}) {
            McConfig mc;
            mc.m_paths = m;
            const auto iv = mc_implied_vol(s.engine, s.path, RoughExpParams{0.5, 0.0, 0.1}, 10, 3, mc, rule, s.grid);
            EXPECT_NEAR(iv.implied_vol, 0.5, 1e-12);
            EXPECT_NEAR(iv.price_se, 0.0, 1e-14);
        }
    }
}

TEST(McImpliedVol, DeterministicAndNearLocalVol) {
    PricedPath s(0.5);
    McConfig mc;
    mc.m_paths = 512;
    const RoughExpParams params{0.5, 0.5, 0.1};
    const auto a = mc_implied_vol(s.engine, s.path, params, 20, 1, mc, QuadratureRule::trapezoidal, s.grid);
    const auto b = mc_implied_vol(s.engine, s.path, params, 20, 1, mc, QuadratureRule::trapezoidal, s.grid);
    EXPECT_EQ(a.implied_vol, b.implied_vol);
    // One-day vol stays within a factor of the current instantaneous level.
    const double v_now = 0.5 * s.path.vol[40];
    EXPECT_GT(a.implied_vol, 0.5 * v_now);
    EXPECT_LT(a.implied_vol, 2.0 * v_now);
    EXPECT_GT(a.price_se, 0.0);
}

TEST(McImpliedVol, ThreadedDaysMatchSerial) {
    PricedPath s(0.5);
    McConfig mc;
    mc.m_paths = 64;
    const ConditionalPricer pricer(s.engine, RoughExpParams{0.5, 0.5, 0.1}, mc, 2, 0);
    const QuadratureRule rules[] = {QuadratureRule::trapezoidal};
    std::vector<double> par(30), ser(30);
#pragma omp parallel for
    for (int d = 0; d < 30; ++d) par[d] = *pricer.value(s.path.normals, s.path.vol[2 * d], d, 2, rules).rules[0].implied_vol;
    for (int d = 0; d < 30; ++d) ser[d] = *pricer.value(s.path.normals, s.path.vol[2 * d], d, 2, rules).rules[0].implied_vol;
    EXPECT_EQ(par, ser);
}

TEST(McImpliedVol, KeptPathsAreAntitheticPairs) {
    PricedPath s(0.5);
    McConfig mc;
    mc.m_paths = 16;
    ConditionalPricer pricer(s.engine, RoughExpParams{0.5, 0.5, 0.1}, mc, 2, 0);
    pricer.keep_paths(4);
    const QuadratureRule rules[] = {QuadratureRule::trapezoidal};
    const auto v = pricer.value(s.path.normals, s.path.vol[10], 5, 3, rules);
    ASSERT_EQ(v.path_variance.size(), 4u);
    EXPECT_NE(v.path_variance[0], v.path_variance[1]);
    double mean = 0.0;
    for (double w : v.path_variance) mean += w;
    EXPECT_GT(mean, 0.0);
}

TEST(McImpliedVol, QmcMode) {
    PricedPath s(0.5);
    McConfig mc;
    mc.m_paths = 256;
    mc.qmc = true;
    const RoughExpParams params{0.5, 0.5, 0.1};
    const auto q = mc_implied_vol(s.engine, s.path, params, 20, 1, mc, QuadratureRule::trapezoidal, s.grid);
    mc.qmc = false;
    mc.m_paths = 8192;
    const auto p = mc_implied_vol(s.engine, s.path, params, 20, 1, mc, QuadratureRule::trapezoidal, s.grid);
    EXPECT_NEAR(q.implied_vol, p.implied_vol, 0.01 * p.implied_vol);
}

TEST(McImpliedVol, Errors) {
    PricedPath s(0.5);
    McConfig mc;
    mc.m_paths = 3;
    EXPECT_THROW(mc.validate(), ConfigError);
    mc.m_paths = 4;
    EXPECT_THROW(mc_implied_vol(s.engine, s.path, RoughExpParams{}, 49, 2, mc, QuadratureRule::trapezoidal, s.grid),
                 SizeError);
    EXPECT_THROW(mc_implied_vol(s.engine, s.path, RoughExpParams{}, 5, 0, mc, QuadratureRule::trapezoidal, s.grid),
                 ConfigError);
}
