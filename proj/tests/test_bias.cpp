#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "volrough/bias.hpp"

using namespace volrough;

TEST(Bias, ConstantFHatNoBias) {
    const BiasConfig cfg{10.0, 25.0, [](double, double) { return 3.0; }};
    for (double h : {0.05, 0.2}) EXPECT_NEAR(theoretical_h_hat(h, cfg), h, 1e-15);
}

TEST(Bias, PowerLawShift) {
    for (double a : {-0.2, 0.1, 0.35})
        for (double t : {1.0, 10.0, 20.0})
            EXPECT_NEAR(theoretical_h_hat(0.1, BiasConfig{t, 25.0, power_law_f_hat(a)}), 0.1 - a, 1e-14);
}

TEST(Bias, AdditiveInH) {
    const BiasConfig cfg{10.0, 25.0, [](double th, double) { return 1.0 + std::sqrt(th); }};
    const double d = 0.037;
    EXPECT_NEAR(theoretical_h_hat(0.1 + d, cfg) - theoretical_h_hat(0.1, cfg), d, 1e-15);
}

TEST(Bias, Errors) {
    EXPECT_THROW(theoretical_h_hat(0.1, BiasConfig{1.0, 25.0, [](double, double) { return -1.0; }}), DomainError);
    EXPECT_THROW(theoretical_h_hat(0.1, BiasConfig{0.0, 25.0, power_law_f_hat(0.1)}), ConfigError);
    EXPECT_THROW(theoretical_h_hat(0.1, BiasConfig{1.0, 1.0, power_law_f_hat(0.1)}), ConfigError);
    EXPECT_THROW(theoretical_h_hat(0.1, BiasConfig{1.0, 25.0, {}}), ConfigError);
}

TEST(TabulatedFHat, InterpolatesInLogLog) {
    // f = theta^0.4 sampled on a grid is reproduced exactly between nodes.
    std::vector<double> th, f;
    for (double x = 0.01; x < 100.0; x *= 3.0) {
        th.push_back(x);
        f.push_back(std::pow(x, 0.4));
    }
    const TabulatedFHat tab(th, f);
    EXPECT_NEAR(tab(0.5, 0.1), std::pow(0.5, 0.4), 1e-12);
    EXPECT_NEAR(theoretical_h_hat(0.1, BiasConfig{10.0, 25.0, tab}), 0.1 - 0.2, 1e-12);
    EXPECT_NEAR(tab(1e-6, 0.1), f.front(), 1e-15);
    EXPECT_NEAR(tab(1e6, 0.1), f.back(), 1e-12);
}

TEST(TabulatedFHat, ReadCsv) {
    std::istringstream in("# comment\ntheta,f\n0.04,1.5\n1,2\n20,4\n");
    const auto tab = TabulatedFHat::read_csv(in);
    EXPECT_NEAR(tab(1.0, 0.0), 2.0, 1e-14);
    std::istringstream bad("theta,f\n1,2\n0.5,3\n");
    EXPECT_THROW(TabulatedFHat::read_csv(bad), DataError);
}

TEST(BiasLine, Fit) {
    const std::vector<double> x{0.05, 0.1, 0.2, 0.3}, y{0.2, 0.22, 0.26, 0.30};
    const auto l = fit_bias_line(x, y);
    EXPECT_NEAR(l.slope, 0.4, 1e-12);
    EXPECT_NEAR(l.intercept, 0.18, 1e-12);
    EXPECT_NEAR(l.r_squared, 1.0, 1e-12);
}
