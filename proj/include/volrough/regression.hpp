#pragma once

// Log-regression Hurst estimator: m(q, lag) = mean |X(t+lag) - X(t)|^q is
// assumed to scale like lag^(zeta_q) with zeta_q = q H. The caller passes
// the series to difference (usually log volatility).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "volrough/errors.hpp"
#include "volrough/timeseries.hpp"

namespace volrough {

struct RegressionConfig {
    std::vector<double> q_list{0.5, 1.0, 1.5, 2.0, 3.0};
    std::size_t max_lag = 0;       // 0: floor(n / max_lag_div)
    std::size_t max_lag_div = 40;
    std::size_t min_lag = 1;

    std::size_t resolved_max_lag(std::size_t n) const {
        return max_lag != 0 ? max_lag : n / max_lag_div;
    }
};

struct MomentPoint {
    double q;
    std::size_t lag;
    double m;
};

struct RegressionResult {
    double h = 0.0;
    std::vector<double> q_list;
    std::vector<double> zeta;       // per-q log-log slopes
    std::vector<double> r_squared;  // per-q fit quality
    std::size_t max_lag = 0;
    double h_half_lag = 0.0;        // h refitted with max_lag / 2
    std::vector<MomentPoint> moments;
};

inline double moment(std::span<const double> x, double q, std::size_t lag) {
    if (lag == 0 || lag >= x.size())
        throw SizeError("lag " + std::to_string(lag) + " not in [1, " +
                        std::to_string(x.size()) + ")");
    double sum = 0.0;
    const std::size_t count = x.size() - lag;
    for (std::size_t i = 0; i < count; ++i) sum += std::pow(std::fabs(x[i + lag] - x[i]), q);
    return sum / static_cast<double>(count);
}

inline double moment(const TimeSeriesPath& path, double q, std::size_t lag) {
    return moment(std::span<const double>(path.values), q, lag);
}

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit ols(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

// Slope of y = h x through the origin.
inline double ols_origin(std::span<const double> x, std::span<const double> y) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxy / sxx;
}

inline double fit_h(const std::vector<double>& q_list, std::span<const double> x,
                    std::size_t min_lag, std::size_t max_lag, std::vector<double>* zeta,
                    std::vector<double>* r2, std::vector<MomentPoint>* moments) {
    std::vector<double> lx, ly, zetas;
    for (double q : q_list) {
        lx.clear();
        ly.clear();
        for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
            const double m = moment(x, q, lag);
            if (!(m > 0.0)) throw DegenerateMomentError(q, lag);
            if (moments) moments->push_back(MomentPoint{q, lag, m});
            lx.push_back(std::log(static_cast<double>(lag)));
            ly.push_back(std::log(m));
        }
        const auto fit = ols(lx, ly);
        zetas.push_back(fit.slope);
        if (r2) r2->push_back(fit.r_squared);
    }
    if (zeta) *zeta = zetas;
    return ols_origin(q_list, zetas);
}

}  // namespace detail

inline RegressionResult estimate_h_regression(const TimeSeriesPath& path,
                                              const RegressionConfig& cfg = {}) {
    const std::size_t n = path.size();
    if (cfg.q_list.empty()) throw ConfigError("q_list must not be empty");
    for (double q : cfg.q_list)
        if (!(q > 0.0)) throw ConfigError("q values must be positive");
    if (cfg.max_lag == 0 && cfg.max_lag_div == 0) throw ConfigError("max_lag_div must be positive");
    const std::size_t max_lag = cfg.resolved_max_lag(n);
    if (cfg.min_lag < 1 || !(cfg.min_lag < max_lag) || !(max_lag < n))
        throw ConfigError("need 1 <= min_lag < max_lag < n (max_lag = " +
                          std::to_string(max_lag) + ", n = " + std::to_string(n) + ")");
    if (n < 4 * max_lag)
        throw InsufficientDataError("regression needs n >= 4 * max_lag");

    RegressionResult r;
    r.q_list = cfg.q_list;
    r.max_lag = max_lag;
    const std::span<const double> x(path.values);
    r.h = detail::fit_h(cfg.q_list, x, cfg.min_lag, max_lag, &r.zeta, &r.r_squared, &r.moments);
    const std::size_t half = max_lag / 2;
    r.h_half_lag = half > cfg.min_lag
                       ? detail::fit_h(cfg.q_list, x, cfg.min_lag, half, nullptr, nullptr, nullptr)
                       : r.h;
    return r;
}

}  // namespace volrough
