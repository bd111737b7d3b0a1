#pragma once

// Expected measured Hurst index of an averaged-volatility proxy:
//
//   H_hat = (ln f(T/K) - ln f(T)) / (2 ln K) + H
//
// i.e. the q = 2 log-regression slope using only the first and last lags.
// T is the option expiry in days and K the lag span in days. The function
// f is supplied by the caller and may depend on H.

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "volrough/errors.hpp"
#include "volrough/regression.hpp"
#include "volrough/timeseries.hpp"

namespace volrough {

using FHat = std::function<double(double theta, double h)>;

struct BiasConfig {
    double t_days = 1.0;
    double k_days = 25.0;
    FHat f_hat;
};

inline double theoretical_h_hat(double h, const BiasConfig& cfg) {
    if (!(cfg.t_days > 0.0)) throw ConfigError("expiry must be positive");
    if (!(cfg.k_days > 1.0)) throw ConfigError("lag span K must exceed 1");
    if (!cfg.f_hat) throw ConfigError("f_hat not provided");
    const double f_short = cfg.f_hat(cfg.t_days / cfg.k_days, h);
    const double f_long = cfg.f_hat(cfg.t_days, h);
    if (!(f_short > 0.0) || !(f_long > 0.0))
        throw DomainError("f_hat must be positive at T/K and T");
    return (std::log(f_short) - std::log(f_long)) / (2.0 * std::log(cfg.k_days)) + h;
}

// theta^(2a); shifts the measured index by exactly -a.
inline FHat power_law_f_hat(double a) {
    return [a](double theta, double) { return std::pow(theta, 2.0 * a); };
}

// f tabulated at increasing theta (independent of h), interpolated linearly
// in (ln theta, ln f) and extrapolated flat.
class TabulatedFHat {
public:
    TabulatedFHat(std::vector<double> theta, std::vector<double> f) {
        if (theta.size() != f.size() || theta.size() < 2)
            throw SizeError("f_hat table needs at least 2 (theta, f) pairs");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (!(theta[i] > 0.0) || !(f[i] > 0.0)) throw DomainError("f_hat table entries must be positive", i);
            if (i > 0 && !(theta[i] > theta[i - 1])) throw DataError("f_hat table theta must increase");
            lt_.push_back(std::log(theta[i]));
            lf_.push_back(std::log(f[i]));
        }
    }

    // CSV with header `theta,f`.
    static TabulatedFHat read_csv(std::istream& in) {
        std::string line;
        std::vector<double> th, fv;
        bool header = false;
        while (std::getline(in, line)) {
            auto t = detail::trim(line);
            if (t.empty() || t.front() == '#') continue;
            auto cols = detail::split(line, ',');
            if (!header) {
                if (cols.size() < 2 || cols[0] != "theta" || cols[1] != "f")
                    throw SchemaError("expected header 'theta,f'");
                header = true;
                continue;
            }
            double a = 0.0, b = 0.0;
            if (cols.size() < 2 || !detail::parse_number(cols[0], a) || !detail::parse_number(cols[1], b))
                throw DataError("malformed f_hat row: " + line);
            th.push_back(a);
            fv.push_back(b);
        }
        return TabulatedFHat(std::move(th), std::move(fv));
    }

    double operator()(double theta, double) const {
        const double x = std::log(theta);
        if (x <= lt_.front()) return std::exp(lf_.front());
        if (x >= lt_.back()) return std::exp(lf_.back());
        const auto it = std::upper_bound(lt_.begin(), lt_.end(), x);
        const auto i = static_cast<std::size_t>(it - lt_.begin());
        const double w = (x - lt_[i - 1]) / (lt_[i] - lt_[i - 1]);
        return std::exp(lf_[i - 1] + w * (lf_[i] - lf_[i - 1]));
    }

private:
    std::vector<double> lt_;
    std::vector<double> lf_;
};

struct BiasLine {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// OLS of measured H against model H for one maturity.
inline BiasLine fit_bias_line(std::span<const double> model_h, std::span<const double> measured_h) {
    if (model_h.size() != measured_h.size() || model_h.size() < 2)
        throw SizeError("bias fit needs at least 2 (model, measured) pairs");
    const auto f = detail::ols(model_h, measured_h);
    return BiasLine{f.slope, f.intercept, f.r_squared};
}

}  // namespace volrough
