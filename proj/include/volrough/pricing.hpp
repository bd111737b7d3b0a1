#pragma once

// Black-76 at the money, total-variance quadratures and the Monte-Carlo ATM
// price of the rough exponential model conditional on an initial path:
//
//   C = 1/M sum_m C_BS(1, 1, tau, wbar_m),   wbar = int sigma^2 v^2 ds.
//
// W_F is independent of the volatility driver, so the conditional option
// price is the variance-mixed Black-76 price and no spot path is needed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "volrough/errors.hpp"
#include "volrough/fbm.hpp"
#include "volrough/models.hpp"
#include "volrough/random.hpp"
#include "volrough/timeseries.hpp"

namespace volrough {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// 2 Phi(sqrt(w) / 2) - 1, the forward-normalized ATM call with F = K = 1.
inline double black76_atm_call(double total_variance) {
    if (!(total_variance >= 0.0)) throw DomainError("total variance must be non-negative");
    return std::erf(std::sqrt(total_variance) / (2.0 * std::numbers::sqrt2));
}

// Closed-form inverse: w = (2 Phi^-1((C + 1) / 2))^2, vol = sqrt(w / tau).
inline double implied_vol_from_price(double price, double tau) {
    if (!(price > 0.0 && price < 1.0)) throw InversionError(price, 0.0);
    if (!(tau > 0.0)) throw DomainError("maturity must be positive");
    const double half_sqrt_w = inverse_normal_cdf(0.5 * (price + 1.0));
    return 2.0 * half_sqrt_w / std::sqrt(tau);
}

enum class QuadratureRule { left_rectangular, right_rectangular, trapezoidal };

inline std::string_view to_string(QuadratureRule r) {
    switch (r) {
        case QuadratureRule::left_rectangular: return "left";
        case QuadratureRule::right_rectangular: return "right";
        case QuadratureRule::trapezoidal: return "trapezoidal";
    }
    return "?";
}

inline QuadratureRule parse_rule(std::string_view s) {
    if (s == "left" || s == "left_rectangular") return QuadratureRule::left_rectangular;
    if (s == "right" || s == "right_rectangular") return QuadratureRule::right_rectangular;
    if (s == "trapezoidal" || s == "trap") return QuadratureRule::trapezoidal;
    throw ConfigError("unknown quadrature rule '" + std::string(s) + "'");
}

// sigma^2 int v^2 over a uniform segment v(t_i), ..., v(t_{i+k}).
inline double total_variance(std::span<const double> v, double sigma, double dt, QuadratureRule rule) {
    if (v.size() < 2) throw SizeError("segment needs at least 2 points");
    const std::size_t k = v.size() - 1;
    double interior = 0.0;
    for (std::size_t p = 1; p < k; ++p) interior += v[p] * v[p];
    double sum = 0.0;
    switch (rule) {
        case QuadratureRule::right_rectangular: sum = interior + v[k] * v[k]; break;
        case QuadratureRule::left_rectangular: sum = v[0] * v[0] + interior; break;
        case QuadratureRule::trapezoidal: sum = 0.5 * v[0] * v[0] + interior + 0.5 * v[k] * v[k]; break;
    }
    return sigma * sigma * sum * dt;
}

struct McConfig {
    std::size_t m_paths = 8192;
    bool antithetic = true;
    std::uint64_t seed = 20240101;
    bool qmc = false;

    void validate() const {
        if (m_paths < 2) throw ConfigError("need at least 2 Monte-Carlo paths");
        if (antithetic && m_paths % 2 != 0) throw ConfigError("antithetic sampling needs an even path count");
    }
    std::size_t draws() const noexcept { return antithetic ? m_paths / 2 : m_paths; }
};

struct ImpliedVolPoint {
    std::size_t day = 0;
    std::size_t maturity_days = 0;
    double implied_vol = 0.0;
    double price_se = 0.0;
};

struct RuleValuation {
    QuadratureRule rule = QuadratureRule::trapezoidal;
    double price = 0.0;
    double price_se = 0.0;
    std::optional<double> implied_vol;  // empty when the price cannot be inverted
    double mean_total_variance = 0.0;
};

struct DayValuation {
    std::size_t day = 0;
    std::size_t maturity_days = 0;
    double tau = 0.0;
    std::vector<RuleValuation> rules;
    // Total variance under rules[0] of the first kept Monte-Carlo paths,
    // in draw order (antithetic partners adjacent).
    std::vector<double> path_variance;
};

// Monte-Carlo valuation of ATM options at business days of one initial
// path. Thread-safe: value() only reads shared state.
class ConditionalPricer {
public:
    ConditionalPricer(const FbmEngine& engine, const RoughExpParams& params, const McConfig& mc,
                      std::size_t steps_per_day, std::uint64_t initial_index = 0)
        : engine_(&engine), params_(params), mc_(mc), spd_(steps_per_day), initial_(initial_index) {
        params_.validate();
        mc_.validate();
        if (spd_ == 0) throw ConfigError("steps per day must be positive");
        const auto& g = engine.grid();
        dt_ = g.front();
        if (g.size() > 1 && std::fabs((g[1] - g[0]) - dt_) > 1e-12 * dt_)
            throw ConfigError("pricer needs a uniform grid starting at dt");
    }

    double dt() const noexcept { return dt_; }

    // Number of individual path total variances reported per day.
    void keep_paths(std::size_t n) noexcept { keep_ = n; }

    // Values maturity k_days options at business day `day`, given the
    // initial path's whitened normals and its volatility v(t_day).
    DayValuation value(std::span<const double> initial_normals, double v_now, std::size_t day,
                       std::size_t k_days, std::span<const QuadratureRule> rules) const {
        if (k_days == 0) throw ConfigError("maturity must be at least one day");
        const std::size_t start = day * spd_;
        const std::size_t kf = k_days * spd_;
        if (start + kf > engine_->size())
            throw SizeError("day " + std::to_string(day) + " + maturity beyond the simulation grid");
        if (initial_normals.size() < start) throw SizeError("initial normals too short");

        const auto mean = engine_->conditional_mean(initial_normals.first(start), start + kf);
        std::optional<ScrambledSobol> sobol;
        if (mc_.qmc)
            sobol.emplace(kf, GaussianStream::sequence_key(
                                  mc_.seed, StreamId{StreamPurpose::sub_path, initial_, day, 0}));

        const std::size_t n_rules = rules.size();
        // Welford running mean / sum of squared deviations of the draw prices.
        std::vector<double> mean_p(n_rules, 0.0), m2(n_rules, 0.0), w_sum(n_rules, 0.0);
        std::vector<double> z(kf), y(kf), seg(kf + 1), draw_price(n_rules);
        seg[0] = v_now;
        const double eta = params_.eta;
        const double sigma = params_.sigma;
        const std::size_t draws = mc_.draws();
        const int signs = mc_.antithetic ? 2 : 1;
        std::vector<double> kept;
        kept.reserve(std::min(keep_, mc_.m_paths));

        for (std::size_t d = 0; d < draws; ++d) {
            if (sobol) {
                GaussianStream s(*sobol, d);
                s.fill(z);
            } else {
                GaussianStream s(mc_.seed, StreamId{StreamPurpose::sub_path, initial_, day, d});
                s.fill(z);
            }
            std::fill(y.begin(), y.end(), 0.0);
            engine_->add_fresh(start, z, y);
            std::fill(draw_price.begin(), draw_price.end(), 0.0);
            for (int s = 0; s < signs; ++s) {
                const double sign = s == 0 ? 1.0 : -1.0;
                for (std::size_t j = 0; j < kf; ++j) seg[j + 1] = std::exp(eta * (mean[j] + sign * y[j]));
                for (std::size_t r = 0; r < n_rules; ++r) {
                    const double w = total_variance(seg, sigma, dt_, rules[r]);
                    w_sum[r] += w;
                    draw_price[r] += black76_atm_call(w);
                    if (r == 0 && kept.size() < keep_) kept.push_back(w);
                }
            }
            for (std::size_t r = 0; r < n_rules; ++r) {
                const double p = draw_price[r] / signs;
                const double delta = p - mean_p[r];
                mean_p[r] += delta / static_cast<double>(d + 1);
                m2[r] += delta * (p - mean_p[r]);
            }
        }

        DayValuation out;
        out.day = day;
        out.maturity_days = k_days;
        out.tau = static_cast<double>(k_days) * kBusinessDay;
        const auto n = static_cast<double>(draws);
        for (std::size_t r = 0; r < n_rules; ++r) {
            RuleValuation rv;
            rv.rule = rules[r];
            rv.price = mean_p[r];
            rv.price_se = draws > 1 ? std::sqrt(m2[r] / (n - 1.0) / n) : std::numeric_limits<double>::quiet_NaN();
            rv.mean_total_variance = w_sum[r] / static_cast<double>(mc_.m_paths);
            if (rv.price > 0.0 && rv.price < 1.0) rv.implied_vol = implied_vol_from_price(rv.price, out.tau);
            out.rules.push_back(rv);
        }
        out.path_variance = std::move(kept);
        return out;
    }

private:
    const FbmEngine* engine_;
    RoughExpParams params_;
    McConfig mc_;
    std::size_t spd_;
    std::uint64_t initial_;
    double dt_ = 0.0;
    std::size_t keep_ = 0;
};

// Implied volatility at `day` for maturity k_days under one quadrature rule.
inline ImpliedVolPoint mc_implied_vol(const FbmEngine& engine, const RoughExpPath& initial,
                                      const RoughExpParams& params, std::size_t day,
                                      std::size_t k_days, const McConfig& mc, QuadratureRule rule,
                                      const SimGrid& grid) {
    const std::size_t spd = grid.steps_per_day();
    ConditionalPricer pricer(engine, params, mc, spd);
    const QuadratureRule rules[] = {rule};
    const auto v = pricer.value(initial.normals, initial.vol.at(day * spd), day, k_days, rules);
    const auto& rv = v.rules.front();
    if (!rv.implied_vol) throw InversionError(rv.price, rv.price_se);
    return ImpliedVolPoint{day, k_days, *rv.implied_vol, rv.price_se};
}

// `day,t,tau_days,implied_vol,price_se`
inline void write_implied_vol_csv(std::ostream& os, std::span<const ImpliedVolPoint> points) {
    os << "day,t,tau_days,implied_vol,price_se\n";
    for (const auto& p : points)
        os << p.day << ',' << detail::format_g17(static_cast<double>(p.day) * kBusinessDay) << ','
           << p.maturity_days << ',' << detail::format_g17(p.implied_vol) << ','
           << detail::format_g17(p.price_se) << '\n';
}

}  // namespace volrough
