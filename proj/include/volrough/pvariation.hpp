#pragma once

// Normalized p-variation roughness estimator.
//
// A window of L+1 observations is cut into K coarse blocks of L/K fine
// increments. For a variation order p,
//
//   W(p) = sum_k |coarse increment_k|^p / sum_{fine l in k} |increment_l|^p * (block length_k)
//
// and the estimate is H = 1/p where W(p) = T, T being the window's time span.
// With L = K^2 this is the uniform-partition specialization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volrough/errors.hpp"
#include "volrough/timeseries.hpp"

namespace volrough {

struct EstimatorConfig {
    std::size_t k = 70;      // coarse blocks
    std::size_t l = 0;       // fine increments; 0 means k*k
    double p_lo = 1.0;
    double p_hi = 20.0;
    double tol = 1e-8;       // bisection tolerance on p
    double scan_step = 0.25; // sign-change pre-scan spacing

    static EstimatorConfig uniform(std::size_t k) {
        EstimatorConfig c;
        c.k = k;
        c.l = k * k;
        return c;
    }

    std::size_t fine() const noexcept { return l == 0 ? k * k : l; }
    std::size_t block_size() const noexcept { return fine() / k; }
    std::size_t window_points() const noexcept { return fine() + 1; }

    void validate() const {
        if (k < 2) throw ConfigError("K must be at least 2");
        const auto n = fine();
        if (n < k) throw ConfigError("L must be at least K");
        if (n % k != 0) throw ConfigError("L must be a multiple of K");
        if (!(p_lo >= 1.0)) throw ConfigError("p_lo must be >= 1");
        if (!(p_hi > p_lo)) throw ConfigError("p_hi must exceed p_lo");
        if (!(tol > 0.0)) throw ConfigError("root tolerance must be positive");
        if (!(scan_step > 0.0)) throw ConfigError("scan step must be positive");
    }
};

struct HurstEstimate {
    double h = 0.0;
    double p = 0.0;
    std::size_t window_start = 0;
    double w_residual = 0.0;
};

struct WindowFailure {
    std::size_t window_start = 0;
    std::string reason;
};

struct SlidingSummary {
    std::vector<HurstEstimate> estimates;
    std::vector<WindowFailure> failures;
    double mean = 0.0;
    double std = 0.0;  // population
    std::vector<double> hist_edges;
    std::vector<std::size_t> hist_counts;

    std::size_t n_windows() const noexcept { return estimates.size() + failures.size(); }
};

namespace detail {

// log|x| with log(0) = -inf.
inline double log_abs(double x) {
    const double a = std::fabs(x);
    return a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
}

// One estimation window with increments pre-reduced to shifted log
// magnitudes, so that W(p) costs one exp per fine increment.
class PVariationWindow {
public:
    PVariationWindow(std::span<const double> times, std::span<const double> values,
                     const EstimatorConfig& cfg)
        : k_(cfg.k), b_(cfg.block_size()) {
        const std::size_t n = cfg.fine();
        if (values.size() != n + 1 || times.size() != n + 1)
            throw SizeError("window needs exactly L+1 = " + std::to_string(n + 1) +
                            " observations, got " + std::to_string(values.size()));
        span_ = times[n] - times[0];
        coarse_.resize(k_);
        length_.resize(k_);
        fine_.resize(n);
        for (std::size_t blk = 0; blk < k_; ++blk) {
            const std::size_t a = blk * b_;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < b_; ++j) {
                const double lf = log_abs(values[a + j + 1] - values[a + j]);
                fine_[a + j] = lf;
                mx = std::max(mx, lf);
            }
            if (mx == -std::numeric_limits<double>::infinity()) throw DegenerateBlockError(blk);
            for (std::size_t j = 0; j < b_; ++j) fine_[a + j] -= mx;
            coarse_[blk] = log_abs(values[a + b_] - values[a]) - mx;
            length_[blk] = times[a + b_] - times[a];
        }
    }

    double span() const noexcept { return span_; }

    double term(std::size_t blk, double p) const {
        const std::size_t a = blk * b_;
        double denom = 0.0;
        for (std::size_t j = 0; j < b_; ++j) denom += std::exp(p * fine_[a + j]);
        return std::exp(p * coarse_[blk]) / denom * length_[blk];
    }

    double w(double p) const {
        double total = 0.0;
        for (std::size_t blk = 0; blk < k_; ++blk) total += term(blk, p);
        return total;
    }

    std::vector<double> terms(double p) const {
        std::vector<double> out(k_);
        for (std::size_t blk = 0; blk < k_; ++blk) out[blk] = term(blk, p);
        return out;
    }

private:
    std::size_t k_;
    std::size_t b_;
    double span_ = 0.0;
    std::vector<double> coarse_;
    std::vector<double> length_;
    std::vector<double> fine_;
};

inline PVariationWindow make_window(const TimeSeriesPath& path, const EstimatorConfig& cfg,
                                    std::size_t start) {
    const std::size_t n = cfg.window_points();
    if (start + n > path.size())
        throw SizeError("window at " + std::to_string(start) + " needs " + std::to_string(n) +
                        " observations, path has " + std::to_string(path.size()));
    return PVariationWindow(std::span(path.times).subspan(start, n),
                            std::span(path.values).subspan(start, n), cfg);
}

// Pre-scan for the first sign change of W(p) - T, then bisect.
inline HurstEstimate solve_window(const PVariationWindow& win, const EstimatorConfig& cfg,
                                  std::size_t start) {
    const double target = win.span();
    auto f = [&](double p) { return win.w(p) - target; };

    const double f_lo = f(cfg.p_lo);
    if (f_lo >= 0.0) {
        // W(1) <= T by the triangle inequality, so a positive value here is
        // rounding when p_lo = 1 and a genuine miss otherwise.
        if (f_lo <= 1e-10 * target)
            return HurstEstimate{1.0 / cfg.p_lo, cfg.p_lo, start, std::fabs(f_lo)};
        throw NoRootError(cfg.p_lo, f_lo + target, cfg.p_hi, f(cfg.p_hi) + target, target);
    }

    double lo = cfg.p_lo;
    double hi = lo;
    bool found = false;
    while (hi < cfg.p_hi) {
        const double next = std::min(hi + cfg.scan_step, cfg.p_hi);
        if (f(next) >= 0.0) {
            hi = next;
            found = true;
            break;
        }
        lo = next;
        hi = next;
    }
    if (!found) throw NoRootError(cfg.p_lo, f_lo + target, cfg.p_hi, f(cfg.p_hi) + target, target);

    while (hi - lo > cfg.tol) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    const double p = 0.5 * (lo + hi);
    return HurstEstimate{1.0 / p, p, start, std::fabs(f(p))};
}

}  // namespace detail

// W(L, K, p, T, X) for the window [start, start + L].
inline double w_statistic(const TimeSeriesPath& path, const EstimatorConfig& cfg, double p,
                          std::size_t start = 0) {
    cfg.validate();
    if (!(p >= 1.0)) throw ConfigError("variation order p must be >= 1");
    return detail::make_window(path, cfg, start).w(p);
}

// Per-block contributions to W; their sum is w_statistic.
inline std::vector<double> w_terms(const TimeSeriesPath& path, const EstimatorConfig& cfg,
                                   double p, std::size_t start = 0) {
    cfg.validate();
    return detail::make_window(path, cfg, start).terms(p);
}

inline HurstEstimate estimate_h(const TimeSeriesPath& path, const EstimatorConfig& cfg,
                                std::size_t window_start = 0) {
    cfg.validate();
    return detail::solve_window(detail::make_window(path, cfg, window_start), cfg, window_start);
}

inline void compute_moments(SlidingSummary& s) {
    const auto n = s.estimates.size();
    if (n == 0) {
        s.mean = s.std = 0.0;
        return;
    }
    double sum = 0.0;
    for (const auto& e : s.estimates) sum += e.h;
    s.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& e : s.estimates) ss += (e.h - s.mean) * (e.h - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(n));
}

// Equal-width bins spanning [min h, max h].
inline void compute_histogram(SlidingSummary& s, std::size_t bins) {
    s.hist_edges.clear();
    s.hist_counts.clear();
    if (s.estimates.empty() || bins == 0) return;
    double lo = s.estimates.front().h, hi = lo;
    for (const auto& e : s.estimates) {
        lo = std::min(lo, e.h);
        hi = std::max(hi, e.h);
    }
    if (hi == lo) {
        lo -= 0.005;
        hi += 0.005;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    s.hist_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) s.hist_edges[i] = lo + width * static_cast<double>(i);
    s.hist_edges.back() = hi;
    s.hist_counts.assign(bins, 0);
    for (const auto& e : s.estimates) {
        auto idx = static_cast<std::size_t>((e.h - lo) / width);
        s.hist_counts[std::min(idx, bins - 1)] += 1;
    }
}

struct SlidingOptions {
    std::size_t stride = 1;
    std::size_t max_windows = 0;  // 0: all full windows
    std::size_t bins = 20;
};

// Estimates at window_start = 0, stride, 2*stride, ... Windows that fail
// numerically are recorded and left out of the moments.
inline SlidingSummary sliding_estimate(const TimeSeriesPath& path, const EstimatorConfig& cfg,
                                       const SlidingOptions& opt = {}) {
    cfg.validate();
    if (opt.stride == 0) throw ConfigError("stride must be >= 1");
    const std::size_t need = cfg.window_points();
    if (path.size() < need)
        throw InsufficientDataError("path has " + std::to_string(path.size()) +
                                    " observations, a window needs " + std::to_string(need));
    std::size_t count = (path.size() - need) / opt.stride + 1;
    if (opt.max_windows > 0) count = std::min(count, opt.max_windows);

    std::vector<std::optional<HurstEstimate>> results(count);
    std::vector<std::string> reasons(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t w = 0; w < static_cast<std::ptrdiff_t>(count); ++w) {
        const std::size_t start = static_cast<std::size_t>(w) * opt.stride;
        try {
            results[w] = detail::solve_window(detail::make_window(path, cfg, start), cfg, start);
        } catch (const NumericalError& e) {
            reasons[w] = e.what();
        }
    }

    SlidingSummary s;
    for (std::size_t w = 0; w < count; ++w) {
        if (results[w])
            s.estimates.push_back(*results[w]);
        else
            s.failures.push_back(WindowFailure{w * opt.stride, reasons[w]});
    }
    if (s.estimates.empty())
        throw EmptySummaryError("all " + std::to_string(count) + " windows failed: " +
                                (s.failures.empty() ? std::string{} : s.failures.front().reason));
    compute_moments(s);
    compute_histogram(s, opt.bins);
    return s;
}

}  // namespace volrough
