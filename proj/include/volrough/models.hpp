#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "volrough/errors.hpp"
#include "volrough/fbm.hpp"
#include "volrough/random.hpp"
#include "volrough/timeseries.hpp"

namespace volrough {

// dF/F = sigma v dW_F,  d ln v = eta dW^H,  v(0) = 1.
struct RoughExpParams {
    double sigma = 0.5;
    double eta = 0.5;
    double h = 0.1;

    void validate() const {
        if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
        if (!(eta >= 0.0)) throw ConfigError("eta must be non-negative");
        if (!(h > 0.0 && h < 1.0)) throw ConfigError("model h must lie in (0, 1)");
    }
};

// dv = kappa (theta - v) dt + xi sqrt(v) dW_v,  d ln S = -v/2 dt + sqrt(v) dW_S,
// d<W_v, W_S> = rho dt.
struct HestonParams {
    double v0 = 0.04;
    double kappa = 1.0;
    double theta = 0.04;
    double xi = 0.25;
    double rho = -0.7;

    bool feller() const noexcept { return 2.0 * kappa * theta >= xi * xi; }

    void validate() const {
        if (!(v0 > 0.0 && kappa > 0.0 && theta > 0.0 && xi > 0.0))
            throw ConfigError("Heston v0, kappa, theta, xi must be positive");
        if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("rho must lie in [-1, 1]");
    }
};

struct SimGrid {
    double dt = 0.001;
    double horizon = 4.0;

    std::size_t steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }

    // Fine steps per business day; dt must divide 0.004.
    std::size_t steps_per_day() const {
        const double r = kBusinessDay / dt;
        const double n = std::round(r);
        if (n < 1.0 || std::fabs(r - n) > 1e-9 * n)
            throw ConfigError("dt must divide one business day (0.004)");
        return static_cast<std::size_t>(n);
    }

    std::size_t days() const { return steps() / steps_per_day(); }

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
        if (steps() == 0) throw ConfigError("grid has no steps");
    }
};

struct RoughExpPath {
    std::vector<double> times;    // 0, dt, ..., N dt
    std::vector<double> vol;      // v(t_p), v(0) = 1
    std::vector<double> normals;  // whitened normals of W^H on t_1..t_N
};

// Builds v = exp(eta W^H) from an fBm draw on the engine's grid.
inline RoughExpPath rough_exp_from_draw(const RoughExpParams& params, const FbmEngine& engine,
                                        FbmDraw draw) {
    RoughExpPath out;
    out.times.reserve(engine.size() + 1);
    out.times.push_back(0.0);
    out.times.insert(out.times.end(), engine.grid().begin(), engine.grid().end());
    out.vol.resize(draw.values.size());
    for (std::size_t p = 0; p < draw.values.size(); ++p)
        out.vol[p] = std::exp(params.eta * draw.values[p]);
    out.normals = std::move(draw.normals);
    return out;
}

inline RoughExpPath simulate_rough_exp_vol(const RoughExpParams& params, const FbmEngine& engine,
                                           GaussianStream& stream) {
    params.validate();
    return rough_exp_from_draw(params, engine, engine.draw(stream));
}

inline RoughExpPath simulate_rough_exp_vol(const RoughExpParams& params, const SimGrid& grid,
                                           GaussianStream& stream) {
    params.validate();
    grid.validate();
    const auto engine = FbmEngine::uniform(params.h, grid.steps(), grid.dt);
    return simulate_rough_exp_vol(params, engine, stream);
}

struct HestonPath {
    std::vector<double> times;
    std::vector<double> variance;  // pre-truncation Euler state, may dip below 0
    std::vector<double> spot;      // forward-normalized, S(0) = 1

    // sqrt(max(v, 0)) at every grid point.
    std::vector<double> vol() const {
        std::vector<double> out(variance.size());
        for (std::size_t i = 0; i < variance.size(); ++i) out[i] = std::sqrt(std::max(variance[i], 0.0));
        return out;
    }
};

// Full-truncation Euler.
inline HestonPath simulate_heston(const HestonParams& params, const SimGrid& grid,
                                  GaussianStream& stream) {
    params.validate();
    grid.validate();
    const std::size_t n = grid.steps();
    const double dt = grid.dt;
    const double sdt = std::sqrt(dt);
    const double rho_c = std::sqrt(1.0 - params.rho * params.rho);
    HestonPath out;
    out.times.resize(n + 1);
    out.variance.resize(n + 1);
    out.spot.resize(n + 1);
    out.times[0] = 0.0;
    out.variance[0] = params.v0;
    out.spot[0] = 1.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double zv = stream.next();
        const double zs = params.rho * zv + rho_c * stream.next();
        const double vp = std::max(out.variance[p], 0.0);
        out.variance[p + 1] =
            out.variance[p] + params.kappa * (params.theta - vp) * dt + params.xi * std::sqrt(vp) * sdt * zv;
        out.spot[p + 1] = out.spot[p] * std::exp(-0.5 * vp * dt + std::sqrt(vp) * sdt * zs);
        out.times[p + 1] = static_cast<double>(p + 1) * dt;
    }
    return out;
}

// sqrt of the expected average variance over [0, tau] given v(0) = v.
// A proxy for the ATM implied volatility, not the exact Heston value.
inline double heston_atm_vol_proxy(const HestonParams& params, double v, double tau) {
    if (!(tau > 0.0)) throw DomainError("maturity must be positive");
    const double x = params.kappa * tau;
    // (1 - e^{-x}) / x, stable for small x
    const double factor = x < 1e-8 ? 1.0 - 0.5 * x : -std::expm1(-x) / x;
    const double radicand = params.theta + (v - params.theta) * factor;
    if (radicand < 0.0) throw DomainError("negative expected variance");
    return std::sqrt(radicand);
}

}  // namespace volrough
