#pragma once

// Exact fractional Brownian motion on a fixed grid through the Cholesky
// factor of its covariance. Draws keep their whitened normals so that a
// path can be continued conditionally on its own past:
//
//   W(t_j) = sum_{p <= i} l_{jp} X0_p + sum_{i < p <= j} l_{jp} X_p
//
// with X0 the initial path's normals and X fresh normals.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "volrough/errors.hpp"
#include "volrough/random.hpp"

namespace volrough {

inline double fbm_covariance(double h, double s, double t) {
    const double two_h = 2.0 * h;
    return 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) - std::pow(std::fabs(t - s), two_h));
}

struct FbmDraw {
    std::vector<double> values;   // W(0) = 0, W(t_1), ..., W(t_N)
    std::vector<double> normals;  // whitened coordinates, one per grid point
};

class FbmEngine {
public:
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    FbmEngine(double h, std::vector<double> grid) : h_(h), grid_(std::move(grid)) {
        if (!(h > 0.0 && h < 1.0)) throw ConfigError("Hurst index must lie in (0, 1)");
        if (grid_.empty()) throw ConfigError("fBm grid is empty");
        if (!(grid_.front() > 0.0)) throw ConfigError("fBm grid must start after t = 0");
        for (std::size_t i = 1; i < grid_.size(); ++i)
            if (!(grid_[i] > grid_[i - 1])) throw ConfigError("fBm grid must be strictly increasing");
        factorize();
    }

    // t_p = p * dt for p = 1..n.
    static FbmEngine uniform(double h, std::size_t n, double dt) {
        std::vector<double> g(n);
        for (std::size_t p = 0; p < n; ++p) g[p] = static_cast<double>(p + 1) * dt;
        return FbmEngine(h, std::move(g));
    }

    double hurst() const noexcept { return h_; }
    std::size_t size() const noexcept { return grid_.size(); }
    const std::vector<double>& grid() const noexcept { return grid_; }
    const RowMatrix& factor() const noexcept { return chol_; }
    bool jittered() const noexcept { return jittered_; }

    double covariance(std::size_t i, std::size_t j) const {
        return fbm_covariance(h_, grid_[i], grid_[j]);
    }

    // W = L Z for given normals (no leading zero).
    std::vector<double> apply(std::span<const double> normals) const {
        if (normals.size() != size()) throw SizeError("need one normal per grid point");
        Eigen::Map<const Eigen::VectorXd> z(normals.data(), static_cast<Eigen::Index>(normals.size()));
        Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>() * z;
        return {w.data(), w.data() + w.size()};
    }

    FbmDraw draw(GaussianStream& stream) const {
        FbmDraw d;
        d.normals.resize(size());
        stream.fill(d.normals);
        auto w = apply(d.normals);
        d.values.reserve(size() + 1);
        d.values.push_back(0.0);
        d.values.insert(d.values.end(), w.begin(), w.end());
        return d;
    }

    // Normals X with L X = W, for W given at t_1..t_N.
    std::vector<double> whiten(std::span<const double> values) const {
        if (values.size() != size()) throw SizeError("need one value per grid point");
        Eigen::Map<const Eigen::VectorXd> w(values.data(), static_cast<Eigen::Index>(values.size()));
        Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>().solve(w);
        return {x.data(), x.data() + x.size()};
    }

    // E[W(t_r) | X0_1..X0_i] for r = i+1..horizon, i = known.size().
    std::vector<double> conditional_mean(std::span<const double> known, std::size_t horizon) const {
        const std::size_t i = known.size();
        check_continuation(i, horizon);
        std::vector<double> mean(horizon - i, 0.0);
        if (i == 0) return mean;
        Eigen::Map<const Eigen::VectorXd> x0(known.data(), static_cast<Eigen::Index>(i));
        for (std::size_t r = i; r < horizon; ++r)
            mean[r - i] = chol_.row(static_cast<Eigen::Index>(r)).head(static_cast<Eigen::Index>(i)).dot(x0);
        return mean;
    }

    // Continuation W(t_{i+1}), ..., W(t_horizon) given the first i normals
    // of a path and fresh normals drawn from `stream`.
    std::vector<double> continue_path(std::span<const double> known, GaussianStream& stream,
                                      std::size_t horizon) const {
        const std::size_t i = known.size();
        auto out = conditional_mean(known, horizon);
        std::vector<double> fresh(horizon - i);
        stream.fill(fresh);
        add_fresh(i, fresh, out);
        return out;
    }

    // out[r - i] += sum_{c = i}^{r} L(r, c) fresh[c - i].
    void add_fresh(std::size_t i, std::span<const double> fresh, std::span<double> out) const {
        for (std::size_t r = 0; r < fresh.size(); ++r) {
            const double* row = chol_.row(static_cast<Eigen::Index>(i + r)).data() + i;
            double acc = 0.0;
            for (std::size_t c = 0; c <= r; ++c) acc += row[c] * fresh[c];
            out[r] += acc;
        }
    }

private:
    void check_continuation(std::size_t i, std::size_t horizon) const {
        if (horizon > size()) throw SizeError("continuation horizon beyond the grid");
        if (horizon <= i) throw SizeError("empty continuation: horizon must exceed known points");
    }

    Eigen::MatrixXd covariance_matrix() const {
        const auto n = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd c(n, n);
        const double two_h = 2.0 * h_;
        std::vector<double> pw(size());
        for (std::size_t i = 0; i < size(); ++i) pw[i] = std::pow(grid_[i], two_h);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = j; i < n; ++i)
                c(i, j) = 0.5 * (pw[i] + pw[j] - std::pow(grid_[i] - grid_[j], two_h));
        return c;
    }

    void factorize() {
        Eigen::MatrixXd c = covariance_matrix();
        {
            Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(c);
            if (llt.info() == Eigen::Success) {
                chol_ = c.triangularView<Eigen::Lower>();
                return;
            }
        }
        c = covariance_matrix();
        const double jitter = 1e-12 * std::pow(grid_.back(), 2.0 * h_);
        c.diagonal().array() += jitter;
        Eigen::MatrixXd keep = c;
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>, Eigen::Lower> llt(c);
        if (llt.info() == Eigen::Success) {
            jittered_ = true;
            chol_ = c.triangularView<Eigen::Lower>();
            return;
        }
        throw FactorizationError(failing_pivot(keep));
    }

    // Unblocked Cholesky, used only to locate the failing pivot.
    static std::size_t failing_pivot(Eigen::MatrixXd a) {
        const auto n = a.rows();
        for (Eigen::Index k = 0; k < n; ++k) {
            double d = a(k, k) - a.row(k).head(k).squaredNorm();
            if (!(d > 0.0)) return static_cast<std::size_t>(k);
            d = std::sqrt(d);
            a(k, k) = d;
            for (Eigen::Index i = k + 1; i < n; ++i)
                a(i, k) = (a(i, k) - a.row(i).head(k).dot(a.row(k).head(k))) / d;
        }
        return static_cast<std::size_t>(n);
    }

    double h_;
    std::vector<double> grid_;
    RowMatrix chol_;
    bool jittered_ = false;
};

inline FbmEngine build_engine(double h, std::vector<double> grid) { return FbmEngine(h, std::move(grid)); }

inline FbmDraw draw_path(const FbmEngine& engine, GaussianStream& stream) { return engine.draw(stream); }

inline std::vector<double> continue_path(const FbmEngine& engine, std::span<const double> known,
                                         GaussianStream& stream, std::size_t horizon) {
    return engine.continue_path(known, stream, horizon);
}

}  // namespace volrough
