#pragma once

// Deterministic Gaussian streams keyed by (seed, stream id), in either a
// counter-seeded pseudorandom mode or a scrambled Sobol mode.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "volrough/detail/sobol_directions.hpp"
#include "volrough/errors.hpp"

namespace volrough {

// Wichura's AS241 (PPND16), relative accuracy about 1e-16.
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -HUGE_VAL;
        if (p == 1.0) return HUGE_VAL;
        throw DomainError("inverse_normal_cdf argument outside [0, 1]");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t s = a ^ (b * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return splitmix64(s);
}

// What a stream's variates are used for; part of the stream identity.
enum class StreamPurpose : std::uint32_t {
    initial_path = 1,
    sub_path = 2,
    heston = 3,
    brownian = 4,
    generic = 5,
};

struct StreamId {
    StreamPurpose purpose = StreamPurpose::generic;
    std::uint64_t a = 0;  // e.g. initial path index
    std::uint64_t b = 0;  // e.g. valuation day
    std::uint64_t c = 0;  // e.g. sub-path index; Sobol point index in qmc mode
};

enum class StreamMode { pseudorandom, sobol };

// Owen-style linear matrix scramble plus digital shift of a Sobol sequence.
// The sequence is identified by (seed, purpose, a, b); stream id c picks
// the point and successive next() calls walk its coordinates.
class ScrambledSobol {
public:
    static constexpr int kBits = 32;

    ScrambledSobol(std::size_t dim, std::uint64_t scramble_seed) : dim_(dim) {
        if (dim == 0 || dim > static_cast<std::size_t>(detail::kSobolMaxDim))
            throw ConfigError("Sobol dimension " + std::to_string(dim) + " outside [1, " +
                              std::to_string(detail::kSobolMaxDim) + "]");
        directions_.resize(dim * kBits);
        shift_.resize(dim);
        std::uint64_t state = scramble_seed;
        for (std::size_t d = 0; d < dim; ++d) {
            std::array<std::uint32_t, kBits> v{};
            init_directions(d, v);
            // Random lower-triangular binary matrix with unit diagonal, one
            // column mask per output bit (bit 31 is the most significant).
            std::array<std::uint32_t, kBits> lms{};
            for (int row = 0; row < kBits; ++row) {
                const std::uint32_t below = row == 0 ? 0u : static_cast<std::uint32_t>(
                                                                splitmix64(state)) &
                                                                ~((~0u) >> row);
                lms[row] = below | (1u << (kBits - 1 - row));
            }
            for (int j = 0; j < kBits; ++j) {
                std::uint32_t out = 0;
                for (int row = 0; row < kBits; ++row)
                    if (std::popcount(lms[row] & v[j]) & 1u) out |= 1u << (kBits - 1 - row);
                directions_[d * kBits + j] = out;
            }
            shift_[d] = static_cast<std::uint32_t>(splitmix64(state));
        }
    }

    std::size_t dim() const noexcept { return dim_; }

    // Coordinate d of point n, in (0, 1).
    double uniform(std::uint64_t n, std::size_t d) const {
        std::uint32_t x = shift_[d];
        for (int j = 0; n != 0 && j < kBits; ++j, n >>= 1)
            if (n & 1u) x ^= directions_[d * kBits + j];
        return (static_cast<double>(x) + 0.5) * 0x1p-32;
    }

private:
    static void init_directions(std::size_t d, std::array<std::uint32_t, kBits>& v) {
        if (d == 0) {
            for (int j = 0; j < kBits; ++j) v[j] = 1u << (kBits - 1 - j);
            return;
        }
        const std::uint32_t poly = detail::kSobolPoly[d];
        const int s = static_cast<int>(std::bit_width(poly)) - 1;
        const std::uint32_t a = (poly >> 1) & ((1u << (s - 1)) - 1u);
        for (int j = 0; j < s && j < kBits; ++j)
            v[j] = detail::kSobolInit[d][j] << (kBits - 1 - j);
        for (int j = s; j < kBits; ++j) {
            std::uint32_t val = v[j - s] ^ (v[j - s] >> s);
            for (int k = 1; k < s; ++k)
                if ((a >> (s - 1 - k)) & 1u) val ^= v[j - k];
            v[j] = val;
        }
    }

    std::size_t dim_;
    std::vector<std::uint32_t> directions_;
    std::vector<std::uint32_t> shift_;
};

// Standard normal variates for one stream. Pseudorandom streams are
// SplitMix64 sequences seeded from a hash of (seed, id); identical inputs
// give bit-identical output.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, StreamId id)
        : mode_(StreamMode::pseudorandom), state_(key(seed, id, true)) {}

    // Sobol mode: the point index is id.c within the sequence `sobol`.
    GaussianStream(const ScrambledSobol& sobol, std::uint64_t point)
        : mode_(StreamMode::sobol), sobol_(&sobol), point_(point) {}

    StreamMode mode() const noexcept { return mode_; }

    double next_uniform() {
        if (mode_ == StreamMode::sobol) {
            if (coord_ >= sobol_->dim())
                throw ConfigError("Sobol stream exhausted its " + std::to_string(sobol_->dim()) +
                                  " dimensions");
            return sobol_->uniform(point_, coord_++);
        }
        return (static_cast<double>(splitmix64(state_) >> 11) + 0.5) * 0x1p-53;
    }

    double next() { return inverse_normal_cdf(next_uniform()); }

    void fill(std::span<double> out) {
        for (auto& z : out) z = next();
    }

    // Seed for the scramble of the Sobol sequence owning (seed, purpose, a, b).
    static std::uint64_t sequence_key(std::uint64_t seed, StreamId id) {
        return key(seed, id, false);
    }

private:
    static std::uint64_t key(std::uint64_t seed, StreamId id, bool with_point) {
        std::uint64_t h = mix64(seed, static_cast<std::uint64_t>(id.purpose));
        h = mix64(h, id.a);
        h = mix64(h, id.b);
        if (with_point) h = mix64(h, id.c);
        return h;
    }

    StreamMode mode_;
    std::uint64_t state_ = 0;
    const ScrambledSobol* sobol_ = nullptr;
    std::uint64_t point_ = 0;
    std::size_t coord_ = 0;
};

}  // namespace volrough
