#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "salab/distributions.hpp"
#include "salab/error.hpp"
#include "salab/linproc.hpp"
#include "salab/matrix.hpp"

namespace salab {

// ---------------------------------------------------------------------------
// thresholds and rates

/// Tail index of the squared variable, capped at 2. Both PL and Ft have
/// survival exponent beta - 1, so squares have (beta - 1) / 2.
inline double tail_index_squared(const DistributionSpec& spec) {
    if (!(spec.beta > 3.0)) {
        throw Error(ErrorKind::TooHeavy, "beta must exceed 3 for a tail index above 1");
    }
    return std::min((spec.beta - 1.0) / 2.0, 2.0);
}

inline void check_alpha_sigma(double alpha, double sigma) {
    if (!(alpha > 1.0 && alpha <= 2.0)) throw Error(ErrorKind::OutOfRange, "alpha must lie in (1, 2]");
    if (!(sigma > 0.5 && sigma <= 1.0)) throw Error(ErrorKind::OutOfRange, "sigma must lie in (1/2, 1]");
}

/// M = max(1/alpha, 2 - 2 sigma).
inline double marcinkiewicz_threshold(double alpha, double sigma) {
    check_alpha_sigma(alpha, sigma);
    return std::max(1.0 / alpha, 2.0 - 2.0 * sigma);
}

/// gamma_0 = min(chi - 1/alpha, chi + 2 sigma - 2); may be non-positive.
inline double rate_bound(double chi, double alpha, double sigma) {
    check_alpha_sigma(alpha, sigma);
    if (!(chi > 0.0 && chi <= 1.0)) throw Error(ErrorKind::OutOfRange, "chi must lie in (0, 1]");
    return std::min(chi - 1.0 / alpha, chi + 2.0 * sigma - 2.0);
}

struct ThresholdParams {
    double alpha = 2.0;
    double sigma = 1.0;
    double M = 0.5;
    std::optional<double> gamma0;

    static ThresholdParams compute(double alpha, double sigma, std::optional<double> chi = {}) {
        ThresholdParams p{alpha, sigma, marcinkiewicz_threshold(alpha, sigma), std::nullopt};
        if (chi) p.gamma0 = rate_bound(*chi, alpha, sigma);
        return p;
    }
};

// ---------------------------------------------------------------------------
// grids and slope fitting

/// 1, 2, 4, ... up to n_max, with n_max appended when it is not a power of two.
inline std::vector<std::uint64_t> geometric_grid(std::uint64_t n_max) {
    std::vector<std::uint64_t> grid;
    for (std::uint64_t n = 1; n <= n_max; n *= 2) {
        grid.push_back(n);
        if (n > n_max / 2) break;
    }
    if (!grid.empty() && grid.back() != n_max) grid.push_back(n_max);
    return grid;
}

inline void check_grid(std::span<const std::uint64_t> grid) {
    if (grid.empty()) throw Error(ErrorKind::InvalidParameter, "grid must be nonempty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] == 0 || (i > 0 && grid[i] <= grid[i - 1])) {
            throw Error(ErrorKind::InvalidParameter, "grid must be positive and strictly increasing");
        }
    }
}

/// OLS slope of ln(value) on ln(n) after dropping the first 10% of grid
/// points; points with value <= 0 are skipped. nullopt if fewer than two
/// usable points remain.
inline std::optional<double> fit_loglog_slope(std::span<const std::pair<std::uint64_t, double>> pts,
                                              double burn_in_fraction = 0.1) {
    const auto skip = static_cast<std::size_t>(std::floor(burn_in_fraction * pts.size()));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = skip; i < pts.size(); ++i) {
        if (!(pts[i].second > 0.0) || !std::isfinite(pts[i].second)) continue;
        const double x = std::log(static_cast<double>(pts[i].first));
        const double y = std::log(pts[i].second);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 2) return std::nullopt;
    const double mx = sx / m, my = sy / m;
    const double var = sxx / m - mx * mx;
    if (!(var > 0.0)) return std::nullopt;
    return (sxy / m - mx * my) / var;
}

// ---------------------------------------------------------------------------
// partial-sum scaling curves

struct ScalingCurve {
    double p = 2.0;
    std::vector<std::pair<std::uint64_t, double>> grid; // (n, |S_n| / n^{1/p})
    std::optional<double> slope;
};

/// Streams D_1, D_2, ... and records |sum_{k<=n}(D_k - D)| / n^{1/p} at the
/// grid points for each requested p. Matrices use the operator norm; column
/// vectors reduce to the Euclidean norm.
class PartialSumScaler {
public:
    PartialSumScaler(Matrix target, std::vector<double> ps, std::vector<std::uint64_t> grid)
        : target_(std::move(target)), sum_(target_.rows(), target_.cols()), grid_(std::move(grid)) {
        check_grid(grid_);
        for (double p : ps) {
            if (!(p > 1.0)) throw Error(ErrorKind::InvalidParameter, "p must exceed 1");
            curves_.push_back(ScalingCurve{p, {}, std::nullopt});
        }
    }

    std::uint64_t count() const noexcept { return n_; }
    const Matrix& running_sum() const noexcept { return sum_; }

    void push(const Matrix& d_k) {
        if (d_k.rows() != target_.rows() || d_k.cols() != target_.cols()) {
            throw Error(ErrorKind::DimensionMismatch, "series element shape differs from target");
        }
        const auto dk = d_k.data();
        const auto t = target_.data();
        auto s = sum_.data();
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += dk[i] - t[i];
        ++n_;
        if (next_ < grid_.size() && grid_[next_] == n_) {
            const double norm = operator_norm(sum_);
            for (auto& c : curves_) {
                c.grid.emplace_back(n_, norm / std::pow(static_cast<double>(n_), 1.0 / c.p));
            }
            ++next_;
        }
    }

    void push(std::span<const double> d_k) {
        if (target_.cols() != 1) throw Error(ErrorKind::DimensionMismatch, "target is not a vector");
        if (d_k.size() != target_.rows()) {
            throw Error(ErrorKind::DimensionMismatch, "series element shape differs from target");
        }
        auto s = sum_.data();
        const auto t = target_.data();
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += d_k[i] - t[i];
        ++n_;
        if (next_ < grid_.size() && grid_[next_] == n_) {
            const double norm = norm2(sum_.data());
            for (auto& c : curves_) {
                c.grid.emplace_back(n_, norm / std::pow(static_cast<double>(n_), 1.0 / c.p));
            }
            ++next_;
        }
    }

    std::vector<ScalingCurve> curves() const {
        auto out = curves_;
        for (auto& c : out) c.slope = fit_loglog_slope(c.grid);
        return out;
    }

private:
    Matrix target_;
    Matrix sum_;
    std::vector<std::uint64_t> grid_;
    std::vector<ScalingCurve> curves_;
    std::uint64_t n_ = 0;
    std::size_t next_ = 0;
};

inline ScalingCurve partial_sum_scaled(std::span<const Matrix> series, const Matrix& target,
                                       double p, std::vector<std::uint64_t> grid) {
    PartialSumScaler scaler(target, {p}, std::move(grid));
    for (const auto& d : series) scaler.push(d);
    return scaler.curves().front();
}

// ---------------------------------------------------------------------------
// residual diagnostics over a coefficient stream

/// |n^-chi sum_{k<=n} (b_k - A_k h)|, streamed.
class ResidualAverage {
public:
    ResidualAverage(Vector h, double chi) : h_(std::move(h)), chi_(chi), sum_(h_.size(), 0.0) {}

    void push(const CoeffPair& pair) {
        const std::size_t d = h_.size();
        if (pair.A.rows() != d || pair.b.size() != d) {
            throw Error(ErrorKind::DimensionMismatch, "coefficient pair does not match h");
        }
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += pair.A(i, j) * h_[j];
            sum_[i] += pair.b[i] - acc;
        }
        ++n_;
    }

    std::uint64_t count() const noexcept { return n_; }

    double value() const {
        if (n_ == 0) return 0.0;
        return norm2(sum_) / std::pow(static_cast<double>(n_), chi_);
    }

private:
    Vector h_;
    double chi_;
    Vector sum_;
    std::uint64_t n_ = 0;
};

inline double residual_average(std::span<const CoeffPair> history, const Vector& h, double chi,
                               std::uint64_t n) {
    if (n < 1 || n > history.size()) throw Error(ErrorKind::InvalidParameter, "need 1 <= n <= history");
    ResidualAverage avg(h, chi);
    for (std::uint64_t k = 0; k < n; ++k) avg.push(history[k]);
    return avg.value();
}

/// n^-chi sum_{k<=n} k^{chi-1} |A_k| at each grid point, streamed.
class GrowthFunctional {
public:
    GrowthFunctional(double chi, std::vector<std::uint64_t> grid) : chi_(chi), grid_(std::move(grid)) {
        check_grid(grid_);
    }

    void push(const CoeffPair& pair) {
        ++n_;
        sum_ += std::pow(static_cast<double>(n_), chi_ - 1.0) * operator_norm(pair.A);
        if (next_ < grid_.size() && grid_[next_] == n_) {
            values_.emplace_back(n_, sum_ / std::pow(static_cast<double>(n_), chi_));
            ++next_;
        }
    }

    const std::vector<std::pair<std::uint64_t, double>>& values() const noexcept { return values_; }

private:
    double chi_;
    std::vector<std::uint64_t> grid_;
    std::vector<std::pair<std::uint64_t, double>> values_;
    double sum_ = 0.0;
    std::uint64_t n_ = 0;
    std::size_t next_ = 0;
};

inline std::vector<std::pair<std::uint64_t, double>> growth_functional(
    std::span<const CoeffPair> history, double chi, std::vector<std::uint64_t> grid) {
    GrowthFunctional g(chi, std::move(grid));
    for (const auto& p : history) g.push(p);
    return g.values();
}

} // namespace salab
