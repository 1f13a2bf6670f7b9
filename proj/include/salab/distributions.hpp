#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "salab/error.hpp"
#include "salab/rng.hpp"

namespace salab {

enum class DistKind { PowerLaw, CenteredPowerLaw, FoldedT, CenteredFoldedT };

inline std::string_view to_string(DistKind kind) noexcept {
    switch (kind) {
    case DistKind::PowerLaw: return "power-law";
    case DistKind::CenteredPowerLaw: return "centered-power-law";
    case DistKind::FoldedT: return "folded-t";
    case DistKind::CenteredFoldedT: return "centered-folded-t";
    }
    return "unknown";
}

inline DistKind dist_kind_from_string(std::string_view name) {
    if (name == "power-law") return DistKind::PowerLaw;
    if (name == "centered-power-law") return DistKind::CenteredPowerLaw;
    if (name == "folded-t") return DistKind::FoldedT;
    if (name == "centered-folded-t") return DistKind::CenteredFoldedT;
    throw Error(ErrorKind::InvalidParameter, "unknown distribution '" + std::string(name) + "'");
}

inline bool is_power_law(DistKind kind) noexcept {
    return kind == DistKind::PowerLaw || kind == DistKind::CenteredPowerLaw;
}

inline bool is_centered(DistKind kind) noexcept {
    return kind == DistKind::CenteredPowerLaw || kind == DistKind::CenteredFoldedT;
}

inline DistKind centered_kind(DistKind kind) noexcept {
    return is_power_law(kind) ? DistKind::CenteredPowerLaw : DistKind::CenteredFoldedT;
}

inline DistKind raw_kind(DistKind kind) noexcept {
    return is_power_law(kind) ? DistKind::PowerLaw : DistKind::FoldedT;
}

// Innovation law. x_min is ignored by the folded-t kinds.
struct DistributionSpec {
    DistKind kind = DistKind::PowerLaw;
    double x_min = 1.0;
    double beta = 4.0;

    static DistributionSpec power_law(double x_min, double beta) {
        return {DistKind::PowerLaw, x_min, beta};
    }
    static DistributionSpec centered_power_law(double x_min, double beta) {
        return {DistKind::CenteredPowerLaw, x_min, beta};
    }
    static DistributionSpec folded_t(double beta) { return {DistKind::FoldedT, 1.0, beta}; }
    static DistributionSpec centered_folded_t(double beta) {
        return {DistKind::CenteredFoldedT, 1.0, beta};
    }

    void validate() const {
        if (!(beta > 1.0)) {
            throw Error(ErrorKind::InvalidParameter, "beta must exceed 1");
        }
        if (is_power_law(kind) && !(x_min > 0.0)) {
            throw Error(ErrorKind::InvalidParameter, "x_min must be positive");
        }
        if (is_centered(kind) && !(beta > 2.0)) {
            throw Error(ErrorKind::MeanDiverges, "centering requires beta > 2");
        }
    }

    bool operator==(const DistributionSpec&) const = default;
};

// --- power law PL(x_min, beta) ---

inline void check_power_law(double x_min, double beta) {
    if (!(x_min > 0.0)) throw Error(ErrorKind::InvalidParameter, "x_min must be positive");
    if (!(beta > 1.0)) throw Error(ErrorKind::InvalidParameter, "beta must exceed 1");
}

/// Inverse CDF at u in [0, 1); u = 0 maps to x_min.
inline double power_law_quantile(double u, double x_min, double beta) {
    check_power_law(x_min, beta);
    return x_min * std::pow(1.0 - u, -1.0 / (beta - 1.0));
}

inline double power_law_cdf(double x, double x_min, double beta) {
    check_power_law(x_min, beta);
    if (x <= x_min) return 0.0;
    return 1.0 - std::pow(x / x_min, -(beta - 1.0));
}

inline double power_law_sample(RngStream& stream, double x_min, double beta) {
    return power_law_quantile(stream.uniform(), x_min, beta);
}

/// E|xi|^r; finite only for r < beta - 1.
inline double power_law_moment(double x_min, double beta, double r) {
    check_power_law(x_min, beta);
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidParameter, "moment order must be positive");
    if (r >= beta - 1.0) {
        throw Error(ErrorKind::MomentDiverges,
                    "power-law moment of order " + std::to_string(r) + " is infinite");
    }
    return std::pow(x_min, r) * (beta - 1.0) / (beta - 1.0 - r);
}

// --- folded t Ft(beta): |T| with T ~ Student-t(beta - 1) ---

inline double folded_t_density(double x, double beta) {
    if (!(beta > 1.0)) throw Error(ErrorKind::InvalidParameter, "beta must exceed 1");
    if (x <= 0.0) return 0.0;
    const double nu = beta - 1.0;
    const double log_norm = std::log(2.0) + std::lgamma(beta / 2.0) - std::lgamma(nu / 2.0) -
                            0.5 * std::log(nu * std::numbers::pi);
    return std::exp(log_norm - (beta / 2.0) * std::log1p(x * x / nu));
}

inline double folded_t_cdf(double x, double beta) {
    if (!(beta > 1.0)) throw Error(ErrorKind::InvalidParameter, "beta must exceed 1");
    if (x <= 0.0) return 0.0;
    const boost::math::students_t_distribution<double> t(beta - 1.0);
    return 2.0 * boost::math::cdf(t, x) - 1.0;
}

inline double folded_t_mean(double beta) {
    if (!(beta > 2.0)) throw Error(ErrorKind::MeanDiverges, "folded-t mean requires beta > 2");
    const double log_ratio = std::lgamma(beta / 2.0) - std::lgamma((beta - 1.0) / 2.0);
    return 2.0 * std::sqrt(beta - 1.0) * std::exp(log_ratio) /
           (std::sqrt(std::numbers::pi) * (beta - 2.0));
}

namespace detail {

// Box-Muller cosine branch; always two draws.
inline double standard_normal(RngStream& stream) {
    const double radius = std::sqrt(-2.0 * std::log(stream.uniform_open()));
    return radius * std::cos(2.0 * std::numbers::pi * stream.uniform());
}

// Chi-squared(nu) by inversion of the regularized incomplete gamma; one draw.
inline double chi_squared(RngStream& stream, double nu) {
    return 2.0 * boost::math::gamma_p_inv(nu / 2.0, stream.uniform_open());
}

} // namespace detail

inline double folded_t_sample(RngStream& stream, double beta) {
    if (!(beta > 1.0)) throw Error(ErrorKind::InvalidParameter, "beta must exceed 1");
    const double nu = beta - 1.0;
    const double z = detail::standard_normal(stream);
    const double v = detail::chi_squared(stream, nu);
    return std::abs(z / std::sqrt(v / nu));
}

/// Mean of the uncentered law underlying spec.
inline double raw_mean(const DistributionSpec& spec) {
    return is_power_law(spec.kind) ? power_law_moment(spec.x_min, spec.beta, 1.0)
                                   : folded_t_mean(spec.beta);
}

/// E[xi^2] of the uncentered law; requires beta > 3.
inline double raw_second_moment(const DistributionSpec& spec) {
    if (is_power_law(spec.kind)) return power_law_moment(spec.x_min, spec.beta, 2.0);
    if (!(spec.beta > 3.0)) throw Error(ErrorKind::MomentDiverges, "folded-t second moment requires beta > 3");
    return (spec.beta - 1.0) / (spec.beta - 3.0);
}

/// Pre-validated sampler for one DistributionSpec. Draw count per sample is
/// fixed: one for the power-law kinds and three for the folded-t kinds.
class Sampler {
public:
    explicit Sampler(const DistributionSpec& spec) : spec_(spec) {
        spec_.validate();
        exponent_ = -1.0 / (spec_.beta - 1.0);
        nu_ = spec_.beta - 1.0;
        shift_ = is_centered(spec_.kind) ? raw_mean(spec_) : 0.0;
    }

    const DistributionSpec& spec() const noexcept { return spec_; }

    /// Analytic mean subtracted from every raw sample (zero for raw kinds).
    double shift() const noexcept { return shift_; }

    double operator()(RngStream& stream) const {
        double raw;
        if (is_power_law(spec_.kind)) {
            raw = spec_.x_min * std::pow(1.0 - stream.uniform(), exponent_);
        } else {
            const double z = detail::standard_normal(stream);
            const double v = detail::chi_squared(stream, nu_);
            raw = std::abs(z / std::sqrt(v / nu_));
        }
        return raw - shift_;
    }

private:
    DistributionSpec spec_;
    double exponent_ = 0.0;
    double nu_ = 0.0;
    double shift_ = 0.0;
};

inline double sample(RngStream& stream, const DistributionSpec& spec) {
    return Sampler(spec)(stream);
}

/// Raw sample minus the analytic mean. Requires a centered kind.
inline double centered_sample(RngStream& stream, const DistributionSpec& spec) {
    if (!is_centered(spec.kind)) {
        throw Error(ErrorKind::InvalidParameter, "centered_sample needs a centered kind");
    }
    return Sampler(spec)(stream);
}

} // namespace salab
