#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "salab/distributions.hpp"
#include "salab/error.hpp"
#include "salab/matrix.hpp"
#include "salab/rng.hpp"

namespace salab {

// Stream ids are fixed per source so that adding sources or grid dimensions
// never shifts another source's randomness.
inline constexpr std::uint64_t kComponentStreamBase = 0;
inline constexpr std::uint64_t kNoiseStreamId = 100;
inline constexpr std::uint64_t kInnovationStreamId = 200;
inline constexpr std::uint64_t kInnovationNoiseStreamId = 201;

/// Linear-process weight: 1 at lag 0, |j|^-sigma elsewhere.
inline double coeff(double sigma, std::int64_t j) {
    if (j == 0) return 1.0;
    return std::pow(static_cast<double>(j < 0 ? -j : j), -sigma);
}

/// One regression observation: regressor x_k and response y_{k+1}.
struct Observation {
    Vector x;
    double y = 0.0;
};

inline double observe(std::span<const double> x, std::span<const double> h_true, double noise) {
    if (x.size() != h_true.size()) throw Error(ErrorKind::DimensionMismatch, "x and h differ");
    double y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) y += x[i] * h_true[i];
    return y + noise;
}

// ---------------------------------------------------------------------------
// i.i.d. heavy-tailed pairs

struct IidPairConfig {
    std::vector<DistributionSpec> component_specs;
    std::optional<DistributionSpec> noise_spec; // nullopt: noise-free responses
    Vector h_true;

    std::size_t dim() const noexcept { return component_specs.size(); }

    void validate() const {
        if (component_specs.empty()) throw Error(ErrorKind::InvalidParameter, "d must be >= 1");
        if (h_true.size() != component_specs.size()) {
            throw Error(ErrorKind::DimensionMismatch, "h_true must have d entries");
        }
        for (const auto& s : component_specs) s.validate();
        if (noise_spec) {
            noise_spec->validate();
            if (!is_centered(noise_spec->kind)) {
                throw Error(ErrorKind::InvalidParameter, "noise must use a centered kind");
            }
        }
    }
};

/// Draws (x_k, y_{k+1}) with every component and the noise from its own
/// stream, one fixed number of draws per stream per call.
class IidPairGenerator {
public:
    IidPairGenerator(IidPairConfig config, std::uint64_t base_seed, std::uint64_t trial_id)
        : config_(std::move(config)) {
        config_.validate();
        for (std::size_t i = 0; i < config_.dim(); ++i) {
            samplers_.emplace_back(config_.component_specs[i]);
            streams_.push_back(derive_stream(base_seed, trial_id, kComponentStreamBase + i));
        }
        if (config_.noise_spec) noise_sampler_.emplace(*config_.noise_spec);
        noise_stream_.emplace(derive_stream(base_seed, trial_id, kNoiseStreamId));
    }

    const IidPairConfig& config() const noexcept { return config_; }
    std::size_t dim() const noexcept { return config_.dim(); }

    /// Noise term of the most recent observation.
    double last_noise() const noexcept { return last_noise_; }

    void next(Observation& out) {
        out.x.resize(dim());
        for (std::size_t i = 0; i < dim(); ++i) out.x[i] = samplers_[i](streams_[i]);
        last_noise_ = noise_sampler_ ? (*noise_sampler_)(*noise_stream_) : 0.0;
        out.y = observe(out.x, config_.h_true, last_noise_);
    }

    Observation next() {
        Observation obs;
        next(obs);
        return obs;
    }

private:
    IidPairConfig config_;
    std::vector<Sampler> samplers_;
    std::vector<RngStream> streams_;
    std::optional<Sampler> noise_sampler_;
    std::optional<RngStream> noise_stream_;
    double last_noise_ = 0.0;
};

// ---------------------------------------------------------------------------
// truncated linear processes

enum class Sidedness { OneSided, TwoSided };

struct LinProcConfig {
    double sigma = 0.65;
    std::size_t trunc_lag = 500000;
    DistributionSpec innovation_spec = DistributionSpec::power_law(0.01, 4.0);
    DistributionSpec noise_spec = DistributionSpec::centered_power_law(0.01, 4.0);
    double h_true = 1.0;
    Sidedness sided = Sidedness::OneSided;
    bool center_innovations = false;

    void validate() const {
        if (!(sigma > 0.5 && sigma <= 1.0)) {
            throw Error(ErrorKind::OutOfRange, "sigma must lie in (1/2, 1]");
        }
        if (trunc_lag < 1) throw Error(ErrorKind::OutOfRange, "trunc_lag must be >= 1");
        innovation_spec.validate();
        noise_spec.validate();
        if (!is_centered(noise_spec.kind)) {
            throw Error(ErrorKind::InvalidParameter, "linear-process noise must be centered");
        }
    }

    /// Number of innovations one output depends on.
    std::size_t window() const noexcept {
        return sided == Sidedness::OneSided ? trunc_lag + 1 : 2 * trunc_lag + 1;
    }
};

/// Supplies innovation pairs (xi, a) in a fixed order.
template <class S>
concept InnovationSource = requires(S s) {
    { s.next() } -> std::convertible_to<std::pair<double, double>>;
};

class SampledInnovations {
public:
    SampledInnovations(const LinProcConfig& config, std::uint64_t base_seed,
                       std::uint64_t trial_id)
        : xi_(config.center_innovations
                  ? DistributionSpec{centered_kind(config.innovation_spec.kind),
                                     config.innovation_spec.x_min, config.innovation_spec.beta}
                  : config.innovation_spec),
          a_(config.noise_spec),
          xi_stream_(derive_stream(base_seed, trial_id, kInnovationStreamId)),
          a_stream_(derive_stream(base_seed, trial_id, kInnovationNoiseStreamId)) {}

    std::pair<double, double> next() {
        const double xi = xi_(xi_stream_);
        const double a = a_(a_stream_);
        return {xi, a};
    }

private:
    Sampler xi_;
    Sampler a_;
    RngStream xi_stream_;
    RngStream a_stream_;
};

/// Fixed-capacity window with a contiguous chronological view, kept by
/// writing every value twice into a buffer of twice the capacity.
class SlidingWindow {
public:
    explicit SlidingWindow(std::size_t capacity) : capacity_(capacity), buf_(2 * capacity, 0.0) {}

    void push(double v) noexcept {
        buf_[head_] = v;
        buf_[head_ + capacity_] = v;
        head_ = head_ + 1 == capacity_ ? 0 : head_ + 1;
    }

    /// Oldest to newest.
    std::span<const double> view() const noexcept {
        return std::span<const double>(buf_).subspan(head_, capacity_);
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<double> buf_;
};

/// Streams x_k = sum_j c_j xi_{k-j} and y_{k+1} = h x_k + sum_j c_j a_{k-j},
/// truncated at lag L. Two-sided outputs are centred in the window, so they
/// lag the newest innovation by L.
template <InnovationSource Source = SampledInnovations>
class LinearProcess {
public:
    /// prefill pushes window()-1 innovations so the first output sees a full window.
    LinearProcess(const LinProcConfig& config, Source source, bool prefill = true)
        : config_(config), source_(std::move(source)), xi_(config.window()), a_(config.window()) {
        config_.validate();
        const std::size_t w = config_.window();
        weights_.resize(w);
        const auto lag = static_cast<std::int64_t>(config_.trunc_lag);
        for (std::size_t i = 0; i < w; ++i) {
            // weights_[i] multiplies the i-th oldest innovation.
            const std::int64_t j = config_.sided == Sidedness::OneSided
                                       ? static_cast<std::int64_t>(w - 1 - i)
                                       : lag - static_cast<std::int64_t>(i);
            weights_[i] = coeff(config_.sigma, j);
        }
        if (prefill) {
            for (std::size_t i = 0; i + 1 < w; ++i) advance();
        }
    }

    const LinProcConfig& config() const noexcept { return config_; }

    void next(Observation& out) {
        advance();
        const auto xs = xi_.view();
        const auto as = a_.view();
        double x = 0.0, noise = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            x += weights_[i] * xs[i];
            noise += weights_[i] * as[i];
        }
        out.x.assign(1, x);
        out.y = config_.h_true * x + noise;
        last_noise_ = noise;
    }

    Observation next() {
        Observation obs;
        next(obs);
        return obs;
    }

    double last_noise() const noexcept { return last_noise_; }

private:
    void advance() {
        const auto [xi, a] = source_.next();
        xi_.push(xi);
        a_.push(a);
    }

    LinProcConfig config_;
    Source source_;
    SlidingWindow xi_;
    SlidingWindow a_;
    std::vector<double> weights_;
    double last_noise_ = 0.0;
};

inline LinearProcess<> make_linear_process(const LinProcConfig& config, std::uint64_t base_seed,
                                           std::uint64_t trial_id) {
    return LinearProcess<>(config, SampledInnovations(config, base_seed, trial_id));
}

// ---------------------------------------------------------------------------
// windowed coefficient pairs

/// A_k and b_k with A_k symmetric PSD.
struct CoeffPair {
    Matrix A;
    Vector b;
    std::uint64_t k = 1;
};

/// A_k = (1/N) sum x_l x_l^T and b_k = (1/N) sum y_{l+1} x_l over the window
/// l = max(k-N+1, 1)..k. The divisor stays N while the window is clipped.
inline void make_coeff_pair(std::span<const Observation> window, std::size_t n_window,
                            std::uint64_t k, CoeffPair& out) {
    if (window.empty()) throw Error(ErrorKind::InvalidParameter, "empty coefficient window");
    if (n_window == 0 || window.size() > n_window) {
        throw Error(ErrorKind::InvalidParameter, "window holds more than N observations");
    }
    const std::size_t d = window.front().x.size();
    if (out.A.rows() != d || out.A.cols() != d) out.A = Matrix(d, d);
    out.b.assign(d, 0.0);
    out.k = k;
    if (window.size() == 1 && n_window == 1) {
        const auto& x = window.front().x;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) out.A(i, j) = x[i] * x[j];
            out.b[i] = window.front().y * x[i];
        }
        return;
    }
    out.A.fill(0.0);
    for (const auto& obs : window) {
        if (obs.x.size() != d) throw Error(ErrorKind::DimensionMismatch, "ragged window");
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) out.A(i, j) += obs.x[i] * obs.x[j];
            out.b[i] += obs.y * obs.x[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(n_window);
    out.A *= inv;
    for (auto& v : out.b) v *= inv;
}

inline CoeffPair make_coeff_pair(std::span<const Observation> window, std::size_t n_window,
                                 std::uint64_t k) {
    CoeffPair out;
    make_coeff_pair(window, n_window, k, out);
    return out;
}

/// Anything that yields (x_k, y_{k+1}) observations.
template <class G>
concept ObservationGenerator = requires(G g, Observation& obs) { g.next(obs); };

/// Yields CoeffPairs k = 1, 2, ... from an observation generator.
template <ObservationGenerator Generator>
class CoeffStream {
public:
    CoeffStream(Generator generator, std::size_t n_window = 1)
        : generator_(std::move(generator)), n_window_(n_window) {
        if (n_window_ == 0) throw Error(ErrorKind::InvalidParameter, "window N must be >= 1");
        window_.resize(n_window_);
    }

    void next(CoeffPair& out) {
        Observation& slot = window_[next_slot_];
        generator_.next(slot);
        next_slot_ = (next_slot_ + 1) % n_window_;
        filled_ = std::min(filled_ + 1, n_window_);
        if (n_window_ == 1) {
            make_coeff_pair(std::span<const Observation>(window_.data(), 1), 1, k_, out);
        } else {
            make_coeff_pair(std::span<const Observation>(window_.data(), filled_), n_window_, k_,
                            out);
        }
        ++k_;
    }

    CoeffPair next() {
        CoeffPair out;
        next(out);
        return out;
    }

    Generator& generator() noexcept { return generator_; }

private:
    Generator generator_;
    std::size_t n_window_;
    std::vector<Observation> window_;
    std::size_t next_slot_ = 0;
    std::size_t filled_ = 0;
    std::uint64_t k_ = 1;
};

} // namespace salab
