#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "salab/error.hpp"
#include "salab/linproc.hpp"
#include "salab/matrix.hpp"

namespace salab {

/// mu_k = k^-chi with chi in (0, 1].
class GainSchedule {
public:
    explicit GainSchedule(double chi) : chi_(chi) {
        if (!(chi > 0.0 && chi <= 1.0)) throw Error(ErrorKind::OutOfRange, "chi must lie in (0, 1]");
    }

    double chi() const noexcept { return chi_; }

    double operator()(std::uint64_t k) const noexcept {
        return std::exp(-chi_ * std::log(static_cast<double>(k)));
    }

private:
    double chi_;
};

struct SAState {
    std::uint64_t k = 1;
    Vector h;
};

/// h <- h + gain (b - A h). The product A h is accumulated row by row before
/// the update so reruns are bit-identical.
inline void sa_step_inplace(SAState& state, const CoeffPair& pair, double gain) {
    const std::size_t d = state.h.size();
    if (pair.A.rows() != d || pair.A.cols() != d || pair.b.size() != d) {
        throw Error(ErrorKind::DimensionMismatch, "coefficient pair does not match iterate");
    }
    if (d == 2) {
        const double r0 = pair.b[0] - (pair.A(0, 0) * state.h[0] + pair.A(0, 1) * state.h[1]);
        const double r1 = pair.b[1] - (pair.A(1, 0) * state.h[0] + pair.A(1, 1) * state.h[1]);
        state.h[0] += gain * r0;
        state.h[1] += gain * r1;
    } else if (d == 1) {
        state.h[0] += gain * (pair.b[0] - pair.A(0, 0) * state.h[0]);
    } else {
        double residual[16];
        std::vector<double> heap;
        double* r = residual;
        if (d > 16) {
            heap.resize(d);
            r = heap.data();
        }
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) acc += pair.A(i, j) * state.h[j];
            r[i] = pair.b[i] - acc;
        }
        for (std::size_t i = 0; i < d; ++i) state.h[i] += gain * r[i];
    }
    ++state.k;
}

inline SAState sa_step(SAState state, const CoeffPair& pair, const GainSchedule& schedule) {
    if (pair.k != state.k) {
        throw Error(ErrorKind::InvalidParameter, "coefficient index does not match iterate index");
    }
    sa_step_inplace(state, pair, schedule(state.k));
    return state;
}

/// 1e12 (1 + |h_1|).
inline double default_guard(std::span<const double> h1) noexcept {
    return 1e12 * (1.0 + norm2(h1));
}

/// True when the iterate is non-finite or its norm exceeds guard.
inline bool exceeds_guard(std::span<const double> h, double guard) noexcept {
    double acc = 0.0;
    for (double v : h) acc += v * v;
    return !(std::sqrt(acc) <= guard);
}

struct Checkpoint {
    std::uint64_t steps = 0; // updates applied; the iterate index is steps + 1
    Vector h;
};

struct Trajectory {
    std::vector<Checkpoint> checkpoints;
    SAState final;
    bool diverged = false;
    std::optional<std::uint64_t> divergence_k;
};

struct RunOptions {
    std::vector<std::uint64_t> checkpoint_at; // step counts
    double guard = std::numeric_limits<double>::infinity();
};

template <class S>
concept CoeffSource = requires(S s, CoeffPair& pair) { s.next(pair); };

/// Applies n updates drawn from source. A guard trip ends the run early and is
/// reported in the trajectory, not thrown.
template <CoeffSource Source>
Trajectory run(Source& source, Vector h1, const GainSchedule& schedule, std::uint64_t n,
               RunOptions options = {}) {
    if (n < 1) throw Error(ErrorKind::InvalidParameter, "run needs n >= 1");
    if (!(options.guard > 0.0)) throw Error(ErrorKind::InvalidParameter, "guard must be positive");
    std::sort(options.checkpoint_at.begin(), options.checkpoint_at.end());
    options.checkpoint_at.erase(
        std::unique(options.checkpoint_at.begin(), options.checkpoint_at.end()),
        options.checkpoint_at.end());

    Trajectory traj;
    traj.final = SAState{1, std::move(h1)};
    auto next_cp = options.checkpoint_at.begin();
    while (next_cp != options.checkpoint_at.end() && *next_cp == 0) {
        traj.checkpoints.push_back({0, traj.final.h});
        ++next_cp;
    }

    CoeffPair pair;
    for (std::uint64_t step = 1; step <= n; ++step) {
        if (exceeds_guard(traj.final.h, options.guard)) {
            traj.diverged = true;
            traj.divergence_k = traj.final.k;
            return traj;
        }
        source.next(pair);
        sa_step_inplace(traj.final, pair, schedule(traj.final.k));
        if (next_cp != options.checkpoint_at.end() && *next_cp == step) {
            traj.checkpoints.push_back({step, traj.final.h});
            ++next_cp;
        }
    }
    if (exceeds_guard(traj.final.h, options.guard)) {
        traj.diverged = true;
        traj.divergence_k = traj.final.k;
    }
    return traj;
}

/// Independent route to h_{n+1}: the affine expansion
///   prod_{k=1..n}(I - mu_k A_k) h_1 + sum_j [prod_{k=j+1..n}(I - mu_k A_k)] mu_j b_j
/// with the suffix products built right to left. Meant for small n.
inline Vector closed_form_linear(std::span<const double> h1, std::span<const CoeffPair> pairs,
                                 const GainSchedule& schedule) {
    const std::size_t d = h1.size();
    for (const auto& p : pairs) {
        if (p.A.rows() != d || p.A.cols() != d || p.b.size() != d) {
            throw Error(ErrorKind::DimensionMismatch, "coefficient pair does not match h_1");
        }
    }
    const Matrix eye = Matrix::identity(d);
    Matrix suffix = eye; // prod_{k=j+1..n}
    Vector acc(d, 0.0);
    for (std::size_t idx = pairs.size(); idx-- > 0;) {
        const std::uint64_t j = idx + 1;
        const double mu = schedule(j);
        const Vector term = suffix * pairs[idx].b;
        for (std::size_t i = 0; i < d; ++i) acc[i] += mu * term[i];
        suffix = suffix * (eye - mu * pairs[idx].A);
    }
    const Vector homogeneous = suffix * h1;
    for (std::size_t i = 0; i < d; ++i) acc[i] += homogeneous[i];
    return acc;
}

/// |h_n - h| / |h_1 - h|.
inline double normalized_error(std::span<const double> h_n, std::span<const double> h,
                               std::span<const double> h1) {
    const double denom = distance(h1, h);
    if (denom == 0.0) throw Error(ErrorKind::DegenerateStart, "h_1 equals h");
    return distance(h_n, h) / denom;
}

struct Lemma3Slack {
    double full = 0.0;       // value for the whole list
    double min_prefix = 0.0; // minimum over non-empty prefixes
};

/// sqrt(d) |||sum M_k||| - sum |||M_k||| for symmetric PSD M_k; non-negative
/// for every prefix.
inline Lemma3Slack lemma3_slack(std::span<const Matrix> ms) {
    if (ms.empty()) return {};
    const std::size_t d = ms.front().rows();
    const double root_d = std::sqrt(static_cast<double>(d));
    Matrix sum(d, d);
    double sum_of_norms = 0.0;
    Lemma3Slack out{0.0, std::numeric_limits<double>::infinity()};
    for (const auto& m : ms) {
        if (m.rows() != d || m.cols() != d) {
            throw Error(ErrorKind::DimensionMismatch, "matrices differ in size");
        }
        if (!is_psd(m)) throw Error(ErrorKind::NotPsd, "matrix is not symmetric PSD");
        sum += m;
        sum_of_norms += triple_norm(m);
        out.full = root_d * triple_norm(sum) - sum_of_norms;
        out.min_prefix = std::min(out.min_prefix, out.full);
    }
    return out;
}

} // namespace salab
