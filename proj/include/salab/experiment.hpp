#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "salab/config.hpp"
#include "salab/diagnostics.hpp"
#include "salab/linproc.hpp"
#include "salab/rng.hpp"
#include "salab/sa.hpp"

namespace salab {

struct Cell {
    double chi = 0.0;
    double beta = 0.0;
    std::optional<double> sigma;
    std::uint64_t n = 0;
};

struct TrialResult {
    std::uint64_t trial_id = 0;
    double chi = 0.0;
    double beta = 0.0;
    std::optional<double> sigma;
    std::uint64_t n = 0;
    double norm_err = 0.0;
    bool diverged = false;
    bool degenerate_start = false; // h_init == h_true; norm_err reported as 0
    std::uint64_t base_seed = 0;

    bool operator==(const TrialResult&) const = default;
};

using ScenarioSource =
    std::variant<CoeffStream<IidPairGenerator>, CoeffStream<LinearProcess<>>>;

inline ScenarioSource make_scenario_source(const ExperimentConfig& c, double beta,
                                           std::uint64_t trial_id) {
    if (c.scenario == Scenario::LrdPowerLaw) {
        return CoeffStream<LinearProcess<>>(
            make_linear_process(linproc_config(c, beta), c.base_seed, trial_id), c.window);
    }
    return CoeffStream<IidPairGenerator>(
        IidPairGenerator(iid_pair_config(c, beta), c.base_seed, trial_id), c.window);
}

inline double effective_guard(const ExperimentConfig& c) {
    return c.guard.value_or(default_guard(c.h_init));
}

/// E[A_k] for window N = 1: E[x x^T]. Needs finite second moments (beta > 3).
inline Matrix expected_coefficient(const ExperimentConfig& c, double beta) {
    const DistributionSpec spec = component_spec(c, beta);
    if (c.scenario != Scenario::LrdPowerLaw) {
        const double m1 = raw_mean(spec), m2 = raw_second_moment(spec);
        Matrix out(c.d, c.d);
        for (std::size_t i = 0; i < c.d; ++i)
            for (std::size_t j = 0; j < c.d; ++j) out(i, j) = i == j ? m2 : m1 * m1;
        return out;
    }
    const LinProcConfig lp = linproc_config(c, beta);
    const double mean = c.center_innovations ? 0.0 : raw_mean(spec);
    const double var = raw_second_moment(spec) - raw_mean(spec) * raw_mean(spec);
    double s1 = 0.0, s2 = 0.0;
    const auto lag = static_cast<std::int64_t>(lp.trunc_lag);
    const std::int64_t lo = lp.sided == Sidedness::OneSided ? 0 : -lag;
    for (std::int64_t j = lo; j <= lag; ++j) {
        const double w = coeff(lp.sigma, j);
        s1 += w;
        s2 += w * w;
    }
    return Matrix{{var * s2 + mean * mean * s1 * s1}};
}

namespace detail {

struct Outcome {
    double norm_err = 0.0;
    bool diverged = false;
    bool degenerate = false;
};

inline Outcome score(std::span<const double> h_n, const Vector& h_true, const Vector& h_init,
                     bool diverged) {
    Outcome o;
    o.diverged = diverged;
    if (diverged) {
        o.norm_err = std::numeric_limits<double>::quiet_NaN();
        return o;
    }
    if (distance(h_init, h_true) == 0.0) {
        o.degenerate = true;
        return o;
    }
    o.norm_err = normalized_error(h_n, h_true, h_init);
    return o;
}

/// Runs one iterate per chi off a single coefficient stream and scores each
/// at every n in ns (sorted ascending). The guard is checked exactly where
/// run() checks it, so every outcome matches an independent run() of n steps.
template <CoeffSource Source>
std::vector<std::vector<Outcome>> run_lockstep(Source& source, const Vector& h_init,
                                               const Vector& h_true,
                                               const std::vector<double>& chis,
                                               const std::vector<std::uint64_t>& ns, double guard) {
    const std::size_t m = chis.size();
    std::vector<GainSchedule> gains;
    for (double chi : chis) gains.emplace_back(chi);
    std::vector<SAState> states(m, SAState{1, h_init});
    std::vector<bool> dead(m, false);
    std::vector<std::vector<Outcome>> out(m, std::vector<Outcome>(ns.size()));
    const std::uint64_t n_max = ns.empty() ? 0 : ns.back();

    CoeffPair pair;
    std::size_t next = 0;
    for (std::uint64_t step = 1; step <= n_max; ++step) {
        for (std::size_t i = 0; i < m; ++i) {
            if (!dead[i] && exceeds_guard(states[i].h, guard)) dead[i] = true;
        }
        if (std::all_of(dead.begin(), dead.end(), [](bool b) { return b; })) {
            for (; next < ns.size(); ++next)
                for (std::size_t i = 0; i < m; ++i) out[i][next] = score({}, h_true, h_init, true);
            return out;
        }
        source.next(pair);
        for (std::size_t i = 0; i < m; ++i) {
            if (!dead[i]) sa_step_inplace(states[i], pair, gains[i](states[i].k));
        }
        while (next < ns.size() && ns[next] == step) {
            for (std::size_t i = 0; i < m; ++i) {
                const bool div = dead[i] || exceeds_guard(states[i].h, guard);
                out[i][next] = score(states[i].h, h_true, h_init, div);
            }
            ++next;
        }
    }
    return out;
}

} // namespace detail

/// One trial of one cell through run(). Deterministic in (config, cell, trial_id).
inline TrialResult run_trial(const ExperimentConfig& c, const Cell& cell, std::uint64_t trial_id) {
    c.validate();
    if (cell.n < 1) throw ConfigError("n_grid", "n must be at least 1");
    ExperimentConfig cc = c;
    if (cell.sigma) cc.sigma = cell.sigma;
    auto source = make_scenario_source(cc, cell.beta, trial_id);
    const GainSchedule gain(cell.chi);
    RunOptions opts;
    opts.guard = effective_guard(cc);
    const Trajectory traj =
        std::visit([&](auto& s) { return run(s, cc.h_init, gain, cell.n, opts); }, source);
    const auto o = detail::score(traj.final.h, cc.h_true, cc.h_init, traj.diverged);
    return TrialResult{trial_id, cell.chi, cell.beta, cc.sigma, cell.n, o.norm_err,
                       o.diverged, o.degenerate, c.base_seed};
}

/// Same scoring as run_trial for an arbitrary coefficient source.
template <CoeffSource Source>
TrialResult run_trial_with(Source& source, const Vector& h_init, const Vector& h_true,
                           double chi, std::uint64_t n, double guard) {
    RunOptions opts;
    opts.guard = guard;
    const Trajectory traj = run(source, h_init, GainSchedule(chi), n, opts);
    const auto o = detail::score(traj.final.h, h_true, h_init, traj.diverged);
    TrialResult r;
    r.chi = chi;
    r.n = n;
    r.norm_err = o.norm_err;
    r.diverged = o.diverged;
    r.degenerate_start = o.degenerate;
    return r;
}

// ---------------------------------------------------------------------------
// grids

struct CellStats {
    double chi = 0.0;
    double beta = 0.0;
    std::optional<double> sigma;
    std::uint64_t n = 0;
    std::uint64_t trials = 0;
    std::uint64_t diverged = 0;
    std::uint64_t degenerate = 0;
    double mean_norm_err = std::numeric_limits<double>::quiet_NaN();
    double stderr_norm_err = std::numeric_limits<double>::quiet_NaN();
    double min_norm_err = std::numeric_limits<double>::quiet_NaN();
    double max_norm_err = std::numeric_limits<double>::quiet_NaN();

    bool empty() const noexcept { return diverged >= trials; }
};

/// Predicted range (M, 1] for one beta column.
struct ColumnThreshold {
    double beta = 0.0;
    std::optional<double> alpha; // nullopt when beta <= 3
    double sigma = 1.0;
    std::optional<double> M;
};

struct BestChiRow {
    double beta = 0.0;
    std::uint64_t n = 0;
    double best_chi = 0.0;
    double mean_norm_err = 0.0;
    std::optional<double> M;
    std::optional<double> resulting_gamma;
    bool in_predicted_range = false;
};

struct ReportMetadata {
    std::string algorithm_id;
    std::string config_text;
    std::string timestamp;
};

struct GridReport {
    ExperimentConfig config;
    std::vector<CellStats> cells; // sorted by (n, beta, chi)
    std::vector<ColumnThreshold> thresholds;
    std::vector<BestChiRow> best;
    ReportMetadata metadata;

    const CellStats* find(double chi, double beta, std::uint64_t n) const {
        for (const auto& c : cells)
            if (c.chi == chi && c.beta == beta && c.n == n) return &c;
        return nullptr;
    }
};

inline ColumnThreshold column_threshold(const ExperimentConfig& c, double beta) {
    ColumnThreshold t;
    t.beta = beta;
    t.sigma = c.sigma.value_or(1.0);
    if (beta > 3.0) {
        t.alpha = tail_index_squared(component_spec(c, beta));
        t.M = marcinkiewicz_threshold(*t.alpha, t.sigma);
    }
    return t;
}

/// Mean and standard error over non-diverged trials, reduced in trial order.
inline CellStats aggregate(const Cell& cell, const std::vector<TrialResult>& sorted_trials) {
    CellStats s;
    s.chi = cell.chi;
    s.beta = cell.beta;
    s.sigma = cell.sigma;
    s.n = cell.n;
    s.trials = sorted_trials.size();
    double sum = 0.0;
    std::uint64_t used = 0;
    for (const auto& t : sorted_trials) {
        if (t.diverged) {
            ++s.diverged;
            continue;
        }
        if (t.degenerate_start) ++s.degenerate;
        sum += t.norm_err;
        ++used;
        s.min_norm_err = used == 1 ? t.norm_err : std::min(s.min_norm_err, t.norm_err);
        s.max_norm_err = used == 1 ? t.norm_err : std::max(s.max_norm_err, t.norm_err);
    }
    if (used == 0) return s;
    s.mean_norm_err = sum / static_cast<double>(used);
    if (used >= 2) {
        double ss = 0.0;
        for (const auto& t : sorted_trials) {
            if (!t.diverged) ss += (t.norm_err - s.mean_norm_err) * (t.norm_err - s.mean_norm_err);
        }
        s.stderr_norm_err = std::sqrt(ss / static_cast<double>(used - 1)) /
                            std::sqrt(static_cast<double>(used));
    }
    return s;
}

namespace detail {

inline std::optional<BestChiRow> best_for_column(const GridReport& report, double beta,
                                                 std::uint64_t n,
                                                 std::optional<std::pair<double, double>> restrict_to) {
    std::vector<double> chis = report.config.chi_grid;
    std::sort(chis.begin(), chis.end());
    const CellStats* best = nullptr;
    for (double chi : chis) {
        if (restrict_to && !(chi > restrict_to->first && chi <= restrict_to->second)) continue;
        const CellStats* cell = report.find(chi, beta, n);
        if (!cell || cell->empty()) continue;
        if (!best || cell->mean_norm_err < best->mean_norm_err) best = cell;
    }
    if (!best) return std::nullopt;
    BestChiRow row;
    row.beta = beta;
    row.n = n;
    row.best_chi = best->chi;
    row.mean_norm_err = best->mean_norm_err;
    const ColumnThreshold t = column_threshold(report.config, beta);
    row.M = t.M;
    if (t.alpha) row.resulting_gamma = rate_bound(best->chi, *t.alpha, t.sigma);
    row.in_predicted_range = t.M && best->chi > *t.M && best->chi <= 1.0;
    return row;
}

} // namespace detail

/// Argmin of the cell mean over chi per (beta, n) column, ties to the smaller
/// chi. restrict_to = (lo, hi] limits the candidate chi values.
inline std::vector<BestChiRow> best_chi(const GridReport& report,
                                        std::optional<std::pair<double, double>> restrict_to = {}) {
    std::vector<std::uint64_t> ns = report.config.n_grid;
    std::sort(ns.begin(), ns.end());
    std::vector<double> betas = report.config.beta_grid;
    std::sort(betas.begin(), betas.end());
    std::vector<BestChiRow> rows;
    for (auto n : ns) {
        for (double beta : betas) {
            auto row = detail::best_for_column(report, beta, n, restrict_to);
            if (!row) {
                throw Error(ErrorKind::EmptyColumn, "no non-diverged cell for beta " +
                                                        format_double(beta) + ", n " +
                                                        std::to_string(n));
            }
            rows.push_back(*row);
        }
    }
    return rows;
}

/// Best chi per column restricted to that column's own (M, 1].
inline std::vector<BestChiRow> best_chi_in_predicted_range(const GridReport& report) {
    std::vector<BestChiRow> rows;
    for (double beta : report.config.beta_grid) {
        const ColumnThreshold t = column_threshold(report.config, beta);
        if (!t.M) continue;
        GridReport one = report;
        one.config.beta_grid = {beta};
        auto part = best_chi(one, std::pair{*t.M, 1.0});
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

inline unsigned default_thread_count() {
    if (const char* env = std::getenv("SALAB_THREADS")) {
        if (const auto v = parse_u64(env); v && *v > 0) return static_cast<unsigned>(*v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// All trials of all cells. Each task is one (beta, trial) pair driving every
/// chi and n off one coefficient stream; tasks run on `threads` workers and
/// are reduced in (cell, trial_id) order so results do not depend on
/// scheduling.
inline GridReport run_grid(const ExperimentConfig& c, unsigned threads = 1) {
    c.validate();
    threads = std::max(1u, threads);
    std::vector<double> chis = c.chi_grid;
    std::sort(chis.begin(), chis.end());
    chis.erase(std::unique(chis.begin(), chis.end()), chis.end());
    std::vector<double> betas = c.beta_grid;
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
    std::vector<std::uint64_t> ns = c.n_grid;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    const std::size_t n_tasks = betas.size() * c.trials;
    std::vector<std::vector<std::vector<detail::Outcome>>> results(n_tasks);
    const double guard = effective_guard(c);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) {
            const double beta = betas[t / c.trials];
            const std::uint64_t trial = t % c.trials;
            auto source = make_scenario_source(c, beta, trial);
            results[t] = std::visit(
                [&](auto& s) { return detail::run_lockstep(s, c.h_init, c.h_true, chis, ns, guard); },
                source);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    GridReport report;
    report.config = c;
    report.config.chi_grid = chis;
    report.config.beta_grid = betas;
    report.config.n_grid = ns;
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        for (std::size_t bi = 0; bi < betas.size(); ++bi) {
            for (std::size_t ci = 0; ci < chis.size(); ++ci) {
                const Cell cell{chis[ci], betas[bi], c.sigma, ns[ni]};
                std::vector<TrialResult> trials;
                trials.reserve(c.trials);
                for (std::uint64_t tr = 0; tr < c.trials; ++tr) {
                    const auto& o = results[bi * c.trials + tr][ci][ni];
                    trials.push_back(TrialResult{tr, cell.chi, cell.beta, cell.sigma, cell.n,
                                                 o.norm_err, o.diverged, o.degenerate,
                                                 c.base_seed});
                }
                report.cells.push_back(aggregate(cell, trials));
            }
        }
    }
    for (double beta : betas) report.thresholds.push_back(column_threshold(c, beta));
    // Columns where every trial diverged have no best chi.
    for (auto n : ns)
        for (double beta : betas)
            if (auto row = detail::best_for_column(report, beta, n, std::nullopt)) report.best.push_back(*row);
    report.metadata.algorithm_id = std::string(RngStream::algorithm_id);
    report.metadata.config_text = to_config_text(report.config);
    report.metadata.timestamp = utc_timestamp();
    return report;
}

} // namespace salab
