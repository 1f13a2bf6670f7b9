// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// SALAB_THREADS sets the worker count for the grid runs.

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "salab/salab.hpp"

using namespace salab;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

const std::vector<double> kPowerLawChis{0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.98, 1.0};

// ---------------------------------------------------------------------------

Verdict exact_formulas() {
    Verdict v;
    const double expect_m[] = {0.8, 0.67, 0.57};
    const double betas[] = {3.5, 4.0, 4.5};
    for (int i = 0; i < 3; ++i) {
        const double alpha = tail_index_squared(DistributionSpec::power_law(1.0, betas[i]));
        const double m = marcinkiewicz_threshold(alpha, 1.0);
        v.require(round2(m) == expect_m[i], "M(beta " + num(betas[i]) + ") = " + num(m));
    }
    for (double beta : {4.0, 4.5, 5.0}) {
        const double alpha = tail_index_squared(DistributionSpec::power_law(0.01, beta));
        const double m = marcinkiewicz_threshold(alpha, 0.65);
        v.require(std::abs(m - 0.7) < 1e-12, "M(beta " + num(beta) + ", sigma 0.65) = " + num(m));
    }
    // Best chi 0.85 / 0.85 / 0.8 for beta 3.5 / 4 / 4.5 at n = 750000.
    const double best_iid[] = {0.85, 0.85, 0.8};
    const double gamma_iid[] = {0.05, 0.18, 0.23};
    for (int i = 0; i < 3; ++i) {
        const double alpha = tail_index_squared(DistributionSpec::power_law(1.0, betas[i]));
        const double g = rate_bound(best_iid[i], alpha, 1.0);
        v.require(round2(g) == gamma_iid[i], "gamma(" + num(best_iid[i]) + ", beta " + num(betas[i]) + ") = " + num(g));
    }
    // LRD: best chi 0.85 / 0.8 / 0.8 for beta 4 / 4.5 / 5.
    const double lrd_beta[] = {4.0, 4.5, 5.0};
    const double best_lrd[] = {0.85, 0.8, 0.8};
    const double gamma_lrd[] = {0.15, 0.1, 0.1};
    for (int i = 0; i < 3; ++i) {
        const double alpha = tail_index_squared(DistributionSpec::power_law(0.01, lrd_beta[i]));
        const double g = rate_bound(best_lrd[i], alpha, 0.65);
        v.require(round2(g) == gamma_lrd[i], "lrd gamma(" + num(best_lrd[i]) + ") = " + num(g));
    }
    return v;
}

Verdict oracle_equivalence() {
    Verdict v;
    // Hand examples: h = 0, A = 1, b = 2, chi = 1 gives 2, then 1 at k = 2 with A = 2, b = 2.
    SAState s{1, {0.0}};
    s = sa_step(s, CoeffPair{Matrix{{1.0}}, {2.0}, 1}, GainSchedule(1.0));
    v.require(s.h[0] == 2.0 && s.k == 2, "first hand step");
    s = sa_step(s, CoeffPair{Matrix{{2.0}}, {2.0}, 2}, GainSchedule(1.0));
    v.require(s.h[0] == 1.0 && s.k == 3, "second hand step");
    s = sa_step(s, CoeffPair{Matrix{{4.0}}, {4.0}, 3}, GainSchedule(0.5));
    v.require(s.h[0] == 1.0, "fixed point");

    auto rng = derive_stream(2024, 0, 0);
    double worst = 0.0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t d = 1 + rng.next_u64() % 3;
        const std::uint64_t n = 1 + rng.next_u64() % 100;
        const double chi = std::vector<double>{0.55, 0.8, 1.0}[rng.next_u64() % 3];
        std::vector<CoeffPair> pairs;
        for (std::uint64_t k = 1; k <= n; ++k) {
            Vector x(d), b(d);
            for (auto& e : x) e = rng.uniform() - 0.5;
            for (auto& e : b) e = rng.uniform() - 0.5;
            pairs.push_back({Matrix::outer(x, x), b, k});
        }
        Vector h1(d);
        for (auto& e : h1) e = 10.0 * (rng.uniform() - 0.5);
        std::size_t idx = 0;
        struct Replay {
            const std::vector<CoeffPair>* p;
            std::size_t* i;
            void next(CoeffPair& out) { out = (*p)[(*i)++]; }
        } replay{&pairs, &idx};
        const auto traj = run(replay, h1, GainSchedule(chi), n);
        const Vector closed = closed_form_linear(h1, pairs, GainSchedule(chi));
        const double rel = distance(traj.final.h, closed) / std::max(1.0, norm2(closed));
        worst = std::max(worst, rel);
    }
    v.require(worst <= 1e-10, "200 instances, worst relative gap " + num(worst));
    return v;
}

Verdict sampler_validation() {
    Verdict v;
    const std::size_t m = 1000000;
    auto s = derive_stream(3, 0, 0);
    std::vector<double> xs(m);
    double sum = 0.0;
    for (auto& x : xs) {
        x = power_law_sample(s, 1.0, 4.0);
        sum += x;
    }
    const double mean = sum / m;
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double f = power_law_cdf(xs[i], 1.0, 4.0);
        ks = std::max({ks, f - double(i) / m, double(i + 1) / m - f});
    }
    v.require(ks < 0.002, "PL KS " + num(ks));
    v.require(std::abs(mean / 1.5 - 1.0) < 0.02, "PL(1,4) mean " + num(mean));

    // Closed-form folded-t mean against quadrature of the density.
    for (double beta : {3.5, 4.0, 4.5}) {
        const double closed = folded_t_mean(beta);
        boost::math::quadrature::exp_sinh<double> integrator;
        const double quad = integrator.integrate([&](double x) { return x * folded_t_density(x, beta); });
        v.require(std::abs(quad / closed - 1.0) < 1e-8, "Ft(" + num(beta) + ") closed form vs quadrature");
    }
    auto t = derive_stream(4, 0, 0);
    double tsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) tsum += folded_t_sample(t, 4.0);
    const double tmean = tsum / m;
    v.require(std::abs(tmean / folded_t_mean(4.0) - 1.0) < 0.02,
              "Ft(4) mean " + num(tmean) + " vs " + num(folded_t_mean(4.0)));

    bool flagged = true;
    for (double r : {3.0, 3.5}) {
        try {
            power_law_moment(1.0, 4.0, r);
            flagged = false;
        } catch (const Error& e) {
            flagged = flagged && e.kind() == ErrorKind::MomentDiverges;
        }
    }
    v.require(flagged, "moments r >= beta - 1 flagged divergent");
    return v;
}

Verdict psd_prefix_suite() {
    Verdict v;
    auto rng = derive_stream(5, 0, 0);
    double worst_slack = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t d = 1 + rng.next_u64() % 4;
        const std::size_t len = 1 + rng.next_u64() % 20;
        std::vector<Matrix> ms;
        for (std::size_t i = 0; i < len; ++i) {
            Matrix b(d, d);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c) b(r, c) = rng.uniform() - 0.5;
            ms.push_back(b * b.transposed());
        }
        worst_slack = std::min(worst_slack, lemma3_slack(ms).min_prefix);
    }
    v.require(worst_slack >= -1e-9, "min slack " + num(worst_slack));

    bool sandwich = true;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t d = 1 + rng.next_u64() % 5;
        Matrix a(d, d);
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) a(r, c) = 4.0 * (rng.uniform() - 0.5);
        const double op = operator_norm(a), tr = triple_norm(a);
        sandwich = sandwich && op <= tr * (1 + 1e-12) && tr <= std::sqrt(double(d)) * op * (1 + 1e-12);
    }
    v.require(sandwich, "norm sandwich on 1000 matrices");
    return v;
}

// Criteria 5, 6, 7a and 10 share these runs.
struct PowerLawRuns {
    std::vector<GridReport> reports; // one per base seed
    ExperimentConfig config;
};

PowerLawRuns run_power_law_grid(unsigned threads) {
    PowerLawRuns out;
    out.config = ExperimentConfig::defaults(Scenario::IidPowerLaw);
    out.config.chi_grid = kPowerLawChis;
    out.config.beta_grid = {3.5, 4.0, 4.5};
    out.config.n_grid = {100000};
    out.config.trials = 100;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        out.config.base_seed = seed;
        out.reports.push_back(run_grid(out.config, threads));
    }
    return out;
}

double cell_mean(const GridReport& r, double chi, double beta, std::uint64_t n) {
    const auto* c = r.find(chi, beta, n);
    return c ? c->mean_norm_err : std::nan("");
}

Verdict power_law_grid_check(const PowerLawRuns& runs) {
    Verdict v;
    int band = 0, ordinal = 0, exploding = 0;
    std::string means;
    for (const auto& r : runs.reports) {
        const double m75 = cell_mean(r, 0.75, 4.5, 100000);
        const double m65 = cell_mean(r, 0.65, 4.5, 100000);
        const double m55 = cell_mean(r, 0.55, 4.5, 100000);
        const double m95 = cell_mean(r, 0.95, 4.5, 100000);
        band += m75 >= 0.0082 / 2.0 && m75 <= 0.0082 * 2.0;
        ordinal += m75 < m65 && m65 < m55;
        exploding += m95 > m75;
        means += (means.empty() ? "" : ", ") + num(m55) + "/" + num(m65) + "/" + num(m75) + "/" + num(m95);
    }
    v.require(band >= 3, "chi 0.75 within 2x of 0.0082 in " + std::to_string(band) + "/4 seeds");
    v.require(ordinal >= 3, "r(0.75) < r(0.65) < r(0.55) in " + std::to_string(ordinal) + "/4 seeds");
    v.require(exploding >= 3, "r(0.95) > r(0.75) in " + std::to_string(exploding) + "/4 seeds");
    v.detail += "; means at chi 0.55/0.65/0.75/0.95 per seed: " + means;
    return v;
}

Verdict best_chi_membership(const PowerLawRuns& runs) {
    Verdict v;
    for (std::size_t i = 0; i < runs.reports.size(); ++i) {
        for (const auto& row : best_chi(runs.reports[i])) {
            v.require(row.in_predicted_range, "seed " + std::to_string(i + 1) + " beta " + num(row.beta) +
                                                  ": best chi " + num(row.best_chi) + ", M " + num(*row.M));
        }
    }
    return v;
}

Verdict dichotomy(const PowerLawRuns& runs) {
    Verdict v;
    int below = 0;
    std::string vals;
    for (const auto& r : runs.reports) {
        const double m = cell_mean(r, 0.8, 4.5, 100000);
        below += m < 0.02;
        vals += (vals.empty() ? "" : ", ") + num(m);
    }
    v.require(below >= 3, "r(chi 0.8, beta 4.5, n 1e5) < 0.02 in " + std::to_string(below) + "/4 seeds (" + vals + ")");

    // Partial sums of A_k - E A_k for beta = 4, where the squares have tail index 1.5.
    auto cfg = ExperimentConfig::defaults(Scenario::IidPowerLaw);
    cfg.chi_grid = {0.8};
    cfg.beta_grid = {4.0};
    cfg.n_grid = {1000000};
    const Matrix target = expected_coefficient(cfg, 4.0);
    const std::uint64_t n = 1000000;
    int neg = 0, nonneg = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.base_seed = 100 + seed;
        CoeffStream<IidPairGenerator> stream(IidPairGenerator(iid_pair_config(cfg, 4.0), cfg.base_seed, 0));
        PartialSumScaler scaler(target, {1.2, 1.8}, geometric_grid(n));
        CoeffPair pair;
        for (std::uint64_t k = 0; k < n; ++k) {
            stream.next(pair);
            scaler.push(pair.A);
        }
        const auto curves = scaler.curves();
        neg += curves[0].slope && *curves[0].slope < 0.0;
        nonneg += curves[1].slope && *curves[1].slope >= 0.0;
    }
    v.require(neg >= 16, "p = 1.2 slope negative in " + std::to_string(neg) + "/20 seeds");
    v.require(nonneg >= 16, "p = 1.8 slope non-negative in " + std::to_string(nonneg) + "/20 seeds");
    return v;
}

Verdict lrd_decoupling(unsigned threads) {
    Verdict v;
    auto cfg = ExperimentConfig::defaults(Scenario::LrdPowerLaw);
    cfg.sigma = 0.65;
    cfg.chi_grid = {0.55, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.98, 1.0};
    cfg.beta_grid = {4.0};
    cfg.n_grid = {10000};
    cfg.trunc_lag = 10000;
    cfg.trials = 20;
    cfg.base_seed = 1;
    const auto report = run_grid(cfg, threads);
    const auto best = best_chi(report).front();
    v.require(best.best_chi > 0.7 && best.best_chi <= 1.0, "best chi " + num(best.best_chi));
    const double m55 = cell_mean(report, 0.55, 4.0, 10000);
    const double m80 = cell_mean(report, 0.8, 4.0, 10000);
    v.require(m55 >= 10.0 * m80, "r(0.55) / r(0.8) = " + num(m55) + " / " + num(m80) + " = " + num(m55 / m80));
    return v;
}

Verdict residual_diagnostic() {
    Verdict v;
    auto cfg = ExperimentConfig::defaults(Scenario::IidPowerLaw);
    cfg.chi_grid = {0.8};
    cfg.beta_grid = {4.0};
    cfg.n_grid = {1000000};
    const std::uint64_t n = 1000000;
    std::vector<std::uint64_t> grid;
    for (std::uint64_t g = 1000; g < n; g *= 2) grid.push_back(g);
    grid.push_back(n);
    int halved = 0, bounded = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CoeffStream<IidPairGenerator> stream(IidPairGenerator(iid_pair_config(cfg, 4.0), 300 + seed, 0));
        ResidualAverage residual(cfg.h_true, 0.8);
        GrowthFunctional growth(0.8, grid);
        CoeffPair pair;
        double at_1e4 = 0.0;
        for (std::uint64_t k = 1; k <= n; ++k) {
            stream.next(pair);
            residual.push(pair);
            growth.push(pair);
            if (k == 10000) at_1e4 = residual.value();
        }
        halved += residual.value() <= 0.5 * at_1e4;
        const auto& g = growth.values();
        double mx = 0.0;
        for (const auto& [k, val] : g) mx = std::max(mx, val);
        bounded += mx < 2.0 * g.front().second;
    }
    v.require(halved >= 16, "residual_average halves from 1e4 to 1e6 in " + std::to_string(halved) + "/20 seeds");
    v.require(bounded == 20, "growth_functional max < 2x its n = 1e3 value in " + std::to_string(bounded) + "/20 seeds");
    return v;
}

Verdict determinism(const PowerLawRuns& runs) {
    Verdict v;
    ExperimentConfig cfg = runs.config;
    cfg.base_seed = 1;
    const std::string one = to_csv(runs.reports.front());
    const std::string eight = to_csv(run_grid(cfg, 8));
    v.require(one == eight, "CSV from 1 and 8 threads byte-identical (" + std::to_string(one.size()) + " bytes)");
    return v;
}

} // namespace

int main() {
    const unsigned threads = default_thread_count();
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<Verdict()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = f();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d: %s [%.1fs] %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                    v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    };

    report(1, "exact threshold and rate formulas", exact_formulas);
    report(2, "recursion vs closed-form oracle", oracle_equivalence);
    report(3, "sampler validation", sampler_validation);
    report(4, "PSD prefix slack and norm sandwich", psd_prefix_suite);

    PowerLawRuns runs;
    const auto t0 = std::chrono::steady_clock::now();
    runs = run_power_law_grid(1);
    std::printf("  (power-law grid: 4 seeds x 3 beta x 11 chi x 100 trials at n = 1e5 in %.1fs)\n",
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    report(5, "desk-scale power-law grid", [&] { return power_law_grid_check(runs); });
    report(6, "best chi inside (M, 1]", [&] { return best_chi_membership(runs); });
    report(7, "convergence/divergence dichotomy", [&] { return dichotomy(runs); });
    report(8, "LRD decoupling, scaled", [&] { return lrd_decoupling(threads); });
    report(9, "residual average and growth functional", residual_diagnostic);
    report(10, "thread-count determinism", [&] { return determinism(runs); });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
