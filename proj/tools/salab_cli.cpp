// salab command line: grid runs, single trials, stream diagnostics,
// threshold arithmetic and sampler checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "salab/salab.hpp"

namespace {

using namespace salab;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "csv";
    std::optional<unsigned> threads;
    std::optional<std::size_t> trunc_lag;
};

std::string g4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// Writes to --out when given, stdout otherwise.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    void finish() {
        stream().flush();
        if (!stream()) throw Error(ErrorKind::Io, "write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

ExperimentConfig load_with_overrides(const std::string& path, const Globals& g) {
    ExperimentConfig c = load_config(path);
    if (g.seed) c.base_seed = *g.seed;
    if (g.trunc_lag) c.trunc_lag = *g.trunc_lag;
    c.validate();
    return c;
}

ReportFormat parse_format(const std::string& f) {
    if (f == "csv") return ReportFormat::Csv;
    if (f == "json") return ReportFormat::Json;
    throw ConfigError("format", "expected csv or json");
}

int cmd_grid(const std::string& config_path, const Globals& g) {
    const ExperimentConfig c = load_with_overrides(config_path, g);
    const ReportFormat fmt = parse_format(g.format);
    const unsigned threads = g.threads.value_or(default_thread_count());
    const GridReport report = run_grid(c, threads);
    Output out(g.out);
    emit_report(report, fmt, out.stream());
    out.finish();
    std::cerr << "best chi per (beta, n):\n";
    for (const auto& b : report.best) {
        std::cerr << "  beta " << format_double(b.beta) << "  n " << b.n << "  chi " << format_double(b.best_chi)
                  << "  mean " << g4(b.mean_norm_err);
        if (b.M) std::cerr << "  M " << g4(*b.M) << (b.in_predicted_range ? "  in (M, 1]" : "  outside (M, 1]");
        if (b.resulting_gamma) std::cerr << "  gamma " << g4(*b.resulting_gamma);
        std::cerr << '\n';
    }
    for (const auto& cell : report.cells)
        if (cell.empty())
            std::cerr << "  empty cell: chi " << format_double(cell.chi) << " beta " << format_double(cell.beta)
                      << " n " << cell.n << " (all trials diverged)\n";
    return 0;
}

struct CellArgs {
    std::string config;
    double chi = 0.8;
    std::optional<double> beta;
    std::optional<std::uint64_t> n;
    std::uint64_t trial = 0;
};

double pick_beta(const CellArgs& a, const ExperimentConfig& c) { return a.beta.value_or(c.beta_grid.front()); }

std::uint64_t pick_n(const CellArgs& a, const ExperimentConfig& c) {
    return a.n.value_or(*std::max_element(c.n_grid.begin(), c.n_grid.end()));
}

int cmd_trial(const CellArgs& a, const Globals& g) {
    const ExperimentConfig c = load_with_overrides(a.config, g);
    const double beta = pick_beta(a, c);
    const std::uint64_t n = pick_n(a, c);
    auto source = make_scenario_source(c, beta, a.trial);
    RunOptions opts;
    opts.guard = effective_guard(c);
    opts.checkpoint_at = geometric_grid(n);
    const Trajectory traj =
        std::visit([&](auto& s) { return run(s, c.h_init, GainSchedule(a.chi), n, opts); }, source);

    Output out(g.out);
    auto& os = out.stream();
    os << "# scenario " << to_string(c.scenario) << "  chi " << format_double(a.chi) << "  beta "
       << format_double(beta) << "  trial " << a.trial << "  seed " << c.base_seed << '\n';
    os << "steps,norm_err";
    for (std::size_t i = 0; i < c.d; ++i) os << ",h" << i;
    os << '\n';
    const bool degenerate = distance(c.h_init, c.h_true) == 0.0;
    for (const auto& cp : traj.checkpoints) {
        os << cp.steps << ',' << format_double(degenerate ? 0.0 : normalized_error(cp.h, c.h_true, c.h_init));
        for (double v : cp.h) os << ',' << format_double(v);
        os << '\n';
    }
    if (traj.diverged) os << "# diverged at k = " << traj.divergence_k.value_or(0) << '\n';
    out.finish();
    return 0;
}

int cmd_diag(const CellArgs& a, const std::vector<double>& ps, const Globals& g) {
    const ExperimentConfig c = load_with_overrides(a.config, g);
    const double beta = pick_beta(a, c);
    const std::uint64_t n = pick_n(a, c);
    const auto grid = geometric_grid(n);
    PartialSumScaler scaler(expected_coefficient(c, beta), ps, grid);
    ResidualAverage residual(c.h_true, a.chi);
    GrowthFunctional growth(a.chi, grid);
    std::vector<std::pair<std::uint64_t, double>> residual_curve;
    auto source = make_scenario_source(c, beta, a.trial);
    CoeffPair pair;
    std::size_t next = 0;
    for (std::uint64_t k = 1; k <= n; ++k) {
        std::visit([&](auto& s) { s.next(pair); }, source);
        scaler.push(pair.A);
        residual.push(pair);
        growth.push(pair);
        if (next < grid.size() && grid[next] == k) {
            residual_curve.emplace_back(k, residual.value());
            ++next;
        }
    }

    Output out(g.out);
    auto& os = out.stream();
    os << "# scenario " << to_string(c.scenario) << "  beta " << format_double(beta) << "  chi "
       << format_double(a.chi) << "  trial " << a.trial << "  n " << n << '\n';
    os << "series,param,n,value\n";
    for (const auto& curve : scaler.curves()) {
        for (const auto& [k, v] : curve.grid)
            os << "partial_sum," << format_double(curve.p) << ',' << k << ',' << format_double(v) << '\n';
    }
    for (const auto& [k, v] : residual_curve)
        os << "residual_average," << format_double(a.chi) << ',' << k << ',' << format_double(v) << '\n';
    for (const auto& [k, v] : growth.values())
        os << "growth_functional," << format_double(a.chi) << ',' << k << ',' << format_double(v) << '\n';
    for (const auto& curve : scaler.curves()) {
        os << "# slope p = " << format_double(curve.p) << ": "
           << (curve.slope ? g4(*curve.slope) : std::string("undefined")) << '\n';
    }
    out.finish();
    return 0;
}

int cmd_threshold(std::optional<double> beta, std::optional<double> alpha, const std::string& dist, double sigma,
                  std::optional<double> chi) {
    if (beta.has_value() == alpha.has_value()) throw ConfigError("beta", "give exactly one of --beta or --alpha");
    if (beta) {
        const DistKind kind = dist_kind_from_string(dist);
        alpha = tail_index_squared(DistributionSpec{kind, 1.0, *beta});
    }
    const auto p = ThresholdParams::compute(*alpha, sigma, chi);
    std::cout << "alpha = " << g4(p.alpha) << '\n' << "M = " << g4(p.M) << '\n';
    std::cout << "predicted range = (" << g4(p.M) << ", 1]\n";
    if (p.gamma0) std::cout << "gamma0 = " << g4(*p.gamma0) << '\n';
    return 0;
}

struct DistArgs {
    std::string dist = "power-law";
    double beta = 4.0;
    double x_min = 1.0;
    std::uint64_t samples = 1000000;
};

int cmd_dist_check(const DistArgs& a, const Globals& g) {
    const DistributionSpec spec{dist_kind_from_string(a.dist), a.x_min, a.beta};
    const Sampler sampler(spec);
    auto stream = derive_stream(g.seed.value_or(0), 0, 0);
    std::vector<double> xs(a.samples);
    for (auto& x : xs) x = sampler(stream);

    Output out(g.out);
    auto& os = out.stream();
    os << "distribution " << to_string(spec.kind) << "  beta " << format_double(a.beta);
    if (is_power_law(spec.kind)) os << "  x_min " << format_double(a.x_min);
    os << "  samples " << a.samples << '\n';

    // KS against the uncentered law.
    const double shift = is_centered(spec.kind) ? raw_mean(spec) : 0.0;
    std::vector<double> raw(xs);
    for (auto& x : raw) x += shift;
    std::sort(raw.begin(), raw.end());
    double ks = 0.0;
    const double m = static_cast<double>(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double f = is_power_law(spec.kind) ? power_law_cdf(raw[i], spec.x_min, spec.beta)
                                                 : folded_t_cdf(raw[i], spec.beta);
        ks = std::max({ks, f - static_cast<double>(i) / m, static_cast<double>(i + 1) / m - f});
    }
    os << "ks_distance " << g4(ks) << '\n';

    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= m;
    os << "sample_mean " << g4(mean);
    if (spec.beta > 2.0) os << "  expected " << g4(is_centered(spec.kind) ? 0.0 : raw_mean(spec));
    else os << "  expected infinite";
    os << '\n';

    for (double r : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        double acc = 0.0;
        for (double x : raw) acc += std::pow(x, r);
        os << "moment r=" << format_double(r) << "  sample " << g4(acc / m) << "  ";
        if (r >= spec.beta - 1.0) {
            os << "divergent";
        } else if (is_power_law(spec.kind)) {
            os << "expected " << g4(power_law_moment(spec.x_min, spec.beta, r));
        } else if (r == 1.0) {
            os << "expected " << g4(folded_t_mean(spec.beta));
        } else if (r == 2.0) {
            os << "expected " << g4(raw_second_moment(spec));
        } else {
            os << "finite";
        }
        os << '\n';
    }
    out.finish();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"salab: stochastic approximation with heavy-tailed and long-range dependent data"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Base seed (overrides the config)");
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--format", g.format, "Report format: csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", g.threads, "Worker threads (default SALAB_THREADS or hardware)")
        ->check(CLI::PositiveNumber);
    app.add_option("--trunc-lag", g.trunc_lag, "Linear-process truncation lag L")->check(CLI::PositiveNumber);

    std::string grid_config;
    auto* grid = app.add_subcommand("grid", "Run every cell of an experiment config");
    grid->add_option("--config", grid_config, "Config file")->required();

    CellArgs trial_args;
    auto* trial = app.add_subcommand("trial", "Run one trial of one cell and print checkpoints");
    trial->add_option("--config", trial_args.config, "Config file")->required();
    trial->add_option("--chi", trial_args.chi, "Gain exponent")->required();
    trial->add_option("--beta", trial_args.beta, "Tail parameter (default: first in beta_grid)");
    trial->add_option("--n", trial_args.n, "Steps (default: largest in n_grid)");
    trial->add_option("--trial", trial_args.trial, "Trial id");

    CellArgs diag_args;
    std::vector<double> ps{1.2, 1.8};
    auto* diag = app.add_subcommand("diag", "Partial-sum scaling, residual average and growth functional");
    diag->add_option("--config", diag_args.config, "Config file")->required();
    diag->add_option("--chi", diag_args.chi, "Exponent for residual_average and growth_functional");
    diag->add_option("--beta", diag_args.beta, "Tail parameter (default: first in beta_grid)");
    diag->add_option("--n", diag_args.n, "Stream length (default: largest in n_grid)");
    diag->add_option("--trial", diag_args.trial, "Trial id");
    diag->add_option("--p", ps, "Scaling exponents p > 1")->delimiter(',');

    std::optional<double> th_beta, th_alpha, th_chi;
    double th_sigma = 1.0;
    std::string th_dist = "power-law";
    auto* threshold = app.add_subcommand("threshold", "Print alpha, M and gamma0");
    threshold->add_option("--beta", th_beta, "Tail parameter of the regressor law");
    threshold->add_option("--alpha", th_alpha, "Tail index of the squares, in (1, 2]");
    threshold->add_option("--dist", th_dist, "power-law or folded-t");
    threshold->add_option("--sigma", th_sigma, "Memory parameter in (1/2, 1]");
    threshold->add_option("--chi", th_chi, "Gain exponent for gamma0");

    DistArgs dist_args;
    auto* dist = app.add_subcommand("dist-check", "KS distance and moments of a sampler");
    dist->add_option("--dist", dist_args.dist, "power-law, centered-power-law, folded-t or centered-folded-t");
    dist->add_option("--beta", dist_args.beta, "Tail parameter");
    dist->add_option("--x-min", dist_args.x_min, "Power-law scale");
    dist->add_option("--samples", dist_args.samples, "Sample count")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*grid) return cmd_grid(grid_config, g);
        if (*trial) return cmd_trial(trial_args, g);
        if (*diag) return cmd_diag(diag_args, ps, g);
        if (*threshold) return cmd_threshold(th_beta, th_alpha, th_dist, th_sigma, th_chi);
        if (*dist) return cmd_dist_check(dist_args, g);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::Io ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
