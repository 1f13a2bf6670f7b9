#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "salab/distributions.hpp"
#include "salab/error.hpp"
#include "salab/format.hpp"
#include "salab/linproc.hpp"
#include "salab/matrix.hpp"

namespace salab {

enum class Scenario { IidPowerLaw, IidFoldedT, LrdPowerLaw };

inline std::string_view to_string(Scenario s) noexcept {
    switch (s) {
    case Scenario::IidPowerLaw: return "iid-power-law";
    case Scenario::IidFoldedT: return "iid-folded-t";
    case Scenario::LrdPowerLaw: return "lrd-power-law";
    }
    return "unknown";
}

inline std::optional<Scenario> scenario_from_string(std::string_view s) noexcept {
    if (s == "iid-power-law") return Scenario::IidPowerLaw;
    if (s == "iid-folded-t") return Scenario::IidFoldedT;
    if (s == "lrd-power-law") return Scenario::LrdPowerLaw;
    return std::nullopt;
}

/// One experiment grid. Defaults follow the published setups: d = 2,
/// h = (1, 1), h_1 = (101, 101) for the i.i.d. scenarios and d = 1, h = 1,
/// h_1 = 401, sigma = 0.65 for the long-range-dependent one.
struct ExperimentConfig {
    Scenario scenario = Scenario::IidPowerLaw;
    std::size_t d = 2;
    Vector h_true{1.0, 1.0};
    Vector h_init{101.0, 101.0};
    std::vector<double> chi_grid;
    std::vector<double> beta_grid;
    std::optional<double> sigma;
    std::vector<std::uint64_t> n_grid;
    std::uint64_t trials = 100;
    std::uint64_t base_seed = 0;
    std::size_t trunc_lag = 500000;
    std::optional<double> guard; // nullopt: 1e12 (1 + |h_1|)
    std::size_t window = 1;      // N in the coefficient average
    double x_min = 1.0;          // regressor (or innovation) scale for power-law kinds
    double noise_x_min = 0.01;
    Sidedness sided = Sidedness::OneSided;
    bool center_innovations = false;

    static ExperimentConfig defaults(Scenario scenario) {
        ExperimentConfig c;
        c.scenario = scenario;
        if (scenario == Scenario::LrdPowerLaw) {
            c.d = 1;
            c.h_true = {1.0};
            c.h_init = {401.0};
            c.sigma = 0.65;
            c.x_min = 0.01;
        }
        return c;
    }

    /// Throws ConfigError naming the first offending key.
    void validate() const {
        if (trials < 1) throw ConfigError("trials", "must be at least 1");
        if (chi_grid.empty()) throw ConfigError("chi_grid", "must be nonempty");
        for (double chi : chi_grid)
            if (!(chi > 0.0 && chi <= 1.0)) throw ConfigError("chi_grid", "values must lie in (0, 1]");
        if (beta_grid.empty()) throw ConfigError("beta_grid", "must be nonempty");
        for (double beta : beta_grid)
            if (!(beta > 2.0)) throw ConfigError("beta_grid", "values must exceed 2 (centered noise)");
        if (n_grid.empty()) throw ConfigError("n_grid", "must be nonempty");
        for (auto n : n_grid)
            if (n < 1) throw ConfigError("n_grid", "values must be at least 1");
        if (d < 1) throw ConfigError("d", "must be at least 1");
        if (h_true.size() != d) throw ConfigError("h_true", "must have d entries");
        if (h_init.size() != d) throw ConfigError("h_init", "must have d entries");
        if (window < 1) throw ConfigError("window", "must be at least 1");
        if (guard && !(*guard > 0.0)) throw ConfigError("guard", "must be positive");
        if (!(x_min > 0.0)) throw ConfigError("x_min", "must be positive");
        if (!(noise_x_min > 0.0)) throw ConfigError("noise_x_min", "must be positive");
        if (scenario == Scenario::LrdPowerLaw) {
            if (!sigma) throw ConfigError("sigma", "required for lrd-power-law");
            if (!(*sigma > 0.5 && *sigma <= 1.0)) throw ConfigError("sigma", "must lie in (1/2, 1]");
            if (d != 1) throw ConfigError("d", "lrd-power-law is scalar (d = 1)");
            if (trunc_lag < 1) throw ConfigError("trunc_lag", "must be at least 1");
        } else if (sigma) {
            throw ConfigError("sigma", "only valid for lrd-power-law");
        }
    }

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

inline std::string join_u64(const std::vector<std::uint64_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(v[i]);
    }
    return out;
}

inline std::vector<double> parse_double_list(std::string_view key, std::string_view value) {
    std::vector<double> out;
    if (trim(value).empty()) return out;
    for (auto part : split(value, ',')) {
        const auto v = parse_double(part);
        if (!v) throw ConfigError(std::string(key), "not a number: '" + std::string(part) + "'");
        out.push_back(*v);
    }
    return out;
}

inline std::vector<std::uint64_t> parse_u64_list(std::string_view key, std::string_view value) {
    std::vector<std::uint64_t> out;
    if (trim(value).empty()) return out;
    for (auto part : split(value, ',')) {
        const auto v = parse_u64(part);
        if (!v) throw ConfigError(std::string(key), "not a count: '" + std::string(part) + "'");
        out.push_back(*v);
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
    value = trim(value);
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(std::string(key), "expected true or false");
}

} // namespace detail

/// Flat "key = value" text; '#' starts a comment, lists are comma separated.
/// Keys not set fall back to the scenario defaults. Unknown keys are errors.
inline ExperimentConfig parse_config(std::string_view text) {
    std::map<std::string, std::string, std::less<>> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(view), "line " + std::to_string(lineno) + " has no '='");
        }
        std::string key(trim(view.substr(0, eq)));
        if (entries.count(key)) throw ConfigError(key, "duplicate key");
        entries.emplace(std::move(key), std::string(trim(view.substr(eq + 1))));
    }

    const auto scenario_it = entries.find("scenario");
    if (scenario_it == entries.end()) throw ConfigError("scenario", "missing");
    const auto scenario = scenario_from_string(scenario_it->second);
    if (!scenario) throw ConfigError("scenario", "unknown scenario '" + scenario_it->second + "'");
    ExperimentConfig c = ExperimentConfig::defaults(*scenario);

    for (const auto& [key, value] : entries) {
        auto need_double = [&] {
            const auto v = parse_double(value);
            if (!v) throw ConfigError(key, "not a number: '" + value + "'");
            return *v;
        };
        auto need_u64 = [&] {
            const auto v = parse_u64(value);
            if (!v) throw ConfigError(key, "not a non-negative integer: '" + value + "'");
            return *v;
        };
        if (key == "scenario") continue;
        else if (key == "d") c.d = need_u64();
        else if (key == "h_true") c.h_true = detail::parse_double_list(key, value);
        else if (key == "h_init") c.h_init = detail::parse_double_list(key, value);
        else if (key == "chi_grid") c.chi_grid = detail::parse_double_list(key, value);
        else if (key == "beta_grid") c.beta_grid = detail::parse_double_list(key, value);
        else if (key == "sigma") c.sigma = value.empty() ? std::nullopt : std::optional(need_double());
        else if (key == "n_grid") c.n_grid = detail::parse_u64_list(key, value);
        else if (key == "trials") c.trials = need_u64();
        else if (key == "base_seed") c.base_seed = need_u64();
        else if (key == "trunc_lag") c.trunc_lag = need_u64();
        else if (key == "guard") c.guard = value.empty() ? std::nullopt : std::optional(need_double());
        else if (key == "window") c.window = need_u64();
        else if (key == "x_min") c.x_min = need_double();
        else if (key == "noise_x_min") c.noise_x_min = need_double();
        else if (key == "sided") {
            if (value == "one-sided") c.sided = Sidedness::OneSided;
            else if (value == "two-sided") c.sided = Sidedness::TwoSided;
            else throw ConfigError(key, "expected one-sided or two-sided");
        } else if (key == "center_innovations") c.center_innovations = detail::parse_bool(key, value);
        else throw ConfigError(key, "unknown key");
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

inline std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "scenario = " << to_string(c.scenario) << '\n'
        << "d = " << c.d << '\n'
        << "h_true = " << detail::join_doubles(c.h_true) << '\n'
        << "h_init = " << detail::join_doubles(c.h_init) << '\n'
        << "chi_grid = " << detail::join_doubles(c.chi_grid) << '\n'
        << "beta_grid = " << detail::join_doubles(c.beta_grid) << '\n';
    if (c.sigma) out << "sigma = " << format_double(*c.sigma) << '\n';
    out << "n_grid = " << detail::join_u64(c.n_grid) << '\n'
        << "trials = " << c.trials << '\n'
        << "base_seed = " << c.base_seed << '\n'
        << "trunc_lag = " << c.trunc_lag << '\n';
    if (c.guard) out << "guard = " << format_double(*c.guard) << '\n';
    out << "window = " << c.window << '\n'
        << "x_min = " << format_double(c.x_min) << '\n'
        << "noise_x_min = " << format_double(c.noise_x_min) << '\n'
        << "sided = " << (c.sided == Sidedness::OneSided ? "one-sided" : "two-sided") << '\n'
        << "center_innovations = " << (c.center_innovations ? "true" : "false") << '\n';
    return out.str();
}

/// Regressor law for one beta column.
inline DistributionSpec component_spec(const ExperimentConfig& c, double beta) {
    switch (c.scenario) {
    case Scenario::IidPowerLaw:
    case Scenario::LrdPowerLaw: return DistributionSpec::power_law(c.x_min, beta);
    case Scenario::IidFoldedT: return DistributionSpec::folded_t(beta);
    }
    return {};
}

inline DistributionSpec noise_spec(const ExperimentConfig& c, double beta) {
    return c.scenario == Scenario::IidFoldedT ? DistributionSpec::centered_folded_t(beta)
                                              : DistributionSpec::centered_power_law(c.noise_x_min, beta);
}

inline IidPairConfig iid_pair_config(const ExperimentConfig& c, double beta) {
    IidPairConfig p;
    p.component_specs.assign(c.d, component_spec(c, beta));
    p.noise_spec = noise_spec(c, beta);
    p.h_true = c.h_true;
    return p;
}

inline LinProcConfig linproc_config(const ExperimentConfig& c, double beta) {
    LinProcConfig p;
    p.sigma = c.sigma.value_or(1.0);
    p.trunc_lag = c.trunc_lag;
    p.innovation_spec = component_spec(c, beta);
    p.noise_spec = noise_spec(c, beta);
    p.h_true = c.h_true.at(0);
    p.sided = c.sided;
    p.center_innovations = c.center_innovations;
    return p;
}

} // namespace salab
