#pragma once

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "salab/error.hpp"
#include "salab/experiment.hpp"
#include "salab/format.hpp"

namespace salab {

enum class ReportFormat { Csv, Json };

inline constexpr std::string_view kCsvHeader =
    "scenario,chi,beta,sigma,n,trials,diverged,mean_norm_err,stderr_norm_err,base_seed";

inline void write_csv(const GridReport& report, std::ostream& out) {
    out << kCsvHeader << '\n';
    const auto scenario = to_string(report.config.scenario);
    for (const auto& c : report.cells) {
        out << scenario << ',' << format_double(c.chi) << ',' << format_double(c.beta) << ','
            << (c.sigma ? format_double(*c.sigma) : std::string()) << ',' << c.n << ','
            << c.trials << ',' << c.diverged << ',' << format_double(c.mean_norm_err) << ','
            << format_double(c.stderr_norm_err) << ',' << report.config.base_seed << '\n';
    }
}

inline std::string to_csv(const GridReport& report) {
    std::ostringstream out;
    write_csv(report, out);
    return out.str();
}

struct CsvRow {
    std::string scenario;
    double chi = 0.0;
    double beta = 0.0;
    std::optional<double> sigma;
    std::uint64_t n = 0;
    std::uint64_t trials = 0;
    std::uint64_t diverged = 0;
    double mean_norm_err = 0.0;
    double stderr_norm_err = 0.0;
    std::uint64_t base_seed = 0;
};

/// Parses text produced by write_csv. Throws on a wrong header or malformed row.
inline std::vector<CsvRow> parse_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCsvHeader) {
        throw Error(ErrorKind::InvalidParameter, "missing or wrong CSV header");
    }
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 10) throw Error(ErrorKind::InvalidParameter, "CSV row needs 10 fields");
        auto num = [&](std::string_view s) {
            const auto v = parse_double(s);
            if (!v) throw Error(ErrorKind::InvalidParameter, "bad CSV number '" + std::string(s) + "'");
            return *v;
        };
        auto count = [&](std::string_view s) {
            const auto v = parse_u64(s);
            if (!v) throw Error(ErrorKind::InvalidParameter, "bad CSV count '" + std::string(s) + "'");
            return *v;
        };
        CsvRow r;
        r.scenario = std::string(f[0]);
        r.chi = num(f[1]);
        r.beta = num(f[2]);
        if (!f[3].empty()) r.sigma = num(f[3]);
        r.n = count(f[4]);
        r.trials = count(f[5]);
        r.diverged = count(f[6]);
        r.mean_norm_err = num(f[7]);
        r.stderr_norm_err = num(f[8]);
        r.base_seed = count(f[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace detail {

// JSON has no NaN; absent statistics become null.
inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? number_or_null(*v) : nlohmann::json(nullptr);
}

} // namespace detail

inline nlohmann::json to_json(const GridReport& report) {
    using nlohmann::json;
    json cells = json::array();
    for (const auto& c : report.cells) {
        cells.push_back({{"chi", c.chi},
                         {"beta", c.beta},
                         {"sigma", detail::optional_number(c.sigma)},
                         {"n", c.n},
                         {"trials", c.trials},
                         {"diverged", c.diverged},
                         {"degenerate", c.degenerate},
                         {"mean_norm_err", detail::number_or_null(c.mean_norm_err)},
                         {"stderr_norm_err", detail::number_or_null(c.stderr_norm_err)},
                         {"min_norm_err", detail::number_or_null(c.min_norm_err)},
                         {"max_norm_err", detail::number_or_null(c.max_norm_err)},
                         // the convergence results assume chi < 1
                         {"outside_gain_hypothesis", c.chi >= 1.0}});
    }
    json thresholds = json::array();
    for (const auto& t : report.thresholds) {
        thresholds.push_back({{"beta", t.beta},
                              {"alpha", detail::optional_number(t.alpha)},
                              {"sigma", t.sigma},
                              {"M", detail::optional_number(t.M)},
                              {"predicted_range", t.M ? json::array({*t.M, 1.0}) : json(nullptr)}});
    }
    json best = json::array();
    for (const auto& b : report.best) {
        best.push_back({{"beta", b.beta},
                        {"n", b.n},
                        {"best_chi", b.best_chi},
                        {"mean_norm_err", detail::number_or_null(b.mean_norm_err)},
                        {"M", detail::optional_number(b.M)},
                        {"resulting_gamma", detail::optional_number(b.resulting_gamma)},
                        {"in_predicted_range", b.in_predicted_range}});
    }
    return {{"metadata",
             {{"algorithm_id", report.metadata.algorithm_id},
              {"timestamp", report.metadata.timestamp},
              {"scenario", std::string(to_string(report.config.scenario))},
              {"base_seed", report.config.base_seed},
              {"config", report.metadata.config_text}}},
            {"cells", cells},
            {"thresholds", thresholds},
            {"best_chi", best}};
}

inline void emit_report(const GridReport& report, ReportFormat format, std::ostream& out) {
    if (format == ReportFormat::Csv) {
        write_csv(report, out);
    } else {
        out << to_json(report).dump(2) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed to write report");
}

inline void emit_report(const GridReport& report, ReportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    emit_report(report, format, out);
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed to write '" + path + "'");
}

} // namespace salab
