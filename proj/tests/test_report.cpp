#include <gtest/gtest.h>

#include <sstream>

#include "salab/report.hpp"

using namespace salab;

namespace {

GridReport one_cell() {
    auto c = ExperimentConfig::defaults(Scenario::IidPowerLaw);
    c.chi_grid = {0.75};
    c.beta_grid = {4.5};
    c.n_grid = {100};
    c.trials = 3;
    c.base_seed = 5;
    return run_grid(c);
}

} // namespace

TEST(Csv, EmptyGridIsHeaderOnly) {
    GridReport r;
    EXPECT_EQ(to_csv(r), std::string(kCsvHeader) + "\n");
    EXPECT_TRUE(parse_csv(to_csv(r)).empty());
}

TEST(Csv, OneCellRoundTrip) {
    const auto r = one_cell();
    const auto text = to_csv(r);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    const auto rows = parse_csv(text);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].scenario, "iid-power-law");
    EXPECT_EQ(rows[0].chi, 0.75);
    EXPECT_EQ(rows[0].beta, 4.5);
    EXPECT_FALSE(rows[0].sigma.has_value());
    EXPECT_EQ(rows[0].n, 100u);
    EXPECT_EQ(rows[0].trials, 3u);
    EXPECT_EQ(rows[0].mean_norm_err, r.cells[0].mean_norm_err);
    EXPECT_EQ(rows[0].stderr_norm_err, r.cells[0].stderr_norm_err);
    EXPECT_EQ(rows[0].base_seed, 5u);
}

TEST(Csv, NanAndSigma) {
    auto r = one_cell();
    r.cells[0].mean_norm_err = std::nan("");
    r.cells[0].sigma = 0.65;
    const auto rows = parse_csv(to_csv(r));
    EXPECT_TRUE(std::isnan(rows[0].mean_norm_err));
    EXPECT_EQ(rows[0].sigma, 0.65);
    EXPECT_THROW(parse_csv("wrong,header\n"), Error);
}

TEST(Json, Fields) {
    auto r = one_cell();
    r.cells[0].stderr_norm_err = std::nan("");
    const auto j = to_json(r);
    EXPECT_EQ(j["metadata"]["algorithm_id"], std::string(RngStream::algorithm_id));
    EXPECT_EQ(j["metadata"]["base_seed"], 5);
    EXPECT_EQ(j["cells"].size(), 1u);
    EXPECT_TRUE(j["cells"][0]["stderr_norm_err"].is_null());
    EXPECT_EQ(j["cells"][0]["chi"], 0.75);
    EXPECT_EQ(j["cells"][0]["outside_gain_hypothesis"], false);
    EXPECT_EQ(j["thresholds"][0]["M"], 1.0 / 1.75);
    EXPECT_EQ(j["best_chi"][0]["best_chi"], 0.75);
    EXPECT_EQ(parse_config(j["metadata"]["config"].get<std::string>()), r.config);
}

TEST(Emit, StreamAndIoError) {
    const auto r = one_cell();
    std::ostringstream out;
    emit_report(r, ReportFormat::Csv, out);
    EXPECT_EQ(out.str(), to_csv(r));
    try {
        emit_report(r, ReportFormat::Json, std::string("/nonexistent/dir/out.json"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}
