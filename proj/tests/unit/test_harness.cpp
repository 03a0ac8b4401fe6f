#include <doctest.h>

#include <cmath>

#include "opnorm/errors.hpp"
#include "opnorm/harness.hpp"

using namespace opnorm;
using nlohmann::json;

namespace {

ExperimentConfig small_table1(int reps, int threads) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::table1;
    cfg.dims_list = {{25, 25}, {30, 40}};
    cfg.reps = reps;
    cfg.threads = threads;
    return cfg;
}

}  // namespace

TEST_CASE("summary statistics") {
    const std::vector<double> x{3.0, 5.0, 4.0, 8.0};
    const auto s = summarize(x, 4.0);
    CHECK(s.mean == doctest::Approx(5.0));
    CHECK(s.bias == doctest::Approx(1.0));
    CHECK(s.rmse == doctest::Approx(std::sqrt((1.0 + 1.0 + 0.0 + 16.0) / 4.0)));
    CHECK(s.rmse * s.rmse == doctest::Approx(s.bias * s.bias + s.sd * s.sd).epsilon(1e-12));
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.5) == "0.500000");
    CHECK(format_number(-1e-9) == "0.000000");
    CHECK(format_number(12.3456789) == "12.345679");
}

TEST_CASE("runs are reproducible and schedule independent") {
    const auto a = run(small_table1(1, 1));
    const auto b = run(small_table1(1, 1));
    CHECK(a.csv() == b.csv());
    CHECK(a.to_json().dump() == b.to_json().dump());
    const auto one = run(small_table1(12, 1)).csv();
    CHECK(run(small_table1(12, 2)).csv() == one);
    CHECK(run(small_table1(12, 8)).csv() == one);
}

TEST_CASE("adding replications leaves earlier ones unchanged") {
    const auto few = run(small_table1(3, 1));
    const auto more = run(small_table1(5, 1));
    for (const auto& r : few.per_rep) {
        bool found = false;
        for (const auto& q : more.per_rep) {
            if (q.dims_index == r.dims_index && q.rep == r.rep && q.variant == r.variant) {
                CHECK(q.estimate == r.estimate);
                CHECK(q.seed == r.seed);
                found = true;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("table1 bookkeeping") {
    const auto res = run(small_table1(10, 0));
    CHECK(res.per_rep.size() == 10u * 2u * 3u);
    CHECK(res.cells.size() == 6);
    for (const auto& c : res.cells) {
        CHECK(c.summary.rmse >= std::abs(c.summary.bias) - 1e-12);
        CHECK(c.summary.rmse * c.summary.rmse ==
              doctest::Approx(c.summary.bias * c.summary.bias + c.summary.sd * c.summary.sd).epsilon(1e-10));
    }
    for (const auto& r : res.per_rep) CHECK(r.seed == replication_seed(42, static_cast<std::size_t>(r.rep), r.dims_index));
}

TEST_CASE("noiseless table1 is exact") {
    const auto res = table1(5, 3, 1, 0.0);
    for (const auto& c : res.cells) {
        CHECK(c.summary.bias == 0.0);
        CHECK(c.summary.rmse == 0.0);
    }
    REQUIRE(res.table.rows.size() == 6);
    CHECK(res.table.header.size() == 11);
    CHECK(res.table.header[2] == "psi1_T25");
    CHECK(res.table.rows[0][1] == "Bias");
    CHECK(res.table.rows[1][1] == "RMSE");
    for (const auto& row : res.table.rows)
        for (std::size_t j = 2; j < row.size(); ++j) CHECK(row[j] == "0.000000");
}

TEST_CASE("table1 at 100x100 under psi2") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::table1;
    cfg.dims_list = {{100, 100}};
    cfg.reps = 100;
    cfg.sub_config = {{"variants", {"psi2"}}};
    const auto res = run(cfg);
    REQUIRE(res.cells.size() == 1);
    CHECK(std::abs(res.cells[0].summary.bias) <= 0.1);
    CHECK(res.cells[0].summary.rmse <= 0.2);
}

TEST_CASE("config parsing is strict") {
    const json good = {{"schema_version", 1}, {"experiment", "table1"}, {"reps", 3}};
    CHECK(ExperimentConfig::from_json(good).reps == 3);
    json bad = good;
    bad["repz"] = 3;
    try {
        ExperimentConfig::from_json(bad);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "repz");
    }
    bad = good;
    bad["schema_version"] = 2;
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
    bad = good;
    bad.erase("schema_version");
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);
    bad = good;
    bad["experiment"] = "table2";
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);

    auto cfg = ExperimentConfig::from_json(good);
    cfg.sub_config = {{"sigmaa", 1.0}};
    try {
        run(cfg);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field().find("sigmaa") != std::string::npos);
    }
}

TEST_CASE("config hash") {
    auto a = small_table1(10, 1);
    auto b = small_table1(10, 4);
    CHECK(a.hash() == b.hash());
    b.reps = 11;
    CHECK(a.hash() != b.hash());
    b = a;
    b.base_seed = 43;
    CHECK(a.hash() != b.hash());
    b = a;
    b.dims_list[1] = {40, 30};
    CHECK(a.hash() != b.hash());
    b = a;
    b.sub_config = {{"sigma", 0.5}};
    CHECK(a.hash() != b.hash());
    a.sub_config = {{"sigma", 1.0}, {"k_max", 8}};
    b.sub_config = {{"k_max", 8}, {"sigma", 1.0}};
    CHECK(a.hash() == b.hash());
    CHECK(ExperimentConfig::from_json(a.to_json()).hash() == a.hash());
}

TEST_CASE("replication failures carry the seed") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::moment_consistency;
    cfg.dims_list = {{10, 10}};
    cfg.reps = 20;
    cfg.threads = 1;
    cfg.sub_config = {{"objectives", {"top_r"}}, {"r_nt", 50}};
    try {
        run(cfg);
        FAIL("expected ReplicationError");
    } catch (const ReplicationError& e) {
        CHECK(e.seed() == replication_seed(42, 0, 0));
    }
}

TEST_CASE("moment consistency experiment") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::moment_consistency;
    cfg.dims_list = {{20, 20}, {40, 40}};
    cfg.reps = 20;
    cfg.sub_config = {{"objectives", {"opnorm", "conventional"}},
                      {"params", {{"grid", {{"start", 0.0}, {"stop", 1.0}, {"step", 0.05}}}}}};
    const auto res = run(cfg);
    CHECK(res.cells.size() == 4);
    CHECK(res.per_rep.size() == 80);
    CHECK(res.extra["opnorm"]["noise_shrink"].size() == 1);
    CHECK(res.csv().rfind("N,T,objective", 0) == 0);
}

TEST_CASE("bound scaling experiment") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::bound_scaling;
    cfg.dims_list = {{20, 20}, {40, 40}, {80, 80}, {160, 160}};
    cfg.reps = 10;
    cfg.sub_config = {{"calibration_reps", 20}};
    const auto res = run(cfg);
    CHECK(res.extra["slope"].get<double>() == doctest::Approx(0.5).epsilon(0.3));
    CHECK(res.extra["slope_ci95"].size() == 2);
    cfg.dims_list.pop_back();
    CHECK_THROWS_AS(run(cfg), ConfigError);
}

TEST_CASE("constant gaussian family matches the classical rate") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::bound_scaling;
    cfg.dims_list = {{50, 50}, {100, 100}, {150, 150}, {200, 200}};
    cfg.reps = 10;
    cfg.sub_config = {{"family", "gaussian"}, {"grid", {0.0}}, {"calibration_reps", 0}};
    const auto res = run(cfg);
    for (const auto& c : res.cells) {
        const double classical = std::sqrt(static_cast<double>(c.rows)) + std::sqrt(static_cast<double>(c.cols));
        CHECK(c.summary.mean == doctest::Approx(classical).epsilon(0.1));
    }
}

TEST_CASE("tail check experiment") {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::tail_check;
    cfg.dims_list = {{30, 30}};
    cfg.reps = 40;
    cfg.sub_config = {{"calibration_reps", 20}, {"u", {0.0, 2.0}}};
    const auto res = run(cfg);
    REQUIRE(res.table.rows.size() == 2);
    CHECK(res.table.rows[0].back() == "1");
    CHECK(res.extra["30x30"]["c_hat"].get<double>() > 0.0);
}

TEST_CASE("plot data is long format") {
    const auto res = run(small_table1(2, 1));
    const auto csv = res.plot_data_csv();
    CHECK(csv.rfind("x,y,series\n", 0) == 0);
    CHECK(csv.find('\r') == std::string::npos);
}
