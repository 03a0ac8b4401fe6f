#include <doctest.h>

#include <cmath>

#include "opnorm/errors.hpp"
#include "opnorm/momest.hpp"

using namespace opnorm;

namespace {

EstimatorConfig with(Objective o) {
    EstimatorConfig c;
    c.objective = o;
    if (o == Objective::top_r) c.r_nt = 2;
    if (o == Objective::weighted) c.weights = {1.0};
    return c;
}

const Objective kAll[] = {Objective::opnorm, Objective::conventional, Objective::top_r, Objective::weighted};

DenseMatrix filled(Index n, Index t, double v) { return DenseMatrix::from_eigen(RowMajorMatrix::Constant(n, t, v)); }

}  // namespace

TEST_CASE("objective names") {
    CHECK(parse_objective("top_r") == Objective::top_r);
    CHECK(objective_name(Objective::weighted) == "weighted");
    CHECK_THROWS_AS(parse_objective("gmm"), ConfigError);
}

TEST_CASE("config validation") {
    EstimatorConfig c;
    c.objective = Objective::top_r;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.objective = Objective::weighted;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.weights = {0.3, 0.3};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.weights = {0.5, 0.5};
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("zero moments give zero under every objective") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.1), 1.0);
    const auto data = filled(10, 12, 0.5);
    for (Objective o : kAll) CHECK(objective_value(model, data, 0.5, with(o)) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("population part equals |beta0 - beta|") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.1), 1.0);
    for (double b : {0.0, 0.3, 0.5, 0.9}) {
        const auto e = model.expected(20, 30, b);
        REQUIRE(e.size() == 1);
        CHECK(operator_norm(e[0]) / std::sqrt(600.0) == doctest::Approx(std::abs(0.5 - b)).epsilon(1e-12));
    }
}

TEST_CASE("rank-one moment matrix") {
    const auto model = location_model(0.0, uniform_points(-1.0, 1.0, 0.5), 1.0);
    const auto data = filled(7, 9, 0.75);
    CHECK(objective_value(model, data, 0.0, with(Objective::opnorm)) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(objective_value(model, data, 1.0, with(Objective::opnorm)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("conventional estimate is the grid point nearest the sample mean") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.01), 1.0);
    const auto data = model.data_gen(30, 40, 3);
    double mean = 0.0;
    for (double v : data.entries()) mean += v;
    mean /= static_cast<double>(data.entries().size());
    const auto est = estimate(model, data, with(Objective::conventional));
    CHECK(std::abs(est.beta_hat - mean) <= 0.005 + 1e-12);
    CHECK(est.profile.size() == 101);
}

TEST_CASE("noiseless data: minimum zero at beta0 with a V-shaped profile") {
    const auto model = location_model(0.4, uniform_points(0.0, 1.0, 0.05), 0.0);
    const auto data = model.data_gen(15, 20, 1);
    for (Objective o : {Objective::opnorm, Objective::conventional}) {
        const auto est = estimate(model, data, with(o));
        CHECK(est.beta_hat == doctest::Approx(0.4));
        CHECK(est.objective_at_min == doctest::Approx(0.0).epsilon(1e-12));
        for (const auto& [b, v] : est.profile) CHECK(v == doctest::Approx(std::abs(b - 0.4)).epsilon(1e-9));
    }
}

TEST_CASE("scale equivariance") {
    const auto model = location_model(0.0, uniform_points(-1.0, 1.0, 0.1), 1.0);
    const auto data = model.data_gen(20, 20, 8);
    const auto scaled = data * 3.0;
    const auto model3 = location_model(0.0, uniform_points(-3.0, 3.0, 0.3), 1.0);
    for (Objective o : kAll) {
        const auto cfg = with(o);
        const auto a = estimate(model, data, cfg);
        const auto b = estimate(model3, scaled, cfg);
        CHECK(b.beta_hat == doctest::Approx(3.0 * a.beta_hat).epsilon(1e-9));
        for (std::size_t k = 0; k < a.profile.size(); ++k)
            CHECK(b.profile[k].second == doctest::Approx(3.0 * a.profile[k].second).epsilon(1e-9));
    }
}

TEST_CASE("value at beta0 is bounded by the centered sup norm") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.1), 1.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto data = model.data_gen(25, 30, seed);
        CHECK(objective_value(model, data, 0.5, with(Objective::opnorm)) <= centered_sup_norm(model, data) + 1e-8);
    }
}

TEST_CASE("non-finite objective is a data error") {
    MomentModel m = location_model(0.0, {0.0, 1.0}, 1.0);
    m.moments = [](const DenseMatrix& d, double beta) {
        if (beta > 0.5) throw ValidationError("blow-up");
        return std::vector<DenseMatrix>{d};
    };
    CHECK_THROWS_AS(estimate(m, filled(3, 3, 1.0), with(Objective::opnorm)), DataError);
}

TEST_CASE("weighted objective on a moment stack") {
    MomentModel m = location_model(0.0, {0.0, 1.0}, 1.0);
    m.moments = [](const DenseMatrix& d, double beta) {
        return std::vector<DenseMatrix>{d - filled(d.rows(), d.cols(), beta), (d - filled(d.rows(), d.cols(), beta)) * 2.0};
    };
    EstimatorConfig cfg;
    cfg.objective = Objective::weighted;
    cfg.weights = {0.25, 0.75};
    const auto data = filled(4, 4, 1.0);
    CHECK(objective_value(m, data, 0.0, cfg) == doctest::Approx(0.25 + 1.5));
    CHECK_THROWS(objective_value(m, data, 0.0, with(Objective::opnorm)));
}

TEST_CASE("golden-section refinement") {
    const auto model = location_model(0.437, uniform_points(0.0, 1.0, 0.1), 0.0);
    const auto data = model.data_gen(10, 10, 1);
    auto cfg = with(Objective::opnorm);
    cfg.refine = true;
    CHECK(estimate(model, data, cfg).beta_hat == doctest::Approx(0.437).epsilon(1e-5));
}

TEST_CASE("consistency diagnostic") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.01), 1.0);
    const std::vector<std::pair<Index, Index>> dims{{50, 50}, {100, 100}, {200, 200}};
    const auto op = consistency_diagnostic(model, with(Objective::opnorm), dims, 20, 7);
    REQUIRE(op.size() == 3);
    for (std::size_t d = 1; d < 3; ++d) {
        const double shrink = op[d - 1].mean_noise_term / op[d].mean_noise_term;
        CHECK(shrink >= std::sqrt(2.0) / 1.5);
        CHECK(shrink <= std::sqrt(2.0) * 1.5);
    }
    CHECK_THROWS(consistency_diagnostic(model, with(Objective::opnorm), dims, 19, 7));

    const auto quiet = location_model(0.5, uniform_points(0.0, 1.0, 0.01), 0.0);
    for (const auto& row : consistency_diagnostic(quiet, with(Objective::opnorm), dims, 20, 7)) {
        for (double e : row.abs_errors) CHECK(e <= 0.01);
    }
}

TEST_CASE("relative efficiency of opnorm and conventional") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.01), 1.0);
    const std::vector<std::pair<Index, Index>> dims{{200, 200}};
    const auto op = consistency_diagnostic(model, with(Objective::opnorm), dims, 20, 7);
    const auto conv = consistency_diagnostic(model, with(Objective::conventional), dims, 20, 7);
    const double ratio = op[0].mean_abs_error / std::max(conv[0].mean_abs_error, 1e-12);
    MESSAGE("mean |error| opnorm " << op[0].mean_abs_error << ", conventional " << conv[0].mean_abs_error);
    CHECK(ratio >= 0.2);
    CHECK(ratio <= 5.0);
}

TEST_CASE("top-R noise check") {
    const auto model = location_model(0.5, uniform_points(0.0, 1.0, 0.1), 1.0);
    std::vector<DenseMatrix> reps;
    for (std::uint64_t s = 0; s < 5; ++s) reps.push_back(model.data_gen(400, 400, s));
    const std::vector<Index> sched{1, 2, 4};
    const auto rows = top_r_noise_check(model, reps, sched);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].mean_top_sum == doctest::Approx(rows[0].mean_bound).epsilon(1e-12));
    for (const auto& r : rows) {
        CHECK(r.holds);
        CHECK(r.max_violation <= 1e-8);
    }
    CHECK(rows[2].mean_top_sum < 0.5);
}

TEST_CASE("registry") {
    const auto m = make_moment_model("location", {{"beta0", 0.2}, {"grid", {{"start", 0.0}, {"stop", 0.5}, {"step", 0.1}}}});
    CHECK(m.beta0 == 0.2);
    CHECK(m.grid.size() == 6);
    CHECK_THROWS_AS(make_moment_model("probit", nlohmann::json::object()), ConfigError);
    CHECK_THROWS_AS(make_moment_model("location", {{"beta_0", 0.2}}), ConfigError);
}
