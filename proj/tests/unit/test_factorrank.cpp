#include <doctest.h>

#include <cmath>
#include <numbers>

#include "opnorm/errors.hpp"
#include "opnorm/factorrank.hpp"
#include "opnorm/rng.hpp"

using namespace opnorm;

namespace {

// Noiseless rank-r matrix U diag(s) V' * sqrt(NT) with orthonormal U, V.
DenseMatrix planted(Index n, Index t, const std::vector<double>& s, std::uint64_t seed) {
    CounterRng rng(seed, Stream::loading);
    const auto r = static_cast<Index>(s.size());
    Eigen::MatrixXd a(n, r), b(t, r);
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() * Eigen::MatrixXd::Identity(n, r);
    const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() * Eigen::MatrixXd::Identity(t, r);
    Eigen::VectorXd d(r);
    for (Index i = 0; i < r; ++i) d(i) = s[static_cast<std::size_t>(i)];
    return DenseMatrix::from_eigen(u * d.asDiagonal() * v.transpose() * std::sqrt(static_cast<double>(n * t)));
}

DenseMatrix gaussian(Index n, Index t, double s, std::uint64_t seed) {
    CounterRng rng(seed, Stream::innovation);
    std::vector<double> v(static_cast<std::size_t>(n * t));
    for (auto& x : v) x = s * rng.normal();
    return DenseMatrix(n, t, std::move(v));
}

// Expected residual variance share after removing the top k of n
// eigenvalues of a square white Wishart matrix, from the Marchenko-Pastur
// law with ratio 1 (support [0, 4], density sqrt(x(4-x))/(2 pi x)).
double mp_residual_share(int k, int n) {
    const int grid = 400000;
    const double h = 4.0 / grid;
    double mass = 0.0, first = 0.0;
    const double target = static_cast<double>(k) / n;
    for (int j = grid - 1; j >= 0 && mass < target; --j) {
        const double x = (j + 0.5) * h;
        const double dens = std::sqrt(x * (4.0 - x)) / (2.0 * std::numbers::pi * x);
        mass += dens * h;
        first += x * dens * h;
    }
    return 1.0 - first;
}

}  // namespace

TEST_CASE("threshold formulas") {
    CHECK(psi_threshold(100, 100, 1.0, ThresholdVariant::psi1) == doctest::Approx(std::sqrt(0.02 * std::log(50.0))));
    CHECK(psi_threshold(100, 100, 1.0, ThresholdVariant::psi1) == doctest::Approx(0.27971).epsilon(1e-4));
    CHECK(psi_threshold(100, 100, 1.0, ThresholdVariant::psi2) == doctest::Approx(0.30348).epsilon(1e-4));
    CHECK(psi_threshold(100, 100, 1.0, ThresholdVariant::psi3) == doctest::Approx(0.21460).epsilon(1e-4));
    CHECK(psi_threshold(100, 100, 2.0, ThresholdVariant::psi3) == doctest::Approx(2.0 * 0.2146).epsilon(1e-3));
    CHECK(parse_threshold_variant("psi3") == ThresholdVariant::psi3);
    CHECK_THROWS_AS(parse_threshold_variant("psi4"), ConfigError);
}

TEST_CASE("reference design") {
    const auto spec = FactorModelSpec::reference_design(50, 60, 1);
    REQUIRE(spec.rank_map.size() == 11);
    CHECK(spec.max_rank() == 4);
    CHECK(spec.rank_map[2].second == 1);
    CHECK(spec.rank_map[10].first == doctest::Approx(1.0));
    CHECK(spec.sigma == 1.0);
}

TEST_CASE("rank map validation") {
    FactorModelSpec spec = FactorModelSpec::reference_design(3, 3, 1);
    CHECK_THROWS_AS(generate_ffm(spec, rank_map_grid(spec)), ConfigError);
    spec = FactorModelSpec::reference_design(20, 20, 1);
    CHECK_THROWS_AS(generate_ffm(spec, ParamGrid({0.0, 1.0})), ConfigError);
}

TEST_CASE("noiseless model has exact rank") {
    FactorModelSpec spec;
    spec.rows = 30;
    spec.cols = 40;
    spec.sigma = 0.0;
    spec.seed = 5;
    spec.rank_map = {{0.0, 2}, {0.5, 2}, {1.0, 2}};
    const auto fam = generate_ffm(spec, rank_map_grid(spec));
    for (std::size_t k = 0; k < 3; ++k) {
        const auto s = singular_values(fam.evaluate(k));
        CHECK(s[1] > 1.0);
        CHECK(s[2] <= 1e-9 * s[0]);
    }
    CHECK(sigma_hat(fam, 4) <= 1e-9);
}

TEST_CASE("per-beta ranks follow the map") {
    const auto spec = [] {
        auto s = FactorModelSpec::reference_design(40, 40, 3);
        s.sigma = 0.0;
        return s;
    }();
    const auto fam = generate_ffm(spec, rank_map_grid(spec));
    for (std::size_t k = 0; k < spec.rank_map.size(); ++k) {
        const auto s = singular_values(fam.evaluate(k));
        const auto r = static_cast<std::size_t>(spec.rank_map[k].second);
        CHECK(s[r - 1] > 1e-6 * s[0]);
        CHECK(s[r] <= 1e-9 * s[0]);
    }
}

TEST_CASE("pure noise spectrum shrinks") {
    FactorModelSpec spec;
    spec.rank_map = {{0.0, 0}, {1.0, 0}};
    double prev = 1e9;
    for (Index n : {25, 100, 400}) {
        spec.rows = spec.cols = n;
        const auto top = sup_spectrum(generate_ffm(spec, rank_map_grid(spec)))[0];
        CHECK(top < prev);
        prev = top;
    }
    CHECK(prev < 0.06);
}

TEST_CASE("sigma hat on pure noise matches the Marchenko-Pastur share") {
    const double share = mp_residual_share(8, 100);
    double sum = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        const auto fam = ParamMatrixFamily::constant(ParamGrid({0.0}), gaussian(100, 100, 2.0, 10 + r));
        sum += sigma_hat(fam, 8);
    }
    CHECK(sum / reps == doctest::Approx(2.0 * std::sqrt(share)).epsilon(0.02));
}

TEST_CASE("sigma hat on the reference design") {
    const auto spec = FactorModelSpec::reference_design(100, 100, 9);
    const auto fam = generate_ffm(spec, rank_map_grid(spec));
    CHECK(sigma_hat(fam, 8) == doctest::Approx(0.5).epsilon(0.15));
    CHECK_THROWS_AS(sigma_hat(fam, 100), ArgumentError);
    CHECK_THROWS_AS(sigma_hat(fam, 0), ArgumentError);
}

TEST_CASE("sigma hat scale equivariance") {
    const auto fam = ParamMatrixFamily::constant(ParamGrid({0.0}), gaussian(100, 100, 1.0, 3));
    CHECK(sigma_hat(fam.scaled(3.0), 8) == doctest::Approx(3.0 * sigma_hat(fam, 8)).epsilon(0.05));
}

TEST_CASE("rank estimator exactness") {
    ThresholdConfig cfg;
    cfg.explicit_value = 0.1;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto fam = ParamMatrixFamily::constant(ParamGrid({0.0, 0.5}), planted(40, 30, {2.0, 1.5, 1.0}, seed));
        const auto est = estimate_max_rank(fam, cfg);
        CHECK(est.r_hat == 3);
        CHECK(est.threshold_used == 0.1);
    }
    const auto zero = ParamMatrixFamily::zeros(ParamGrid({0.0, 1.0}), 10, 10);
    CHECK(estimate_max_rank(zero, cfg).r_hat == 0);
    CHECK(estimate_max_rank(zero, ThresholdConfig{}).r_hat == 0);
}

TEST_CASE("r_hat counts ties and is monotone in the threshold") {
    const auto spec = FactorModelSpec::reference_design(50, 50, 2);
    const auto fam = generate_ffm(spec, rank_map_grid(spec));
    const auto sup = sup_spectrum(fam);
    for (std::size_t l = 1; l < sup.size(); ++l) CHECK(sup[l] <= sup[l - 1]);
    ThresholdConfig cfg;
    cfg.explicit_value = sup[2];
    CHECK(estimate_max_rank(fam, cfg).r_hat == 3);
    Index prev = static_cast<Index>(sup.size());
    for (double psi = 0.01; psi < 2.0; psi += 0.01) {
        cfg.explicit_value = psi;
        const auto r = estimate_max_rank(fam, cfg).r_hat;
        CHECK(r <= prev);
        prev = r;
    }
}

TEST_CASE("Ky Fan sandwich and sup-spectrum dominance") {
    FactorModelSpec spec;
    spec.rows = 60;
    spec.cols = 50;
    spec.rank_map = {{0.0, 3}, {0.5, 3}, {1.0, 3}};
    const double sq = std::sqrt(60.0 * 50.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        spec.seed = seed;
        spec.sigma = 1.0;
        const auto y = generate_ffm(spec, rank_map_grid(spec));
        spec.sigma = 0.0;
        const auto signal = generate_ffm(spec, rank_map_grid(spec));
        double sup_noise = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const auto u = y.evaluate(k) - signal.evaluate(k);
            const double un = operator_norm(u) / sq;
            sup_noise = std::max(sup_noise, un);
            CHECK(singular_values(y.evaluate(k))[2] / sq >= singular_values(signal.evaluate(k))[2] / sq - un - 1e-8);
        }
        CHECK(sup_spectrum(y)[3] <= sup_noise + 1e-8);
    }
}

TEST_CASE("reference design recovers the maximal rank") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto spec = FactorModelSpec::reference_design(100, 100, seed);
        hits += estimate_max_rank(generate_ffm(spec, rank_map_grid(spec)), ThresholdConfig{}).r_hat == 4;
    }
    CHECK(hits >= 19);
}

TEST_CASE("all variants share one pass") {
    const auto spec = FactorModelSpec::reference_design(50, 50, 4);
    const auto fam = generate_ffm(spec, rank_map_grid(spec));
    const std::vector<ThresholdVariant> vs{ThresholdVariant::psi1, ThresholdVariant::psi2, ThresholdVariant::psi3};
    const auto all = estimate_max_rank_all(fam, 8, vs);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        ThresholdConfig cfg;
        cfg.variant = vs[i];
        const auto one = estimate_max_rank(fam, cfg);
        CHECK(all[i].r_hat == one.r_hat);
        CHECK(all[i].threshold_used == one.threshold_used);
    }
}

TEST_CASE("loading hook") {
    FactorModelSpec spec;
    spec.rows = spec.cols = 20;
    spec.sigma = 0.0;
    spec.rank_map = {{0.0, 1}, {1.0, 1}};
    const auto fam = generate_ffm(spec, rank_map_grid(spec), [](double beta, Eigen::MatrixXd& l, Eigen::MatrixXd&) {
        l *= (1.0 + beta);
    });
    CHECK(operator_norm(fam.evaluate(1)) == doctest::Approx(2.0 * operator_norm(fam.evaluate(0))));
}
