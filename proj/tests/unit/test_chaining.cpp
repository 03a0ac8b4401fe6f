#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include "opnorm/chaining.hpp"
#include "opnorm/errors.hpp"
#include "opnorm/rng.hpp"

using namespace opnorm;

namespace {

FiniteMetricSpace line(std::vector<double> xs) {
    Eigen::MatrixXd p(static_cast<Index>(xs.size()), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) p(static_cast<Index>(i), 0) = xs[i];
    return FiniteMetricSpace::from_points(p);
}

FiniteMetricSpace equilateral(std::size_t n) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Ones(static_cast<Index>(n), static_cast<Index>(n));
    d.diagonal().setZero();
    return FiniteMetricSpace(d);
}

FiniteMetricSpace random_space(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed, Stream::metric_space);
    const int dim = 1 + static_cast<int>(rng.next_u64() % 4);
    Eigen::MatrixXd p(static_cast<Index>(n), dim);
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = rng.normal();
    return FiniteMetricSpace::from_points(p);
}

// Exact covering number by subset enumeration.
std::size_t brute_cover(const FiniteMetricSpace& s, double eps) {
    const std::size_t n = s.size();
    std::size_t best = n;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        const auto k = static_cast<std::size_t>(std::popcount(mask));
        if (k >= best) continue;
        bool ok = true;
        for (std::size_t t = 0; t < n && ok; ++t) {
            bool hit = false;
            for (std::size_t c = 0; c < n && !hit; ++c) hit = (mask >> c & 1u) && s.distance(t, c) <= eps;
            ok = hit;
        }
        if (ok) best = k;
    }
    return best;
}

// Step integral of sqrt(log N(eps)) evaluated at interval midpoints.
double brute_dudley(const FiniteMetricSpace& s) {
    std::set<double> br{0.0};
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) br.insert(s.distance(i, j));
    std::vector<double> b(br.begin(), br.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        const double mid = 0.5 * (b[k] + b[k + 1]);
        total += (b[k + 1] - b[k]) * std::sqrt(std::log(static_cast<double>(brute_cover(s, mid))));
    }
    return total;
}

// gamma_alpha by enumerating every nested chain of subsets with
// |T_0| = 1, |T_k| <= N_k, for tiny spaces.
double brute_gamma(const FiniteMetricSpace& s, double alpha) {
    const std::size_t n = s.size();
    const int depth = chaining_depth(n);
    const std::uint32_t full = (1u << n) - 1;
    auto dist_to = [&](std::size_t t, std::uint32_t mask) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c)
            if (mask >> c & 1u) d = std::min(d, s.distance(t, c));
        return d;
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> chain(static_cast<std::size_t>(depth) + 1);
    auto rec = [&](auto&& self, int k) -> void {
        if (k > depth) {
            double sup = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                double sum = 0.0;
                for (int j = 0; j <= depth; ++j) sum += std::pow(2.0, j / alpha) * dist_to(t, chain[j]);
                sup = std::max(sup, sum);
            }
            best = std::min(best, sup);
            return;
        }
        for (std::uint32_t m = 1; m <= full; ++m) {
            if (k > 0 && (m & chain[k - 1]) != chain[k - 1]) continue;
            if (static_cast<std::size_t>(std::popcount(m)) > level_cardinality(k)) continue;
            chain[k] = m;
            self(self, k + 1);
        }
    };
    rec(rec, 0);
    return best;
}

double ek_sum(const ChainingEstimate& e) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.ek_radii.size(); ++k) s += std::pow(2.0, 0.5 * static_cast<double>(k)) * e.ek_radii[k];
    return s;
}

const double kProductFactor = 1.0 + std::sqrt(2.0);

}  // namespace

TEST_CASE("metric validation") {
    Eigen::MatrixXd d(3, 3);
    d << 0, 1, 5, 1, 0, 1, 5, 1, 0;
    CHECK_THROWS(FiniteMetricSpace(d));
    d << 0, 1, 1, 2, 0, 1, 1, 1, 0;
    CHECK_THROWS(FiniteMetricSpace(d));
}

TEST_CASE("level sizes") {
    CHECK(level_cardinality(0) == 1);
    CHECK(level_cardinality(1) == 4);
    CHECK(level_cardinality(2) == 16);
    CHECK(level_cardinality(3) == 256);
    CHECK(chaining_depth(1) == 0);
    CHECK(chaining_depth(2) == 1);
    CHECK(chaining_depth(5) == 2);
    CHECK(chaining_depth(200) == 3);
}

TEST_CASE("covering number examples") {
    const auto two = line({0.0, 1.0});
    CHECK(covering_number(two, 1.0) == 1);
    CHECK(covering_number(two, 0.4) == 2);
    const auto five = line({0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(covering_number(five, 0.3) == brute_cover(five, 0.3));
    CHECK(covering_number(five, 0.3) == 2);
    CHECK_THROWS_AS(covering_number(five, 0.0), ArgumentError);
}

TEST_CASE("covering number matches enumeration and is monotone") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = random_space(seed, 9);
        std::size_t prev = s.size();
        for (double eps = 0.05; eps < 4.0; eps += 0.05) {
            const auto c = covering_number(s, eps);
            CHECK(c == brute_cover(s, eps));
            CHECK(c <= prev);
            prev = c;
        }
    }
    const auto big = random_space(99, 60);
    std::size_t prev = big.size();
    for (double eps = 0.1; eps < 5.0; eps += 0.1) {
        const auto c = covering_number(big, eps);
        CHECK(c <= prev);
        prev = c;
    }
}

TEST_CASE("entropy radii examples") {
    const auto one = line({0.3});
    for (double e : entropy_radii(one, 3)) CHECK(e == 0.0);
    const auto two = line({0.0, 1.0});
    auto e = entropy_radii(two, 3);
    CHECK(e[0] == doctest::Approx(1.0));
    CHECK(e[1] == 0.0);
    CHECK(e[3] == 0.0);
    e = entropy_radii(equilateral(3), 2);
    CHECK(e[0] == doctest::Approx(1.0));
    CHECK(e[1] == 0.0);
    const auto s = random_space(4, 150);
    e = entropy_radii(s, 4);
    for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] <= e[k - 1]);
    CHECK(e[3] == 0.0);
}

TEST_CASE("gamma examples") {
    CHECK(gamma_upper(line({2.0})).gamma_upper == 0.0);
    CHECK(gamma_upper(line({0.0, 1.0}), 2.0).gamma_upper == doctest::Approx(1.0));
    CHECK(gamma_upper(line({0.0, 1.0}), 1.0).gamma_upper == doctest::Approx(1.0));
}

TEST_CASE("exhaustive gamma matches an enumeration oracle") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        for (std::size_t n : {3u, 4u, 5u}) {
            const auto s = random_space(seed + 100, n);
            for (double alpha : {1.0, 2.0}) {
                const auto ex = gamma_exhaustive(s, alpha);
                CHECK(ex.gamma_upper == doctest::Approx(brute_gamma(s, alpha)).epsilon(1e-12));
                CHECK(ex.gamma_upper <= gamma_greedy(s, alpha).gamma_upper + 1e-12);
                CHECK(ex.sequence.admissible());
            }
        }
    }
}

TEST_CASE("exhaustive equals greedy for at most three points") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        for (std::size_t n : {1u, 2u, 3u}) {
            const auto s = random_space(seed, n);
            CHECK(gamma_exhaustive(s).gamma_upper == doctest::Approx(gamma_greedy(s).gamma_upper).epsilon(1e-12));
        }
    }
}

TEST_CASE("dudley integral") {
    CHECK(dudley_integral(line({1.0})) == 0.0);
    CHECK(dudley_integral(line({0.0, 1.0})) == doctest::Approx(std::sqrt(std::log(2.0))).epsilon(1e-12));
    const auto five = line({0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(std::abs(dudley_integral(five) - brute_dudley(five)) <= 1e-9);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = random_space(seed + 50, 8);
        CHECK(std::abs(dudley_integral(s) - brute_dudley(s)) <= 1e-9);
    }
}

TEST_CASE("greedy sequence invariants") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto s = random_space(seed, 5 + seed * 4);
        const auto g = gamma_greedy(s);
        REQUIRE(g.dudley.has_value());
        CHECK(g.sequence.admissible());
        CHECK(ek_sum(g) <= 4.11 * *g.dudley + 1e-9);
        for (std::size_t k = 1; k < g.ek_radii.size(); ++k) CHECK(g.ek_radii[k] <= g.ek_radii[k - 1]);
        CHECK(g.ek_radii.back() == 0.0);
    }
}

TEST_CASE("product construction") {
    const auto two = line({0.0, 1.0});
    const auto a = gamma_upper(two);
    const auto p = product_admissible_sequence(two, a, two, a);
    CHECK(p.sequence.admissible());
    CHECK(p.gamma_upper <= kProductFactor * 2.0 + 1e-9);
    CHECK(kProductFactor * 2.0 == doctest::Approx(4.82842712));

    const auto one = line({0.5});
    const auto b = gamma_upper(one);
    const auto q = product_admissible_sequence(two, a, one, b);
    CHECK(q.gamma_upper <= kProductFactor * a.gamma_upper + 1e-9);
    CHECK(product_admissible_sequence(one, b, one, b).gamma_upper == 0.0);

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto x = random_space(2 * seed, 2 + seed % 12);
        const auto y = random_space(2 * seed + 1, 1 + seed % 7);
        const auto gx = gamma_greedy(x);
        const auto gy = gamma_greedy(y);
        const auto pr = product_admissible_sequence(x, gx, y, gy);
        CHECK(pr.sequence.admissible());
        CHECK(pr.gamma_upper <= kProductFactor * (gx.gamma_upper + gy.gamma_upper) + 1e-9);
    }
}

TEST_CASE("sphere dudley scales like sqrt(d)") {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int d : {2, 4, 8, 16}) {
        const auto s = sample_sphere(d, 2000, 5);
        CHECK(s.sampled());
        const double r = dudley_integral(s) / std::sqrt(static_cast<double>(d));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(hi / lo <= 3.0);
}

TEST_CASE("theorem and tail bounds") {
    CHECK(theorem_bound(100, 50, 1.0, 3.0, 1.0, 2.0) == doctest::Approx(13.0));
    CHECK(theorem_bound(100, 50, 1.5, 0.0, 2.0, 2.0) == doctest::Approx(2.0 * 1.5 * 10.0));
    CHECK(theorem_bound(16, 16, 2.0, 1.0, 1.0, 1.0) == doctest::Approx(34.0));
    const auto t0 = tail_bound_value(100, 50, 3.0, 1.0, 1.0, 1.0, 0.0);
    CHECK(t0.threshold == doctest::Approx(13.0));
    CHECK(tail_bound_value(1, 1, 0.0, 0.0, 1.0, 1.0, 2.0).probability_floor ==
          doctest::Approx(1.0 - 2.0 * std::exp(-4.0)));
    CHECK(1.0 - 2.0 * std::exp(-4.0) == doctest::Approx(0.963369).epsilon(1e-6));
    CHECK(tail_bound_value(64, 9, 2.0, 0.0, 1.0, 1.0, 0.7).threshold == doctest::Approx(8.0 + 2.0 + 1.4));
}

TEST_CASE("calibration of C") {
    const auto grid1 = ParamGrid({0.0});
    const auto fam = gen_innovations({Family::gaussian, 1.0, 1.0}, 200, 200, grid1, 3);
    const auto cal = calibrate_c(fam, 20, 17);
    CHECK(cal.c_hat >= 0.8);
    CHECK(cal.c_hat <= 1.6);
    const auto scaled = calibrate_c(fam.scaled(2.0), 20, 17);
    CHECK(scaled.c_hat == doctest::Approx(cal.c_hat).epsilon(0.05));
    const auto wide = gen_innovations({Family::gaussian, 1.0, 1.0}, 200, 200, ParamGrid::uniform(0.0, 1.0, 0.1), 3);
    const auto cal11 = calibrate_c(wide, 20, 17);
    CHECK(cal11.c_hat <= cal.c_hat);
    CHECK_THROWS_AS(calibrate_c(ParamMatrixFamily::zeros(grid1, 10, 10), 20, 1), ConfigError);
    CHECK_THROWS(calibrate_c(fam, 19, 1));
}
