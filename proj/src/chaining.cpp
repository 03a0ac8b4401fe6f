#include "opnorm/chaining.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "opnorm/errors.hpp"
#include "opnorm/parallel.hpp"
#include "opnorm/rng.hpp"

namespace opnorm {

namespace {

constexpr std::size_t kExhaustiveCoverLimit = 12;
constexpr std::size_t kExhaustiveGammaLimit = 8;

using Mask = std::uint32_t;

double level_weight(int k, double alpha) { return std::exp2(static_cast<double>(k) / alpha); }

void require_alpha(double alpha) {
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
        throw ArgumentError("alpha must be a finite real >= 1");
    }
}

void require_nonempty(const FiniteMetricSpace& space) {
    if (space.size() == 0) {
        throw ArgumentError("metric space is empty");
    }
}

/// Smallest number of closed eps-balls centred at points, by enumeration.
std::size_t exact_cover_size(const FiniteMetricSpace& space, double eps) {
    const std::size_t n = space.size();
    std::vector<Mask> ball(n, 0);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t t = 0; t < n; ++t) {
            if (space.distance(c, t) <= eps) {
                ball[c] |= Mask{1} << t;
            }
        }
    }
    const Mask full = (Mask{1} << n) - 1;
    std::size_t best = n;
    for (Mask centres = 1; centres <= full; ++centres) {
        const auto count = static_cast<std::size_t>(std::popcount(centres));
        if (count >= best) {
            continue;
        }
        Mask covered = 0;
        for (Mask rest = centres; rest != 0; rest &= rest - 1) {
            covered |= ball[static_cast<std::size_t>(std::countr_zero(rest))];
        }
        if (covered == full) {
            best = count;
        }
    }
    return best;
}

/// min over |S| = m of sup_t d(t, S), by enumeration.
double exact_radius(const FiniteMetricSpace& space, std::size_t m) {
    const std::size_t n = space.size();
    if (m >= n) {
        return 0.0;
    }
    const Mask full = (Mask{1} << n) - 1;
    double best = std::numeric_limits<double>::infinity();
    for (Mask centres = 1; centres <= full; ++centres) {
        if (static_cast<std::size_t>(std::popcount(centres)) != m) {
            continue;
        }
        double radius = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            double nearest = std::numeric_limits<double>::infinity();
            for (Mask rest = centres; rest != 0; rest &= rest - 1) {
                nearest = std::min(nearest, space.distance(static_cast<std::size_t>(std::countr_zero(rest)), t));
            }
            radius = std::max(radius, nearest);
        }
        best = std::min(best, radius);
    }
    return best;
}

double distance_to_set(const FiniteMetricSpace& space, std::size_t t, const std::vector<std::size_t>& set) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t s : set) {
        nearest = std::min(nearest, space.distance(t, s));
    }
    return nearest;
}

/// Per-point distance to each level and the resulting functional value.
struct LevelProfile {
    std::vector<std::vector<double>> dist;  // dist[k][t]
    double value = 0.0;
    std::vector<double> radii;
};

LevelProfile profile_sequence(const FiniteMetricSpace& space, const AdmissibleSequence& seq, double alpha) {
    LevelProfile p;
    const std::size_t n = space.size();
    std::vector<double> sum(n, 0.0);
    for (std::size_t k = 0; k < seq.subsets.size(); ++k) {
        std::vector<double> d(n);
        double radius = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            d[t] = distance_to_set(space, t, seq.subsets[k]);
            sum[t] += level_weight(static_cast<int>(k), alpha) * d[t];
            radius = std::max(radius, d[t]);
        }
        p.dist.push_back(std::move(d));
        p.radii.push_back(radius);
    }
    p.value = sum.empty() ? 0.0 : *std::max_element(sum.begin(), sum.end());
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------

FiniteMetricSpace::FiniteMetricSpace(Eigen::MatrixXd distances, std::vector<std::string> labels)
    : dist_(std::move(distances)), labels_(std::move(labels)) {
    const Index n = dist_.rows();
    if (dist_.cols() != n) {
        throw ValidationError("distance matrix must be square");
    }
    if (!dist_.allFinite()) {
        throw ValidationError("distance matrix has non-finite entries");
    }
    if (labels_.empty()) {
        labels_.resize(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            labels_[static_cast<std::size_t>(i)] = std::to_string(i);
        }
    } else if (static_cast<Index>(labels_.size()) != n) {
        throw ValidationError("label count does not match the number of points");
    }
    for (Index i = 0; i < n; ++i) {
        if (dist_(i, i) != 0.0) {
            throw ValidationError("distance matrix has a non-zero diagonal entry");
        }
        for (Index j = i + 1; j < n; ++j) {
            if (dist_(i, j) != dist_(j, i)) {
                throw ValidationError("distance matrix is not symmetric");
            }
            if (dist_(i, j) < 0.0) {
                throw ValidationError("distance matrix has a negative entry");
            }
        }
    }
    const auto violates = [&](Index a, Index b, Index c) { return dist_(a, b) > dist_(a, c) + dist_(c, b) + 1e-9; };
    if (n <= 120) {
        for (Index a = 0; a < n; ++a) {
            for (Index b = a + 1; b < n; ++b) {
                for (Index c = 0; c < n; ++c) {
                    if (violates(a, b, c)) {
                        throw ValidationError("distance matrix violates the triangle inequality");
                    }
                }
            }
        }
    } else {
        CounterRng rng(0x747269616e676c65ULL, Stream::metric_space);
        for (int s = 0; s < 200000; ++s) {
            const auto a = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
            const auto b = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
            const auto c = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
            if (violates(a, b, c)) {
                throw ValidationError("distance matrix violates the triangle inequality");
            }
        }
    }
}

FiniteMetricSpace FiniteMetricSpace::from_points(const Eigen::MatrixXd& points, std::vector<std::string> labels) {
    if (!points.allFinite()) {
        throw ValidationError("point coordinates must be finite");
    }
    const Index n = points.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            d(i, j) = (points.row(i) - points.row(j)).norm();
            d(j, i) = d(i, j);
        }
    }
    return FiniteMetricSpace(std::move(d), std::move(labels));
}

FiniteMetricSpace FiniteMetricSpace::from_grid(const ParamGrid& grid) {
    const auto n = static_cast<Index>(grid.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::string> labels;
    for (Index i = 0; i < n; ++i) {
        labels.push_back(std::to_string(grid.point(static_cast<std::size_t>(i))));
        for (Index j = i + 1; j < n; ++j) {
            d(i, j) = grid.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            d(j, i) = d(i, j);
        }
    }
    return FiniteMetricSpace(std::move(d), std::move(labels));
}

double FiniteMetricSpace::diameter() const { return dist_.size() == 0 ? 0.0 : dist_.maxCoeff(); }

FiniteMetricSpace sample_sphere(int dim, std::size_t n, std::uint64_t seed) {
    if (dim < 1 || n == 0) {
        throw ArgumentError("sphere sample needs dim >= 1 and n >= 1");
    }
    CounterRng rng(seed, Stream::sphere, static_cast<std::uint32_t>(dim));
    Eigen::MatrixXd pts(static_cast<Index>(n), dim);
    for (Index i = 0; i < pts.rows(); ++i) {
        for (int j = 0; j < dim; ++j) {
            pts(i, j) = rng.normal();
        }
        pts.row(i).normalize();
    }
    FiniteMetricSpace space = FiniteMetricSpace::from_points(pts);
    space.mark_sampled();
    return space;
}

// ---------------------------------------------------------------------------

bool AdmissibleSequence::admissible() const {
    if (subsets.empty() || subsets.front().size() != 1) {
        return false;
    }
    for (std::size_t k = 0; k < subsets.size(); ++k) {
        if (subsets[k].size() > level_cardinality(static_cast<int>(k))) {
            return false;
        }
        if (k > 0) {
            std::vector<std::size_t> prev = subsets[k - 1];
            std::vector<std::size_t> cur = subsets[k];
            std::sort(prev.begin(), prev.end());
            std::sort(cur.begin(), cur.end());
            if (!std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) {
                return false;
            }
        }
    }
    return true;
}

std::size_t level_cardinality(int k) {
    if (k <= 0) {
        return 1;
    }
    if (k >= 6) {
        return std::numeric_limits<std::size_t>::max();
    }
    return std::size_t{1} << (std::size_t{1} << k);
}

int chaining_depth(std::size_t n) {
    int k = 0;
    while (level_cardinality(k) < n) {
        ++k;
    }
    return k;
}

FarthestPointOrder farthest_point_order(const FiniteMetricSpace& space) {
    require_nonempty(space);
    const std::size_t n = space.size();
    std::size_t centre = 0;
    double best_ecc = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double ecc = space.distances().col(static_cast<Index>(i)).maxCoeff();
        if (ecc < best_ecc) {
            best_ecc = ecc;
            centre = i;
        }
    }

    FarthestPointOrder out;
    out.order.reserve(n);
    out.radii.reserve(n);
    std::vector<double> nearest(n);
    std::vector<bool> chosen(n, false);
    std::size_t next = centre;
    for (std::size_t m = 0; m < n; ++m) {
        out.order.push_back(next);
        chosen[next] = true;
        double radius = 0.0;
        std::size_t farthest = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double d = space.distance(next, t);
            nearest[t] = m == 0 ? d : std::min(nearest[t], d);
            if (!chosen[t] && (farthest == n || nearest[t] > radius)) {
                radius = nearest[t];
                farthest = t;
            }
        }
        out.radii.push_back(radius);
        next = farthest;
    }
    return out;
}

std::size_t covering_number(const FiniteMetricSpace& space, double eps) {
    if (!(eps > 0.0)) {
        throw ArgumentError("covering radius must be positive");
    }
    require_nonempty(space);
    if (space.size() <= kExhaustiveCoverLimit) {
        return exact_cover_size(space, eps);
    }
    const auto order = farthest_point_order(space);
    const auto it = std::find_if(order.radii.begin(), order.radii.end(), [eps](double r) { return r <= eps; });
    return static_cast<std::size_t>(it - order.radii.begin()) + 1;
}

std::vector<double> entropy_radii(const FiniteMetricSpace& space, int kmax) {
    if (kmax < 0) {
        throw ArgumentError("kmax must be non-negative");
    }
    require_nonempty(space);
    const std::size_t n = space.size();
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (n <= kExhaustiveCoverLimit) {
        for (int k = 0; k <= kmax; ++k) {
            out[static_cast<std::size_t>(k)] = exact_radius(space, std::min(level_cardinality(k), n));
        }
        return out;
    }
    const auto order = farthest_point_order(space);
    for (int k = 0; k <= kmax; ++k) {
        const std::size_t m = std::min(level_cardinality(k), n);
        out[static_cast<std::size_t>(k)] = m >= n ? 0.0 : order.radii[m - 1];
    }
    return out;
}

double dudley_from_order(const FarthestPointOrder& order) {
    double total = 0.0;
    for (std::size_t m = 2; m <= order.radii.size(); ++m) {
        total += std::sqrt(std::log(static_cast<double>(m))) * (order.radii[m - 2] - order.radii[m - 1]);
    }
    return total;
}

double dudley_integral(const FiniteMetricSpace& space) {
    require_nonempty(space);
    const std::size_t n = space.size();
    if (n > kExhaustiveCoverLimit) {
        return dudley_from_order(farthest_point_order(space));
    }
    // N(eps) only changes when eps crosses a pairwise distance.
    std::vector<double> levels{0.0};
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            levels.push_back(space.distance(a, b));
        }
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < levels.size(); ++j) {
        const auto count = static_cast<double>(exact_cover_size(space, levels[j]));
        total += std::sqrt(std::log(count)) * (levels[j + 1] - levels[j]);
    }
    return total;
}

ChainingEstimate gamma_greedy(const FiniteMetricSpace& space, double alpha) {
    require_alpha(alpha);
    require_nonempty(space);
    const std::size_t n = space.size();
    const auto order = farthest_point_order(space);
    const int depth = chaining_depth(n);

    ChainingEstimate est;
    est.alpha = alpha;
    est.sampled_space = space.sampled();
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::vector<double> sum(n, 0.0);
    std::size_t placed = 0;
    for (int k = 0; k <= depth; ++k) {
        const std::size_t m = std::min(level_cardinality(k), n);
        for (; placed < m; ++placed) {
            const std::size_t c = order.order[placed];
            for (std::size_t t = 0; t < n; ++t) {
                nearest[t] = std::min(nearest[t], space.distance(c, t));
            }
        }
        const double w = level_weight(k, alpha);
        for (std::size_t t = 0; t < n; ++t) {
            sum[t] += w * nearest[t];
        }
        est.sequence.subsets.emplace_back(order.order.begin(), order.order.begin() + static_cast<std::ptrdiff_t>(m));
        est.ek_radii.push_back(m >= n ? 0.0 : order.radii[m - 1]);
    }
    est.gamma_upper = *std::max_element(sum.begin(), sum.end());
    est.dudley = dudley_from_order(order);
    return est;
}

ChainingEstimate gamma_exhaustive(const FiniteMetricSpace& space, double alpha) {
    require_alpha(alpha);
    require_nonempty(space);
    const std::size_t n = space.size();
    if (n > kExhaustiveGammaLimit) {
        throw ArgumentError("exhaustive gamma is limited to " + std::to_string(kExhaustiveGammaLimit) + " points");
    }
    const int depth = chaining_depth(n);
    // Enlarging a level never increases any d(t, T_k), so only maximal
    // levels need enumerating: T_1 holds min(4, n) points, T_2 is everything.
    const std::size_t level1 = std::min<std::size_t>(level_cardinality(1), n);
    const Mask full = (Mask{1} << n) - 1;

    AdmissibleSequence best_seq;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t root = 0; root < n; ++root) {
        for (Mask m1 = 0; m1 <= full; ++m1) {
            if (depth >= 1 && (!(m1 & (Mask{1} << root)) || static_cast<std::size_t>(std::popcount(m1)) != level1)) {
                continue;
            }
            if (depth == 0 && m1 != 0) {
                break;
            }
            AdmissibleSequence seq;
            seq.subsets.push_back({root});
            if (depth >= 1) {
                std::vector<std::size_t> t1;
                for (Mask rest = m1; rest != 0; rest &= rest - 1) {
                    t1.push_back(static_cast<std::size_t>(std::countr_zero(rest)));
                }
                seq.subsets.push_back(std::move(t1));
            }
            for (int k = 2; k <= depth; ++k) {
                std::vector<std::size_t> all(n);
                std::iota(all.begin(), all.end(), std::size_t{0});
                seq.subsets.push_back(std::move(all));
            }
            const double value = profile_sequence(space, seq, alpha).value;
            if (value < best) {
                best = value;
                best_seq = std::move(seq);
            }
        }
    }

    ChainingEstimate est;
    est.alpha = alpha;
    est.exhaustive = true;
    est.sampled_space = space.sampled();
    est.gamma_upper = best;
    est.ek_radii = profile_sequence(space, best_seq, alpha).radii;
    est.sequence = std::move(best_seq);
    return est;
}

ChainingEstimate gamma_upper(const FiniteMetricSpace& space, double alpha) {
    ChainingEstimate greedy = gamma_greedy(space, alpha);
    if (space.size() > kExhaustiveGammaLimit) {
        return greedy;
    }
    ChainingEstimate exact = gamma_exhaustive(space, alpha);
    if (exact.gamma_upper > greedy.gamma_upper) {
        throw InvariantError("exhaustive gamma exceeds the greedy estimate");
    }
    // Radii and Dudley stay tied to the greedy centres so they remain
    // mutually comparable.
    exact.ek_radii = greedy.ek_radii;
    exact.dudley = greedy.dudley;
    return exact;
}

ChainingEstimate product_admissible_sequence(const FiniteMetricSpace& x, const ChainingEstimate& a,
                                             const FiniteMetricSpace& y, const ChainingEstimate& b) {
    if (a.sequence.subsets.empty() || b.sequence.subsets.empty()) {
        throw ArgumentError("product construction needs both factor sequences");
    }
    if (a.alpha != b.alpha) {
        throw ArgumentError("factor estimates use different alpha");
    }
    const auto ka = a.sequence.subsets.size() - 1;
    const auto kb = b.sequence.subsets.size() - 1;
    const std::size_t depth = std::max(ka, kb) + 1;
    const auto factor_level = [](std::size_t k, std::size_t last) { return std::min(k == 0 ? 0 : k - 1, last); };

    ChainingEstimate est;
    est.alpha = a.alpha;
    est.sampled_space = a.sampled_space || b.sampled_space;
    AdmissibleSequence xs;
    AdmissibleSequence ys;
    for (std::size_t k = 0; k <= depth; ++k) {
        const auto& xk = a.sequence.subsets[factor_level(k, ka)];
        const auto& yk = b.sequence.subsets[factor_level(k, kb)];
        if (xk.size() * yk.size() > level_cardinality(static_cast<int>(k))) {
            throw InvariantError("product level " + std::to_string(k) + " has " +
                                 std::to_string(xk.size() * yk.size()) + " points, above 2^(2^k)");
        }
        std::vector<std::size_t> level;
        level.reserve(xk.size() * yk.size());
        for (std::size_t i : xk) {
            for (std::size_t j : yk) {
                level.push_back(i * y.size() + j);
            }
        }
        est.sequence.subsets.push_back(std::move(level));
        xs.subsets.push_back(xk);
        ys.subsets.push_back(yk);
    }
    // d((x, y), X_k x Y_k) = d(x, X_k) + d(y, Y_k), so the supremum splits.
    const LevelProfile px = profile_sequence(x, xs, est.alpha);
    const LevelProfile py = profile_sequence(y, ys, est.alpha);
    est.gamma_upper = px.value + py.value;
    for (std::size_t k = 0; k <= depth; ++k) {
        est.ek_radii.push_back(px.radii[k] + py.radii[k]);
    }
    return est;
}

// ---------------------------------------------------------------------------

double theorem_bound(Index rows, Index cols, double k, double gamma_b, double c, double alpha) {
    if (rows < 1 || cols < 1 || !(k > 0.0) || !(c > 0.0) || gamma_b < 0.0) {
        throw ArgumentError("theorem bound needs positive N, T, K, C and gamma >= 0");
    }
    require_alpha(alpha);
    const auto big = static_cast<double>(std::max(rows, cols));
    return c * k * (std::pow(big, 1.0 / alpha) + gamma_b);
}

TailBound tail_bound_value(Index rows, Index cols, double gamma_b, double diam_b, double k, double c, double u) {
    if (rows < 1 || cols < 1 || !(k > 0.0) || !(c > 0.0) || gamma_b < 0.0 || diam_b < 0.0 || u < 0.0) {
        throw ArgumentError("tail bound needs positive N, T, K, C and non-negative gamma, diam, u");
    }
    const auto big = static_cast<double>(std::max(rows, cols));
    return {c * k * (std::sqrt(big) + gamma_b + (2.0 + diam_b) * u), 1.0 - 2.0 * std::exp(-u * u)};
}

Calibration calibrate_c(const ParamMatrixFamily& fam, int reps, std::uint64_t seed, int threads) {
    if (reps < 20) {
        throw ArgumentError("calibration needs reps >= 20");
    }
    Calibration cal;
    cal.gamma_b = gamma_upper(FiniteMetricSpace::from_grid(fam.grid()), 2.0).gamma_upper;
    const double root = std::sqrt(static_cast<double>(std::max(fam.rows(), fam.cols())));

    std::vector<double> k_hats(static_cast<std::size_t>(reps));
    cal.sups.resize(static_cast<std::size_t>(reps));
    cal.ratios.resize(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        const std::uint64_t rep_seed = split_seed(seed, r);
        const ParamMatrixFamily draw = fam.reseeded(rep_seed);
        double sup = 0.0;
        double k_hat = 0.0;
        for (std::size_t g = 0; g < draw.grid().size(); ++g) {
            const DenseMatrix m = draw.evaluate(g);
            sup = std::max(sup, operator_norm(m));
            k_hat = std::max(k_hat, orlicz_norm_estimate(m.entries()));
        }
        const double denom = k_hat * (root + cal.gamma_b);
        if (!(denom > 0.0)) {
            throw ConfigError("degenerate calibration denominator (K_hat = 0)", "family");
        }
        k_hats[r] = k_hat;
        cal.sups[r] = sup;
        cal.ratios[r] = sup / denom;
    });

    const auto n = static_cast<double>(reps);
    cal.c_hat = std::accumulate(cal.ratios.begin(), cal.ratios.end(), 0.0) / n;
    cal.k_hat = std::accumulate(k_hats.begin(), k_hats.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : cal.ratios) {
        ss += (r - cal.c_hat) * (r - cal.c_hat);
    }
    cal.c_sd = std::sqrt(ss / (n - 1.0));
    return cal;
}

}  // namespace opnorm
