#include "opnorm/subgauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "opnorm/errors.hpp"
#include "opnorm/rng.hpp"

namespace opnorm {

namespace {

Philox4x32::Counter entry_counter(Index i, std::int64_t t) {
    return {static_cast<std::uint32_t>(Stream::innovation), static_cast<std::uint32_t>(i),
            static_cast<std::uint32_t>(static_cast<std::int32_t>(t)), 0u};
}

void check_grid_index(const ParamGrid& grid, std::size_t k) {
    if (k >= grid.size()) {
        throw ArgumentError("grid index " + std::to_string(k) + " out of range (size " +
                            std::to_string(grid.size()) + ")");
    }
}

}  // namespace

Family parse_family(std::string_view name) {
    if (name == "gaussian") return Family::gaussian;
    if (name == "rademacher") return Family::rademacher;
    if (name == "uniform_bounded") return Family::uniform_bounded;
    if (name == "trig_process") return Family::trig_process;
    throw ConfigError("unknown family '" + std::string(name) + "'", "family");
}

std::string_view family_name(Family family) {
    switch (family) {
        case Family::gaussian: return "gaussian";
        case Family::rademacher: return "rademacher";
        case Family::uniform_bounded: return "uniform_bounded";
        case Family::trig_process: return "trig_process";
    }
    return "unknown";
}

void SubGaussianSpec::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ConfigError("scale must be positive", "scale");
    }
    if (family == Family::trig_process && (!(trig_sigma >= 0.0) || !std::isfinite(trig_sigma))) {
        throw ConfigError("trig_sigma must be non-negative", "trig_sigma");
    }
}

// ---------------------------------------------------------------------------

ParamGrid::ParamGrid(std::vector<double> points, Metric metric)
    : points_(std::move(points)), metric_(std::move(metric)) {
    if (points_.empty()) {
        throw ArgumentError("parameter grid is empty");
    }
    for (double p : points_) {
        if (!std::isfinite(p)) {
            throw ValidationError("grid point is not finite");
        }
    }
    if (!metric_) {
        metric_ = [](double a, double b) { return std::abs(a - b); };
        return;
    }
    // Custom metrics: check the axioms on every triple (grids are small).
    const std::size_t n = points_.size();
    for (std::size_t a = 0; a < n; ++a) {
        if (std::abs(distance(a, a)) > 1e-12) {
            throw ValidationError("grid metric has non-zero diagonal");
        }
        for (std::size_t b = a + 1; b < n; ++b) {
            const double dab = distance(a, b);
            if (dab < 0.0 || std::abs(dab - distance(b, a)) > 1e-12) {
                throw ValidationError("grid metric is negative or asymmetric");
            }
            for (std::size_t c = 0; c < n && n <= 64; ++c) {
                if (dab > distance(a, c) + distance(c, b) + 1e-9) {
                    throw ValidationError("grid metric violates the triangle inequality");
                }
            }
        }
    }
}

ParamGrid ParamGrid::uniform(double start, double stop, double step) {
    if (!(step > 0.0) || stop < start) {
        throw ArgumentError("uniform grid needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
    std::vector<double> pts(count);
    for (std::size_t k = 0; k < count; ++k) {
        // Multiplying avoids drift from repeated addition.
        pts[k] = start + static_cast<double>(k) * step;
    }
    return ParamGrid(std::move(pts));
}

double ParamGrid::distance(std::size_t a, std::size_t b) const { return metric_(points_.at(a), points_.at(b)); }

double ParamGrid::diameter() const {
    double diam = 0.0;
    for (std::size_t a = 0; a < points_.size(); ++a) {
        for (std::size_t b = a + 1; b < points_.size(); ++b) {
            diam = std::max(diam, distance(a, b));
        }
    }
    return diam;
}

// ---------------------------------------------------------------------------

ParamMatrixFamily::ParamMatrixFamily(ParamGrid grid, Index rows, Index cols, std::uint64_t seed,
                                     Evaluator evaluator)
    : grid_(std::move(grid)), rows_(rows), cols_(cols), seed_(seed), evaluator_(std::move(evaluator)) {
    if (rows < 1 || cols < 1) {
        throw ArgumentError("family dimensions must be positive");
    }
    if (!evaluator_) {
        throw ArgumentError("family has no evaluator");
    }
}

ParamMatrixFamily ParamMatrixFamily::constant(ParamGrid grid, DenseMatrix m) {
    const Index rows = m.rows();
    const Index cols = m.cols();
    ParamMatrixFamily fam(std::move(grid), rows, cols, 0,
                          [m = std::move(m)](double, std::uint64_t, std::int64_t t0, Index width) {
                              if (t0 != 0 || width != m.cols()) {
                                  throw ArgumentError("constant family has no lagged columns");
                              }
                              return m;
                          });
    fam.stochastic_ = false;
    return fam;
}

ParamMatrixFamily ParamMatrixFamily::zeros(ParamGrid grid, Index rows, Index cols) {
    ParamMatrixFamily fam(std::move(grid), rows, cols, 0,
                          [rows](double, std::uint64_t, std::int64_t, Index width) {
                              return DenseMatrix(rows, width);
                          });
    fam.stochastic_ = false;
    return fam;
}

ParamMatrixFamily ParamMatrixFamily::from_matrices(ParamGrid grid, std::vector<DenseMatrix> matrices) {
    if (matrices.size() != grid.size()) {
        throw ArgumentError("need one matrix per grid point");
    }
    const Index rows = matrices.front().rows();
    const Index cols = matrices.front().cols();
    for (const auto& m : matrices) {
        if (m.rows() != rows || m.cols() != cols) {
            throw ValidationError("matrices in a family must share one shape");
        }
    }
    std::vector<double> pts = grid.points();
    ParamMatrixFamily fam(std::move(grid), rows, cols, 0,
                          [pts = std::move(pts), mats = std::move(matrices)](double beta, std::uint64_t,
                                                                           std::int64_t t0, Index width) {
                              if (t0 != 0 || width != mats.front().cols()) {
                                  throw ArgumentError("stored family has no lagged columns");
                              }
                              const auto it = std::find(pts.begin(), pts.end(), beta);
                              if (it == pts.end()) {
                                  throw ArgumentError("beta is not a grid point of the stored family");
                              }
                              return mats[static_cast<std::size_t>(it - pts.begin())];
                          });
    fam.stochastic_ = false;
    return fam;
}

DenseMatrix ParamMatrixFamily::evaluate(std::size_t k) const { return evaluate_window(k, 0, cols_); }

DenseMatrix ParamMatrixFamily::evaluate_window(std::size_t k, std::int64_t t0, Index cols) const {
    check_grid_index(grid_, k);
    DenseMatrix m = evaluator_(grid_.point(k), seed_, t0, cols);
    if (m.rows() != rows_ || m.cols() != cols) {
        throw InvariantError("evaluator returned a matrix of the wrong shape");
    }
    return m;
}

ParamMatrixFamily ParamMatrixFamily::reseeded(std::uint64_t seed) const {
    ParamMatrixFamily copy = *this;
    copy.seed_ = seed;
    return copy;
}

ParamMatrixFamily ParamMatrixFamily::scaled(double c) const {
    ParamMatrixFamily copy = *this;
    copy.evaluator_ = [inner = evaluator_, c](double beta, std::uint64_t seed, std::int64_t t0, Index cols) {
        return inner(beta, seed, t0, cols) * c;
    };
    return copy;
}

// ---------------------------------------------------------------------------

double innovation_entry(const SubGaussianSpec& spec, std::uint64_t seed, Index i, std::int64_t t, double beta) {
    switch (spec.family) {
        case Family::gaussian:
            return spec.scale * normal_pair(seed, entry_counter(i, t))[0];
        case Family::rademacher:
            return uniform_pair(seed, entry_counter(i, t))[0] < 0.5 ? -spec.scale : spec.scale;
        case Family::uniform_bounded:
            return spec.scale * std::sqrt(3.0) * (2.0 * uniform_pair(seed, entry_counter(i, t))[0] - 1.0);
        case Family::trig_process: {
            const auto xi = normal_pair(seed, entry_counter(i, t));
            return spec.scale * 0.5 * spec.trig_sigma * (xi[0] * std::cos(beta) + xi[1] * std::sin(beta));
        }
    }
    throw ConfigError("unknown family", "family");
}

ParamMatrixFamily gen_innovations(const SubGaussianSpec& spec, Index rows, Index cols, ParamGrid grid,
                                  std::uint64_t seed) {
    spec.validate();
    return ParamMatrixFamily(std::move(grid), rows, cols, seed,
                             [spec, rows](double beta, std::uint64_t s, std::int64_t t0, Index width) {
                                 RowMajorMatrix m(rows, width);
                                 for (Index i = 0; i < rows; ++i) {
                                     for (Index j = 0; j < width; ++j) {
                                         m(i, j) = innovation_entry(spec, s, i, t0 + j, beta);
                                     }
                                 }
                                 return DenseMatrix(std::move(m));
                             });
}

// ---------------------------------------------------------------------------

MAFilterSpec::MAFilterSpec(Eigen::MatrixXd coeffs, std::vector<double> theta_bound)
    : coeffs_(std::move(coeffs)), theta_(std::move(theta_bound)) {
    if (coeffs_.rows() < 1 || coeffs_.cols() < 1) {
        throw ArgumentError("filter needs at least one unit and one coefficient");
    }
    if (static_cast<Index>(theta_.size()) != coeffs_.cols()) {
        throw ArgumentError("theta bound length must equal truncation + 1");
    }
    if (!coeffs_.allFinite()) {
        throw ValidationError("filter coefficients must be finite");
    }
    for (Index tau = 0; tau < coeffs_.cols(); ++tau) {
        const double bound = theta_[static_cast<std::size_t>(tau)];
        if (!(bound >= 0.0) || !std::isfinite(bound)) {
            throw ValidationError("theta bound must be finite and non-negative");
        }
        if (coeffs_.col(tau).cwiseAbs().maxCoeff() > bound) {
            throw ValidationError("coefficient at lag " + std::to_string(tau) + " exceeds its theta bound");
        }
    }
}

MAFilterSpec MAFilterSpec::geometric(Index units, double rho, Index truncation) {
    Eigen::MatrixXd coeffs(units, truncation + 1);
    std::vector<double> theta(static_cast<std::size_t>(truncation + 1));
    for (Index tau = 0; tau <= truncation; ++tau) {
        const double c = std::pow(rho, static_cast<double>(tau));
        coeffs.col(tau).setConstant(c);
        theta[static_cast<std::size_t>(tau)] = std::abs(c);
    }
    return MAFilterSpec(std::move(coeffs), std::move(theta));
}

double MAFilterSpec::theta_sum() const {
    double total = 0.0;
    for (double t : theta_) {
        total += t;
    }
    return total;
}

ParamMatrixFamily ma_filter(const ParamMatrixFamily& innov, const MAFilterSpec& filt, Index burn_in) {
    const Index lags = filt.truncation();
    if (burn_in < lags) {
        throw ArgumentError("burn_in " + std::to_string(burn_in) + " is shorter than truncation " +
                            std::to_string(lags));
    }
    if (filt.units() != innov.rows()) {
        throw ArgumentError("filter has " + std::to_string(filt.units()) + " units but family has " +
                            std::to_string(innov.rows()) + " rows");
    }
    const Index rows = innov.rows();
    return ParamMatrixFamily(
        innov.grid(), rows, innov.cols(), innov.seed(),
        [inner = innov.evaluator(), coeffs = filt.coeffs(), lags, burn_in, rows](
            double beta, std::uint64_t seed, std::int64_t t0, Index width) {
            const DenseMatrix eps = inner(beta, seed, t0 - burn_in, width + burn_in);
            RowMajorMatrix x = RowMajorMatrix::Zero(rows, width);
            for (Index i = 0; i < rows; ++i) {
                for (Index j = 0; j < width; ++j) {
                    double acc = 0.0;
                    for (Index tau = 0; tau <= lags; ++tau) {
                        acc += coeffs(i, tau) * eps(i, burn_in + j - tau);
                    }
                    x(i, j) = acc;
                }
            }
            return DenseMatrix(std::move(x));
        });
}

// ---------------------------------------------------------------------------

SupNorm sup_operator_norm(const ParamMatrixFamily& fam) {
    SupNorm best;
    best.value = -1.0;
    for (std::size_t k = 0; k < fam.grid().size(); ++k) {
        const double v = operator_norm(fam.evaluate(k));
        if (v > best.value) {
            best = {v, k, fam.grid().point(k)};
        }
    }
    return best;
}

double orlicz_norm_estimate(std::span<const double> samples) {
    if (samples.size() < 100) {
        throw ArgumentError("Orlicz estimate needs at least 100 samples, got " + std::to_string(samples.size()));
    }
    double max_abs = 0.0;
    for (double y : samples) {
        if (!std::isfinite(y)) {
            throw ValidationError("Orlicz estimate got a non-finite sample");
        }
        max_abs = std::max(max_abs, std::abs(y));
    }
    if (max_abs == 0.0) {
        return 0.0;
    }
    const auto mean_psi = [&](double k) {
        const double inv = 1.0 / (k * k);
        double acc = 0.0;
        for (double y : samples) {
            acc += std::exp(y * y * inv);
        }
        return acc / static_cast<double>(samples.size()) - 1.0;
    };
    // Every exp(y^2/K^2) <= 2 at K = max|y| / sqrt(ln 2).
    double hi = max_abs / std::sqrt(std::log(2.0));
    double lo = 0.0;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const double v = mean_psi(mid);
        if (std::isfinite(v) && v <= 1.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

std::vector<IncrementOrlicz> increment_orlicz_profile(const ParamMatrixFamily& fam,
                                                      std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                                      int reps, std::uint64_t seed) {
    if (pairs.empty()) {
        throw ArgumentError("increment profile needs at least one pair");
    }
    if (reps < 100) {
        throw ArgumentError("increment profile needs reps >= 100");
    }
    std::vector<IncrementOrlicz> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        check_grid_index(fam.grid(), a);
        check_grid_index(fam.grid(), b);
        std::vector<double> increments;
        increments.reserve(static_cast<std::size_t>(reps * fam.rows() * fam.cols()));
        for (int r = 0; r < reps; ++r) {
            const ParamMatrixFamily draw = fam.reseeded(split_seed(seed, static_cast<std::uint64_t>(r)));
            const DenseMatrix diff = draw.evaluate(a) - draw.evaluate(b);
            increments.insert(increments.end(), diff.entries().begin(), diff.entries().end());
        }
        out.push_back({fam.grid().distance(a, b), orlicz_norm_estimate(increments)});
    }
    return out;
}

}  // namespace opnorm
