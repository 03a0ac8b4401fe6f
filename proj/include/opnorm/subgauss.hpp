#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "opnorm/matcore.hpp"

namespace opnorm {

enum class Family { gaussian, rademacher, uniform_bounded, trig_process };

/// Throws ConfigError naming "family" on an unknown name.
Family parse_family(std::string_view name);
std::string_view family_name(Family family);

/// Innovation law. `scale` multiplies every family and is the entry standard
/// deviation for gaussian, rademacher and uniform_bounded. The trig process
/// entry is scale * (sigma/2) * (xi1 cos(beta) + xi2 sin(beta)).
struct SubGaussianSpec {
    Family family = Family::gaussian;
    double scale = 1.0;
    double trig_sigma = 1.0;

    void validate() const;
};

/// Finite parameter set with a metric. The default metric is |b1 - b2|.
class ParamGrid {
public:
    using Metric = std::function<double(double, double)>;

    explicit ParamGrid(std::vector<double> points, Metric metric = {});

    /// {start, start + step, ..., stop} with the count rounded from the span.
    static ParamGrid uniform(double start, double stop, double step);

    std::size_t size() const noexcept { return points_.size(); }
    double point(std::size_t k) const { return points_.at(k); }
    const std::vector<double>& points() const noexcept { return points_; }
    double distance(std::size_t a, std::size_t b) const;
    double diameter() const;

private:
    std::vector<double> points_;
    Metric metric_;
};

/// beta -> X(beta) over a finite grid with coupled randomness: every
/// evaluation is a pure function of (beta, seed), and all grid points read
/// the same primitive draws.
///
/// Evaluators take a time window so that filters can request lagged
/// columns: column j of the result is time index t0 + j.
class ParamMatrixFamily {
public:
    using Evaluator = std::function<DenseMatrix(double beta, std::uint64_t seed, std::int64_t t0, Index cols)>;

    ParamMatrixFamily(ParamGrid grid, Index rows, Index cols, std::uint64_t seed, Evaluator evaluator);

    /// Same matrix at every grid point; time windows other than [0, T) are
    /// rejected.
    static ParamMatrixFamily constant(ParamGrid grid, DenseMatrix m);
    static ParamMatrixFamily zeros(ParamGrid grid, Index rows, Index cols);

    /// One stored matrix per grid point (external data).
    static ParamMatrixFamily from_matrices(ParamGrid grid, std::vector<DenseMatrix> matrices);

    DenseMatrix evaluate(std::size_t k) const;
    DenseMatrix evaluate_window(std::size_t k, std::int64_t t0, Index cols) const;

    ParamMatrixFamily reseeded(std::uint64_t seed) const;
    ParamMatrixFamily scaled(double c) const;

    /// Whether reseeding produces new draws (false for stored data).
    bool stochastic() const noexcept { return stochastic_; }

    const ParamGrid& grid() const noexcept { return grid_; }
    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Evaluator& evaluator() const noexcept { return evaluator_; }

private:
    ParamGrid grid_;
    Index rows_;
    Index cols_;
    std::uint64_t seed_;
    Evaluator evaluator_;
    bool stochastic_ = true;
};

ParamMatrixFamily gen_innovations(const SubGaussianSpec& spec, Index rows, Index cols, ParamGrid grid,
                                  std::uint64_t seed);

/// Single innovation entry at (i, t, beta); t may be negative (burn-in).
double innovation_entry(const SubGaussianSpec& spec, std::uint64_t seed, Index i, std::int64_t t, double beta);

/// Truncated MA filter: coefficient row i holds psi_{i0}, ..., psi_{iL}.
/// Construction checks |psi_{i tau}| <= theta_tau.
class MAFilterSpec {
public:
    MAFilterSpec(Eigen::MatrixXd coeffs, std::vector<double> theta_bound);

    /// psi_{i tau} = rho^tau for every unit, theta_tau = |rho|^tau.
    static MAFilterSpec geometric(Index units, double rho, Index truncation);

    Index truncation() const noexcept { return coeffs_.cols() - 1; }
    Index units() const noexcept { return coeffs_.rows(); }
    const Eigen::MatrixXd& coeffs() const noexcept { return coeffs_; }
    const std::vector<double>& theta_bound() const noexcept { return theta_; }
    double theta_sum() const;

private:
    Eigen::MatrixXd coeffs_;
    std::vector<double> theta_;
};

/// x_it = sum_{tau<=L} psi_{i tau} eps_{i,t-tau}, reading lags from the
/// extended time axis. Throws ArgumentError when burn_in < L.
ParamMatrixFamily ma_filter(const ParamMatrixFamily& innov, const MAFilterSpec& filt, Index burn_in);

struct SupNorm {
    double value = 0.0;
    std::size_t argmax = 0;
    double beta = 0.0;
};

/// Max over grid points of the operator norm; ties go to the first point.
SupNorm sup_operator_norm(const ParamMatrixFamily& fam);

/// Plug-in psi_2 Orlicz norm: smallest K with mean(exp(Y^2/K^2)) <= 2,
/// found by bisection to 1e-6. Needs at least 100 finite samples.
double orlicz_norm_estimate(std::span<const double> samples);

struct IncrementOrlicz {
    double distance = 0.0;
    double orlicz = 0.0;
};

/// For each pair of grid indices, pools X(b1) - X(b2) entries over `reps`
/// reseeded draws and estimates their psi_2 norm.
std::vector<IncrementOrlicz> increment_orlicz_profile(const ParamMatrixFamily& fam,
                                                      std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                                      int reps, std::uint64_t seed);

}  // namespace opnorm
