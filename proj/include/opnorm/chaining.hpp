#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opnorm/subgauss.hpp"

namespace opnorm {

/// Finite (pseudo-)metric space held as a dense distance matrix.
class FiniteMetricSpace {
public:
    /// Validates symmetry and zero diagonal exactly, non-negativity, and the
    /// triangle inequality to 1e-9 (all triples up to 120 points, a fixed
    /// pseudo-random sample of 200k triples above that).
    explicit FiniteMetricSpace(Eigen::MatrixXd distances, std::vector<std::string> labels = {});

    /// Euclidean metric on the rows of `points`.
    static FiniteMetricSpace from_points(const Eigen::MatrixXd& points, std::vector<std::string> labels = {});

    /// The grid with its own metric.
    static FiniteMetricSpace from_grid(const ParamGrid& grid);

    std::size_t size() const noexcept { return static_cast<std::size_t>(dist_.rows()); }
    double distance(std::size_t a, std::size_t b) const { return dist_(static_cast<Index>(a), static_cast<Index>(b)); }
    const Eigen::MatrixXd& distances() const noexcept { return dist_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    double diameter() const;

    /// Set when the space is a finite sample of a continuous set; estimates
    /// computed on it are sampled-space values.
    bool sampled() const noexcept { return sampled_; }
    void mark_sampled() noexcept { sampled_ = true; }

private:
    Eigen::MatrixXd dist_;
    std::vector<std::string> labels_;
    bool sampled_ = false;
};

/// n points drawn uniformly on the unit sphere S^{dim-1} in R^dim.
FiniteMetricSpace sample_sphere(int dim, std::size_t n, std::uint64_t seed);

/// Nested index sets T_0 subset T_1 subset ..., |T_0| = 1, |T_k| <= 2^(2^k).
struct AdmissibleSequence {
    std::vector<std::vector<std::size_t>> subsets;

    bool admissible() const;
};

struct ChainingEstimate {
    double gamma_upper = 0.0;
    AdmissibleSequence sequence;
    /// Radius of the greedy sequence level k: sup_t d(t, T_k).
    std::vector<double> ek_radii;
    /// Step-function Dudley integral over the same greedy centers. Absent
    /// for product constructions.
    std::optional<double> dudley;
    double alpha = 2.0;
    bool exhaustive = false;
    bool sampled_space = false;
};

/// N_k = 2^(2^k) for k >= 1, N_0 = 1; saturates at SIZE_MAX.
std::size_t level_cardinality(int k);

/// Smallest k with N_k >= n.
int chaining_depth(std::size_t n);

/// Farthest-point traversal from the metric centre (minimum eccentricity).
/// radii[m-1] is the covering radius of the first m centres.
struct FarthestPointOrder {
    std::vector<std::size_t> order;
    std::vector<double> radii;
};

FarthestPointOrder farthest_point_order(const FiniteMetricSpace& space);

/// Greedy eps-cover size; exact (exhaustive) when n <= 12.
std::size_t covering_number(const FiniteMetricSpace& space, double eps);

/// e_k for k = 0..kmax; exact when n <= 12, greedy otherwise.
std::vector<double> entropy_radii(const FiniteMetricSpace& space, int kmax);

/// Upper estimate of gamma_alpha from the nested greedy sequence; for
/// n <= 8 the exhaustive optimum over admissible sequences is returned.
ChainingEstimate gamma_upper(const FiniteMetricSpace& space, double alpha = 2.0);

/// Greedy estimate only, never exhaustive.
ChainingEstimate gamma_greedy(const FiniteMetricSpace& space, double alpha = 2.0);

/// Exact gamma_alpha by enumeration, n <= 8.
ChainingEstimate gamma_exhaustive(const FiniteMetricSpace& space, double alpha = 2.0);

/// Integral of sqrt(log N(eps)) over [0, diam]; exact covering numbers
/// when n <= 12, greedy covering numbers otherwise.
double dudley_integral(const FiniteMetricSpace& space);

/// Dudley integral of the greedy covering numbers from `order`.
double dudley_from_order(const FarthestPointOrder& order);

/// Product sequence on X x Y with d = d_X + d_Y: level 0 is X_0 x Y_0,
/// level k >= 1 is X_{k-1} x Y_{k-1}. Product point (i, j) has index
/// i * |Y| + j. Throws InvariantError if a level exceeds N_k.
ChainingEstimate product_admissible_sequence(const FiniteMetricSpace& x, const ChainingEstimate& a,
                                             const FiniteMetricSpace& y, const ChainingEstimate& b);

/// C K (max(N,T)^(1/alpha) + gamma_B).
double theorem_bound(Index rows, Index cols, double k, double gamma_b, double c, double alpha = 2.0);

struct TailBound {
    double threshold = 0.0;
    double probability_floor = 0.0;
};

/// C K (sqrt(max(N,T)) + gamma_B + (2 + diam_B) u), holding with
/// probability at least 1 - 2 exp(-u^2).
TailBound tail_bound_value(Index rows, Index cols, double gamma_b, double diam_b, double k, double c, double u);

struct Calibration {
    double c_hat = 0.0;
    double c_sd = 0.0;
    double k_hat = 0.0;       ///< mean over replications
    double gamma_b = 0.0;
    std::vector<double> ratios;  ///< per replication
    std::vector<double> sups;
};

/// Empirical C: mean over reps of sup_beta ||X(beta)|| / (K (sqrt(max(N,T)) +
/// gamma_2(B))), K the largest per-beta Orlicz estimate of the entries.
/// Replication r uses fam.reseeded(split_seed(seed, r)).
Calibration calibrate_c(const ParamMatrixFamily& fam, int reps, std::uint64_t seed, int threads = 1);

}  // namespace opnorm
