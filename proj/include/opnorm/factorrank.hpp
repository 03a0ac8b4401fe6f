#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "opnorm/subgauss.hpp"

namespace opnorm {

/// Y(beta) = lambda f' restricted to the first R(beta) factors, plus trig
/// noise of scale sigma. sigma = 0 gives the noiseless model.
struct FactorModelSpec {
    Index rows = 100;
    Index cols = 100;
    std::vector<std::pair<double, int>> rank_map;
    double sigma = 1.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError on ranks outside [0, min(N,T)] or bad sigma.
    void validate() const;
    int max_rank() const;

    /// The Monte Carlo design: B = {0, 0.1, ..., 1} with ranks
    /// (4,4,1,4,3,1,2,3,4,4,1) and sigma = 1.
    static FactorModelSpec reference_design(Index rows, Index cols, std::uint64_t seed);
};

/// Optional hook to make loadings or factors depend on beta. Receives beta
/// and the beta-free draws (N x R and T x R) and may modify them in place.
using LoadingHook = std::function<void(double beta, Eigen::MatrixXd& loadings, Eigen::MatrixXd& factors)>;

/// Throws ConfigError if the grid points do not match the rank map keys.
ParamMatrixFamily generate_ffm(const FactorModelSpec& spec, const ParamGrid& grid, LoadingHook hook = {});

/// Grid matching the spec's rank map.
ParamGrid rank_map_grid(const FactorModelSpec& spec);

enum class ThresholdVariant { psi1, psi2, psi3 };

ThresholdVariant parse_threshold_variant(std::string_view name);
std::string_view threshold_variant_name(ThresholdVariant v);

struct ThresholdConfig {
    ThresholdVariant variant = ThresholdVariant::psi2;
    Index k_max = 8;
    std::optional<double> explicit_value;
};

/// sqrt(sup_beta (1/NT) sum_{l > k_max} s_l(Y(beta))^2): residual variance
/// after removing k_max principal components. Requires k_max < min(N,T).
double sigma_hat(const ParamMatrixFamily& fam, Index k_max);

double psi_threshold(Index rows, Index cols, double sigma_hat_value, ThresholdVariant variant);

struct RankEstimate {
    Index r_hat = 0;
    std::vector<double> sup_singulars;  ///< sup_beta s_l(Y(beta)/sqrt(NT))
    double threshold_used = 0.0;
    double sigma_hat = 0.0;
};

/// Pointwise maximum over the grid of the normalized singular spectra.
std::vector<double> sup_spectrum(const ParamMatrixFamily& fam);

/// Counts sup_beta s_l(Y(beta)/sqrt(NT)) >= psi. With no explicit value, psi
/// comes from the variant formula with sigma_hat floored at
/// 1e-10 * sup_beta s_1(Y)/sqrt(NT) so noiseless data stay well-posed.
RankEstimate estimate_max_rank(const ParamMatrixFamily& fam, const ThresholdConfig& cfg);

/// Same estimator for several variants sharing one pass over the data.
std::vector<RankEstimate> estimate_max_rank_all(const ParamMatrixFamily& fam, Index k_max,
                                                std::span<const ThresholdVariant> variants);

}  // namespace opnorm
