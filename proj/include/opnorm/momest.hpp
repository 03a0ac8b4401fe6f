#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opnorm/matcore.hpp"

namespace opnorm {

/// Moment model: data, a stack of moment matrices eps_l(beta) per candidate
/// beta, and optionally the population mean E eps_l(beta) for diagnostics.
struct MomentModel {
    using MomentFn = std::function<std::vector<DenseMatrix>(const DenseMatrix& data, double beta)>;
    using ExpectedFn = std::function<std::vector<DenseMatrix>(Index rows, Index cols, double beta)>;
    using DataGen = std::function<DenseMatrix(Index rows, Index cols, std::uint64_t seed)>;

    std::string name;
    double beta0 = 0.0;
    std::vector<double> grid;
    MomentFn moments;
    ExpectedFn expected;
    DataGen data_gen;
};

/// eps_it(beta) = y_it - beta with y_it = beta0 + noise_sd * N(0,1).
MomentModel location_model(double beta0, std::vector<double> grid, double noise_sd = 1.0);

/// Registry lookup. Recognized: "location" with optional params
/// {"beta0", "noise_sd", "grid": {"start","stop","step"}}.
MomentModel make_moment_model(std::string_view name, const nlohmann::json& params);

/// {start, start+step, ..., stop}.
std::vector<double> uniform_points(double start, double stop, double step);

enum class Objective { opnorm, conventional, top_r, weighted };

Objective parse_objective(std::string_view name);
std::string_view objective_name(Objective o);

struct EstimatorConfig {
    Objective objective = Objective::opnorm;
    std::optional<Index> r_nt;
    std::vector<double> weights;
    /// Golden-section pass around the grid minimizer.
    bool refine = false;

    /// Throws ConfigError if top_r lacks r_nt or weighted lacks weights
    /// summing to one.
    void validate() const;
};

/// Objective at one beta:
///   opnorm       ||eps(beta)|| / sqrt(NT)
///   conventional |mean of eps(beta)|
///   top_r        sum_{r <= R_NT} s_r(eps(beta)) / sqrt(NT)
///   weighted     sum_l w_l ||eps_l(beta)|| / sqrt(NT)
double objective_value(const MomentModel& model, const DenseMatrix& data, double beta, const EstimatorConfig& cfg);

struct MomentEstimate {
    double beta_hat = 0.0;
    double objective_at_min = 0.0;
    std::vector<std::pair<double, double>> profile;
};

/// Grid minimizer (ties to the smallest beta) with the full profile.
MomentEstimate estimate(const MomentModel& model, const DenseMatrix& data, const EstimatorConfig& cfg);

/// sup over the grid of ||eps(beta) - E eps(beta)|| / sqrt(NT) (first moment).
double centered_sup_norm(const MomentModel& model, const DenseMatrix& data);

struct ConsistencyRow {
    Index rows = 0;
    Index cols = 0;
    double mean_abs_error = 0.0;
    double sd_abs_error = 0.0;
    double mean_noise_term = 0.0;
    std::vector<double> beta_hats;
    std::vector<double> abs_errors;
    std::vector<double> noise_terms;
};

/// Replication r at dims index d uses data_gen(N, T, split_seed(split_seed(seed, r), d)).
std::vector<ConsistencyRow> consistency_diagnostic(const MomentModel& model, const EstimatorConfig& cfg,
                                                   std::span<const std::pair<Index, Index>> dims, int reps,
                                                   std::uint64_t seed, int threads = 1);

struct TopRRow {
    Index r_nt = 0;
    double mean_top_sum = 0.0;       ///< centered top-R sum / sqrt(NT)
    double mean_bound = 0.0;         ///< R_NT * centered opnorm / sqrt(NT)
    double max_violation = 0.0;      ///< max(top_sum - bound), <= 1e-8 expected
    double rate = 0.0;               ///< R_NT / sqrt(min(N,T))
    bool holds = true;
};

/// Checks sum_{r<=R} s_r(C) <= R ||C|| on the centered moment matrix at
/// beta0 of every realization, for each R in the schedule.
std::vector<TopRRow> top_r_noise_check(const MomentModel& model, std::span<const DenseMatrix> data_reps,
                                       std::span<const Index> r_schedule);

}  // namespace opnorm
