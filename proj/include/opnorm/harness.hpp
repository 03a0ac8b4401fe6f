#pragma once

#include <cstdint>
#include <span>
#include <tuple>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opnorm/matcore.hpp"

namespace opnorm {

enum class ExperimentKind { table1, bound_scaling, moment_consistency, tail_check };

ExperimentKind parse_experiment(std::string_view name);
std::string_view experiment_name(ExperimentKind kind);

/// Monte Carlo experiment description. `sub_config` holds the
/// experiment-specific settings; unknown keys are rejected when the
/// experiment runs. Empty `dims_list` selects the experiment default.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::table1;
    std::vector<std::pair<Index, Index>> dims_list;
    int reps = 500;
    std::uint64_t base_seed = 42;
    /// Worker threads; 0 means worker_count(). Never part of the hash.
    int threads = 0;
    nlohmann::json sub_config = nlohmann::json::object();

    /// Strict parse: unknown keys throw ConfigError naming the key.
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// FNV-1a digest of the canonical JSON, threads excluded.
    std::string hash() const;
};

/// Seed of replication `rep` at dims index `dims_index`.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rep, std::size_t dims_index);

struct Replicate {
    std::size_t dims_index = 0;
    int rep = 0;
    std::string variant;
    double estimate = 0.0;
    double truth = 0.0;
    std::uint64_t seed = 0;
};

struct Summary {
    double mean = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double sd = 0.0;  ///< population standard deviation (divisor n)
};

/// bias = mean - truth, rmse = sqrt(mean((x - truth)^2)).
Summary summarize(std::span<const double> estimates, double truth);

struct CellSummary {
    Index rows = 0;
    Index cols = 0;
    std::string variant;
    double truth = 0.0;
    Summary summary;
    int count = 0;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const;
    std::string text() const;
};

struct ExperimentResult {
    std::string experiment;
    nlohmann::json config;
    std::string config_hash;
    std::vector<Replicate> per_rep;
    std::vector<CellSummary> cells;
    Table table;
    /// Experiment-specific scalars (slopes, calibration constants).
    nlohmann::json extra = nlohmann::json::object();
    /// Long-format (x, y, series) rows for external plotting.
    std::vector<std::tuple<double, double, std::string>> plot_points;
    double runtime_seconds = 0.0;

    std::string csv() const { return table.csv(); }
    std::string text() const;
    std::string plot_data_csv() const;
    /// JSON including per-replication values; runtime included only when
    /// `with_runtime` is set so the default output is reproducible.
    nlohmann::json to_json(bool with_runtime = false) const;
};

ExperimentResult run(const ExperimentConfig& config);

/// The factor-model table: N, T in {25, 50, 100} x {psi1, psi2, psi3}.
ExperimentResult table1(int reps, std::uint64_t base_seed, int threads = 0, double sigma = 1.0);

/// Number formatting shared by every CSV writer.
std::string format_number(double v);

}  // namespace opnorm
