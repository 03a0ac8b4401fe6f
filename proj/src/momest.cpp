#include "opnorm/momest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "opnorm/errors.hpp"
#include "opnorm/parallel.hpp"
#include "opnorm/rng.hpp"

namespace opnorm {

namespace {

double root_nt(const DenseMatrix& m) { return std::sqrt(static_cast<double>(m.rows()) * static_cast<double>(m.cols())); }

const DenseMatrix& single_moment(const std::vector<DenseMatrix>& stack) {
    if (stack.size() != 1) {
        throw ConfigError("objective needs exactly one moment matrix, model returned " + std::to_string(stack.size()),
                          "objective");
    }
    return stack.front();
}

std::vector<DenseMatrix> evaluate_moments(const MomentModel& model, const DenseMatrix& data, double beta) {
    try {
        return model.moments(data, beta);
    } catch (const ValidationError& e) {
        throw DataError("moment function at beta=" + std::to_string(beta) + " is not finite: " + e.what());
    }
}

}  // namespace

std::vector<double> uniform_points(double start, double stop, double step) {
    if (!(step > 0.0) || stop < start) {
        throw ConfigError("grid needs step > 0 and stop >= start", "grid");
    }
    const auto count = static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
    std::vector<double> pts(count);
    for (std::size_t k = 0; k < count; ++k) {
        pts[k] = start + static_cast<double>(k) * step;
    }
    return pts;
}

MomentModel location_model(double beta0, std::vector<double> grid, double noise_sd) {
    if (grid.empty()) {
        throw ConfigError("moment grid is empty", "grid");
    }
    if (!(noise_sd >= 0.0)) {
        throw ConfigError("noise_sd must be non-negative", "noise_sd");
    }
    MomentModel model;
    model.name = "location";
    model.beta0 = beta0;
    model.grid = std::move(grid);
    model.moments = [](const DenseMatrix& y, double beta) {
        return std::vector<DenseMatrix>{DenseMatrix(RowMajorMatrix(y.values().array() - beta))};
    };
    model.expected = [beta0](Index rows, Index cols, double beta) {
        return std::vector<DenseMatrix>{DenseMatrix(RowMajorMatrix::Constant(rows, cols, beta0 - beta))};
    };
    model.data_gen = [beta0, noise_sd](Index rows, Index cols, std::uint64_t seed) {
        RowMajorMatrix y(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                const auto z = normal_pair(seed, {static_cast<std::uint32_t>(Stream::moment_data),
                                                  static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), 0u});
                y(i, j) = beta0 + noise_sd * z[0];
            }
        }
        return DenseMatrix(std::move(y));
    };
    return model;
}

MomentModel make_moment_model(std::string_view name, const nlohmann::json& params) {
    if (name != "location") {
        throw ConfigError("unknown moment model '" + std::string(name) + "'", "model");
    }
    double beta0 = 0.5;
    double noise_sd = 1.0;
    double start = 0.0;
    double stop = 1.0;
    double step = 0.01;
    if (!params.is_null()) {
        for (const auto& [key, value] : params.items()) {
            if (key == "beta0") {
                beta0 = value.get<double>();
            } else if (key == "noise_sd") {
                noise_sd = value.get<double>();
            } else if (key == "grid") {
                for (const auto& [gk, gv] : value.items()) {
                    if (gk == "start") start = gv.get<double>();
                    else if (gk == "stop") stop = gv.get<double>();
                    else if (gk == "step") step = gv.get<double>();
                    else throw ConfigError("unknown key 'grid." + gk + "'", "grid." + gk);
                }
            } else {
                throw ConfigError("unknown key '" + key + "' for model location", key);
            }
        }
    }
    return location_model(beta0, uniform_points(start, stop, step), noise_sd);
}

Objective parse_objective(std::string_view name) {
    if (name == "opnorm") return Objective::opnorm;
    if (name == "conventional") return Objective::conventional;
    if (name == "top_r") return Objective::top_r;
    if (name == "weighted") return Objective::weighted;
    throw ConfigError("unknown objective '" + std::string(name) + "'", "objective");
}

std::string_view objective_name(Objective o) {
    switch (o) {
        case Objective::opnorm: return "opnorm";
        case Objective::conventional: return "conventional";
        case Objective::top_r: return "top_r";
        case Objective::weighted: return "weighted";
    }
    return "unknown";
}

void EstimatorConfig::validate() const {
    if (objective == Objective::top_r && (!r_nt || *r_nt < 1)) {
        throw ConfigError("top_r objective needs a positive r_nt", "r_nt");
    }
    if (objective == Objective::weighted) {
        if (weights.empty()) {
            throw ConfigError("weighted objective needs weights", "weights");
        }
        double total = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) {
                throw ConfigError("weights must be positive", "weights");
            }
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ConfigError("weights must sum to 1", "weights");
        }
    }
}

double objective_value(const MomentModel& model, const DenseMatrix& data, double beta, const EstimatorConfig& cfg) {
    cfg.validate();
    const std::vector<DenseMatrix> stack = evaluate_moments(model, data, beta);
    switch (cfg.objective) {
        case Objective::opnorm: {
            const DenseMatrix& eps = single_moment(stack);
            return operator_norm(eps) / root_nt(eps);
        }
        case Objective::conventional: {
            const DenseMatrix& eps = single_moment(stack);
            return std::abs(eps.values().mean());
        }
        case Objective::top_r: {
            const DenseMatrix& eps = single_moment(stack);
            return top_singular_sum(eps, *cfg.r_nt) / root_nt(eps);
        }
        case Objective::weighted: {
            if (stack.size() != cfg.weights.size()) {
                throw ConfigError("model returned " + std::to_string(stack.size()) + " moments but " +
                                      std::to_string(cfg.weights.size()) + " weights were given",
                                  "weights");
            }
            double total = 0.0;
            for (std::size_t l = 0; l < stack.size(); ++l) {
                total += cfg.weights[l] * operator_norm(stack[l]) / root_nt(stack[l]);
            }
            return total;
        }
    }
    throw ConfigError("unknown objective", "objective");
}

MomentEstimate estimate(const MomentModel& model, const DenseMatrix& data, const EstimatorConfig& cfg) {
    cfg.validate();
    if (model.grid.empty()) {
        throw ConfigError("moment grid is empty", "grid");
    }
    MomentEstimate est;
    est.profile.reserve(model.grid.size());
    std::vector<double> sorted = model.grid;
    std::sort(sorted.begin(), sorted.end());
    est.objective_at_min = std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double v = objective_value(model, data, sorted[k], cfg);
        if (!std::isfinite(v)) {
            throw DataError("objective is not finite at beta=" + std::to_string(sorted[k]));
        }
        est.profile.emplace_back(sorted[k], v);
        if (v < est.objective_at_min) {
            est.objective_at_min = v;
            best_k = k;
        }
    }
    est.beta_hat = sorted[best_k];

    if (cfg.refine && sorted.size() > 1) {
        double lo = sorted[best_k > 0 ? best_k - 1 : 0];
        double hi = sorted[std::min(best_k + 1, sorted.size() - 1)];
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - ratio * (hi - lo);
        double x2 = lo + ratio * (hi - lo);
        double f1 = objective_value(model, data, x1, cfg);
        double f2 = objective_value(model, data, x2, cfg);
        for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = objective_value(model, data, x1, cfg);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = objective_value(model, data, x2, cfg);
            }
        }
        const double x = f1 <= f2 ? x1 : x2;
        const double f = std::min(f1, f2);
        if (f < est.objective_at_min) {
            est.beta_hat = x;
            est.objective_at_min = f;
        }
    }
    return est;
}

double centered_sup_norm(const MomentModel& model, const DenseMatrix& data) {
    if (!model.expected) {
        throw ConfigError("model '" + model.name + "' has no expected-moment function", "model");
    }
    double sup = 0.0;
    for (double beta : model.grid) {
        const DenseMatrix eps = single_moment(evaluate_moments(model, data, beta));
        const DenseMatrix mean = single_moment(model.expected(data.rows(), data.cols(), beta));
        sup = std::max(sup, operator_norm(eps - mean) / root_nt(eps));
    }
    return sup;
}

std::vector<ConsistencyRow> consistency_diagnostic(const MomentModel& model, const EstimatorConfig& cfg,
                                                   std::span<const std::pair<Index, Index>> dims, int reps,
                                                   std::uint64_t seed, int threads) {
    if (reps < 20) {
        throw ArgumentError("consistency diagnostic needs reps >= 20");
    }
    cfg.validate();
    std::vector<ConsistencyRow> rows;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        ConsistencyRow row;
        row.rows = dims[d].first;
        row.cols = dims[d].second;
        row.beta_hats.resize(static_cast<std::size_t>(reps));
        row.abs_errors.resize(static_cast<std::size_t>(reps));
        row.noise_terms.resize(static_cast<std::size_t>(reps));
        parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
            const std::uint64_t rep_seed = split_seed(split_seed(seed, r), d);
            try {
                const DenseMatrix data = model.data_gen(row.rows, row.cols, rep_seed);
                row.beta_hats[r] = estimate(model, data, cfg).beta_hat;
                row.abs_errors[r] = std::abs(row.beta_hats[r] - model.beta0);
                row.noise_terms[r] = centered_sup_norm(model, data);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ReplicationError(e.what(), rep_seed);
            }
        });
        const auto n = static_cast<double>(reps);
        row.mean_abs_error = std::accumulate(row.abs_errors.begin(), row.abs_errors.end(), 0.0) / n;
        row.mean_noise_term = std::accumulate(row.noise_terms.begin(), row.noise_terms.end(), 0.0) / n;
        double ss = 0.0;
        for (double e : row.abs_errors) {
            ss += (e - row.mean_abs_error) * (e - row.mean_abs_error);
        }
        row.sd_abs_error = std::sqrt(ss / (n - 1.0));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<TopRRow> top_r_noise_check(const MomentModel& model, std::span<const DenseMatrix> data_reps,
                                       std::span<const Index> r_schedule) {
    if (!model.expected) {
        throw ConfigError("model '" + model.name + "' has no expected-moment function", "model");
    }
    std::vector<TopRRow> out;
    std::vector<std::pair<SingularSpectrum, double>> spectra;
    Index min_dim = std::numeric_limits<Index>::max();
    for (const DenseMatrix& data : data_reps) {
        const DenseMatrix eps = single_moment(evaluate_moments(model, data, model.beta0));
        const DenseMatrix mean = single_moment(model.expected(data.rows(), data.cols(), model.beta0));
        spectra.emplace_back(singular_values(eps - mean), root_nt(data));
        min_dim = std::min(min_dim, std::min(data.rows(), data.cols()));
    }
    for (Index r : r_schedule) {
        if (r < 1 || r >= min_dim) {
            throw ArgumentError("R_NT " + std::to_string(r) + " must lie in [1, min(N,T))");
        }
        TopRRow row;
        row.r_nt = r;
        row.rate = static_cast<double>(r) / std::sqrt(static_cast<double>(min_dim));
        row.max_violation = -std::numeric_limits<double>::infinity();
        for (const auto& [s, norm] : spectra) {
            const double top = std::accumulate(s.values.begin(), s.values.begin() + r, 0.0) / norm;
            const double bound = static_cast<double>(r) * s.values.front() / norm;
            row.mean_top_sum += top;
            row.mean_bound += bound;
            row.max_violation = std::max(row.max_violation, top - bound);
        }
        const auto n = static_cast<double>(spectra.size());
        row.mean_top_sum /= n;
        row.mean_bound /= n;
        row.holds = row.max_violation <= 1e-8;
        out.push_back(row);
    }
    return out;
}

}  // namespace opnorm
