#include "opnorm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "opnorm/chaining.hpp"
#include "opnorm/config.hpp"
#include "opnorm/errors.hpp"
#include "opnorm/factorrank.hpp"
#include "opnorm/momest.hpp"
#include "opnorm/parallel.hpp"
#include "opnorm/rng.hpp"
#include "opnorm/subgauss.hpp"

namespace opnorm {

namespace {

using nlohmann::json;
using Dims = std::vector<std::pair<Index, Index>>;

constexpr std::uint64_t kCalibrationDomain = 0xCA1B'0000'0000'0001ULL;

/// Runs `body` and turns anything but a configuration problem into a
/// ReplicationError carrying the seed.
template <typename Fn>
auto guarded(std::uint64_t seed, Fn&& body) {
    try {
        return body();
    } catch (const ConfigError&) {
        throw;
    } catch (const ReplicationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ReplicationError(e.what(), seed);
    }
}

int threads_for(const ExperimentConfig& cfg) { return worker_count(cfg.threads); }

Dims dims_or(const ExperimentConfig& cfg, Dims fallback) { return cfg.dims_list.empty() ? fallback : cfg.dims_list; }

/// Either {"start", "stop", "step"} or an explicit list of points.
ParamGrid read_grid(StrictObject& obj, const std::string& key) {
    if (!obj.has(key)) {
        return ParamGrid::uniform(0.0, 1.0, 0.1);
    }
    const json& raw = obj.raw(key);
    if (raw.is_array()) {
        const auto points = obj.require<std::vector<double>>(key);
        if (points.empty()) {
            throw ConfigError("grid needs at least one point", obj.field(key));
        }
        return ParamGrid(points);
    }
    StrictObject g(raw, obj.field(key));
    const double start = g.get<double>("start", 0.0);
    const double stop = g.get<double>("stop", 1.0);
    const double step = g.get<double>("step", 0.1);
    g.finish();
    return ParamGrid::uniform(start, stop, step);
}

SubGaussianSpec read_family(StrictObject& obj) {
    SubGaussianSpec spec;
    spec.family = parse_family(obj.get<std::string>("family", "trig_process"));
    spec.scale = obj.get<double>("scale", 1.0);
    spec.trig_sigma = obj.get<double>("trig_sigma", 1.0);
    spec.validate();
    return spec;
}

double mean_of(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string dims_label(Index n, Index t) { return fmt::format("{}x{}", n, t); }

// ---------------------------------------------------------------------------

ExperimentResult run_table1(const ExperimentConfig& cfg) {
    StrictObject sub(cfg.sub_config, "sub_config");
    const double sigma = sub.get<double>("sigma", 1.0);
    const Index k_max = sub.get<Index>("k_max", 8);
    std::vector<ThresholdVariant> variants;
    for (const auto& name : sub.get<std::vector<std::string>>("variants", {"psi1", "psi2", "psi3"})) {
        variants.push_back(parse_threshold_variant(name));
    }
    sub.finish();
    if (variants.empty()) {
        throw ConfigError("at least one threshold variant is required", "sub_config.variants");
    }

    const Dims dims = dims_or(cfg, {{25, 25}, {25, 50}, {25, 100}, {50, 25}, {50, 50},
                                    {50, 100}, {100, 25}, {100, 50}, {100, 100}});
    const std::size_t nv = variants.size();
    const auto reps = static_cast<std::size_t>(cfg.reps);
    std::vector<Index> r_hats(dims.size() * reps * nv);
    std::vector<std::uint64_t> seeds(dims.size() * reps);
    int truth = 0;

    parallel_for(dims.size() * reps, threads_for(cfg), [&](std::size_t job) {
        const std::size_t d = job / reps;
        const std::size_t r = job % reps;
        const std::uint64_t seed = replication_seed(cfg.base_seed, r, d);
        seeds[job] = seed;
        guarded(seed, [&] {
            FactorModelSpec spec = FactorModelSpec::reference_design(dims[d].first, dims[d].second, seed);
            spec.sigma = sigma;
            const auto fam = generate_ffm(spec, rank_map_grid(spec));
            const auto est = estimate_max_rank_all(fam, k_max, variants);
            for (std::size_t v = 0; v < nv; ++v) {
                r_hats[job * nv + v] = est[v].r_hat;
            }
            return 0;
        });
    });
    truth = FactorModelSpec::reference_design(25, 25, 0).max_rank();

    ExperimentResult res;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        for (std::size_t v = 0; v < nv; ++v) {
            std::vector<double> values(reps);
            for (std::size_t r = 0; r < reps; ++r) {
                const std::size_t job = d * reps + r;
                values[r] = static_cast<double>(r_hats[job * nv + v]);
                res.per_rep.push_back({d, static_cast<int>(r), std::string(threshold_variant_name(variants[v])),
                                       values[r], static_cast<double>(truth), seeds[job]});
            }
            res.cells.push_back({dims[d].first, dims[d].second, std::string(threshold_variant_name(variants[v])),
                                 static_cast<double>(truth), summarize(values, truth), static_cast<int>(reps)});
        }
    }

    // Layout: one Bias and one RMSE row per N, columns grouped by variant then T.
    std::vector<Index> ns;
    std::vector<Index> ts;
    for (const auto& [n, t] : dims) {
        if (std::find(ns.begin(), ns.end(), n) == ns.end()) ns.push_back(n);
        if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
    }
    res.table.header = {"N", "stat"};
    for (auto v : variants) {
        for (Index t : ts) {
            res.table.header.push_back(fmt::format("{}_T{}", threshold_variant_name(v), t));
        }
    }
    const auto find_cell = [&](Index n, Index t, ThresholdVariant v) -> const CellSummary* {
        for (const auto& c : res.cells) {
            if (c.rows == n && c.cols == t && c.variant == threshold_variant_name(v)) {
                return &c;
            }
        }
        return nullptr;
    };
    for (Index n : ns) {
        for (const char* stat : {"Bias", "RMSE"}) {
            std::vector<std::string> row{std::to_string(n), stat};
            for (auto v : variants) {
                for (Index t : ts) {
                    const CellSummary* c = find_cell(n, t, v);
                    row.push_back(c == nullptr ? "" : format_number(stat[0] == 'B' ? c->summary.bias : c->summary.rmse));
                }
            }
            res.table.rows.push_back(std::move(row));
        }
    }
    for (const auto& c : res.cells) {
        res.plot_points.emplace_back(static_cast<double>(std::min(c.rows, c.cols)), c.summary.bias,
                                     fmt::format("bias_{}_{}", c.variant, dims_label(c.rows, c.cols)));
    }
    res.extra["truth"] = truth;
    res.extra["k_max"] = k_max;
    res.extra["sigma"] = sigma;
    return res;
}

// ---------------------------------------------------------------------------

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - fit.intercept - fit.slope * x[i];
        sse += e * e;
    }
    fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.ci_low = fit.slope - q * fit.slope_se;
    fit.ci_high = fit.slope + q * fit.slope_se;
    return fit;
}

ExperimentResult run_bound_scaling(const ExperimentConfig& cfg) {
    StrictObject sub(cfg.sub_config, "sub_config");
    const SubGaussianSpec family = read_family(sub);
    const ParamGrid grid = read_grid(sub, "grid");
    const int calibration_reps = sub.get<int>("calibration_reps", 50);
    const double fixed_c = sub.get<double>("C", 1.0);
    const bool estimate_k = sub.get<bool>("estimate_k", true);
    sub.finish();

    const Dims dims = dims_or(cfg, {{50, 50}, {100, 100}, {200, 200}, {400, 400}});
    if (dims.size() < 4) {
        throw ConfigError("bound_scaling needs at least 4 dimension points", "dims_list");
    }
    const double gamma_b = gamma_upper(FiniteMetricSpace::from_grid(grid), 2.0).gamma_upper;
    const auto reps = static_cast<std::size_t>(cfg.reps);
    const int threads = threads_for(cfg);

    std::vector<double> sups(dims.size() * reps);
    std::vector<double> k_hats(dims.size() * reps, 0.0);
    std::vector<std::uint64_t> seeds(dims.size() * reps);
    parallel_for(dims.size() * reps, threads, [&](std::size_t job) {
        const std::size_t d = job / reps;
        const std::size_t r = job % reps;
        const std::uint64_t seed = replication_seed(cfg.base_seed, r, d);
        seeds[job] = seed;
        guarded(seed, [&] {
            const auto fam = gen_innovations(family, dims[d].first, dims[d].second, grid, seed);
            double sup = 0.0;
            double k_hat = 0.0;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const DenseMatrix m = fam.evaluate(g);
                sup = std::max(sup, operator_norm(m));
                if (estimate_k && m.entries().size() >= 100) {
                    k_hat = std::max(k_hat, orlicz_norm_estimate(m.entries()));
                }
            }
            sups[job] = sup;
            k_hats[job] = k_hat;
            return 0;
        });
    });

    double c_value = fixed_c;
    ExperimentResult res;
    if (calibration_reps > 0) {
        const auto fam = gen_innovations(family, dims.front().first, dims.front().second, grid, 0);
        const Calibration cal = calibrate_c(fam, calibration_reps, split_seed(cfg.base_seed, kCalibrationDomain), threads);
        c_value = cal.c_hat;
        res.extra["c_hat"] = cal.c_hat;
        res.extra["c_sd"] = cal.c_sd;
        res.extra["calibration_dims"] = dims_label(dims.front().first, dims.front().second);
    }

    res.table.header = {"N", "T", "mean_sup", "sd_sup", "K_hat", "theorem_bound", "ratio", "frac_le_bound"};
    std::vector<double> log_x;
    std::vector<double> log_y;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const std::span<const double> s(sups.data() + d * reps, reps);
        const std::span<const double> k(k_hats.data() + d * reps, reps);
        const double mean_sup = mean_of(s);
        const double k_mean = estimate_k ? mean_of(k) : family.scale;
        const double bound = k_mean > 0.0 ? theorem_bound(dims[d].first, dims[d].second, k_mean, gamma_b, c_value) : 0.0;
        const double frac = bound > 0.0
                                ? static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= bound; })) /
                                      static_cast<double>(reps)
                                : 0.0;
        res.table.rows.push_back({std::to_string(dims[d].first), std::to_string(dims[d].second), format_number(mean_sup),
                                  format_number(sample_sd(s)), format_number(k_mean), format_number(bound),
                                  format_number(bound > 0.0 ? mean_sup / bound : 0.0), format_number(frac)});
        const std::vector<double> values(s.begin(), s.end());
        res.cells.push_back({dims[d].first, dims[d].second, "sup_norm", std::numeric_limits<double>::quiet_NaN(),
                             summarize(values, 0.0), static_cast<int>(reps)});
        for (std::size_t r = 0; r < reps; ++r) {
            res.per_rep.push_back({d, static_cast<int>(r), "sup_norm", s[r], 0.0, seeds[d * reps + r]});
        }
        log_x.push_back(std::log(static_cast<double>(std::max(dims[d].first, dims[d].second))));
        log_y.push_back(std::log(mean_sup));
        res.plot_points.emplace_back(static_cast<double>(std::max(dims[d].first, dims[d].second)), mean_sup, "mean_sup");
        res.plot_points.emplace_back(static_cast<double>(std::max(dims[d].first, dims[d].second)), bound, "theorem_bound");
    }
    const LinearFit fit = fit_line(log_x, log_y);
    res.extra["slope"] = fit.slope;
    res.extra["slope_se"] = fit.slope_se;
    res.extra["slope_ci95"] = {fit.ci_low, fit.ci_high};
    res.extra["gamma_b"] = gamma_b;
    res.extra["C"] = c_value;
    res.extra["family"] = std::string(family_name(family.family));
    return res;
}

// ---------------------------------------------------------------------------

ExperimentResult run_tail_check(const ExperimentConfig& cfg) {
    StrictObject sub(cfg.sub_config, "sub_config");
    const SubGaussianSpec family = read_family(sub);
    const ParamGrid grid = read_grid(sub, "grid");
    const int calibration_reps = sub.get<int>("calibration_reps", 200);
    const std::vector<double> us = sub.get<std::vector<double>>("u", {0.5, 1.0, 1.5, 2.0});
    sub.finish();

    const Dims dims = dims_or(cfg, {{50, 50}});
    const double diam = grid.diameter();
    const auto reps = static_cast<std::size_t>(cfg.reps);
    const int threads = threads_for(cfg);

    ExperimentResult res;
    res.table.header = {"N", "T", "u", "threshold", "exceed_freq", "bound", "binomial_se", "pass"};
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto fam = gen_innovations(family, dims[d].first, dims[d].second, grid, 0);
        const Calibration cal = calibrate_c(fam, calibration_reps,
                                            split_seed(split_seed(cfg.base_seed, kCalibrationDomain), d), threads);
        std::vector<double> sups(reps);
        std::vector<std::uint64_t> seeds(reps);
        parallel_for(reps, threads, [&](std::size_t r) {
            const std::uint64_t seed = replication_seed(cfg.base_seed, r, d);
            seeds[r] = seed;
            sups[r] = guarded(seed, [&] { return sup_operator_norm(fam.reseeded(seed)).value; });
        });
        for (std::size_t r = 0; r < reps; ++r) {
            res.per_rep.push_back({d, static_cast<int>(r), "sup_norm", sups[r], 0.0, seeds[r]});
        }
        res.cells.push_back({dims[d].first, dims[d].second, "sup_norm", std::numeric_limits<double>::quiet_NaN(),
                             summarize(sups, 0.0), static_cast<int>(reps)});
        json checks = json::array();
        for (double u : us) {
            const TailBound tb = tail_bound_value(dims[d].first, dims[d].second, cal.gamma_b, diam, cal.k_hat, cal.c_hat, u);
            const double freq = static_cast<double>(std::count_if(sups.begin(), sups.end(),
                                                                  [&](double v) { return v > tb.threshold; })) /
                                static_cast<double>(reps);
            const double bound = 2.0 * std::exp(-u * u);
            const double p = std::min(bound, 1.0);
            const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
            const bool pass = freq <= bound + 2.0 * se;
            res.table.rows.push_back({std::to_string(dims[d].first), std::to_string(dims[d].second), format_number(u),
                                      format_number(tb.threshold), format_number(freq), format_number(bound),
                                      format_number(se), pass ? "1" : "0"});
            checks.push_back({{"u", u}, {"freq", freq}, {"bound", bound}, {"se", se}, {"pass", pass}});
            res.plot_points.emplace_back(u, freq, "exceed_freq_" + dims_label(dims[d].first, dims[d].second));
            res.plot_points.emplace_back(u, bound, "bound");
        }
        res.extra[dims_label(dims[d].first, dims[d].second)] = {
            {"c_hat", cal.c_hat}, {"c_sd", cal.c_sd}, {"k_hat", cal.k_hat}, {"gamma_b", cal.gamma_b},
            {"diam_b", diam}, {"checks", checks}};
    }
    return res;
}

// ---------------------------------------------------------------------------

ExperimentResult run_moment_consistency(const ExperimentConfig& cfg) {
    StrictObject sub(cfg.sub_config, "sub_config");
    const std::string model_name = sub.get<std::string>("model", "location");
    const json params = sub.has("params") ? sub.raw("params") : json(nullptr);
    const auto objectives = sub.get<std::vector<std::string>>("objectives", {"opnorm", "conventional"});
    const std::optional<Index> r_nt = sub.has("r_nt") ? std::optional<Index>(sub.require<Index>("r_nt")) : std::nullopt;
    const auto weights = sub.get<std::vector<double>>("weights", {});
    const bool refine = sub.get<bool>("refine", false);
    sub.finish();

    const MomentModel model = make_moment_model(model_name, params);
    const Dims dims = dims_or(cfg, {{50, 50}, {100, 100}, {200, 200}});
    const int threads = threads_for(cfg);

    ExperimentResult res;
    res.table.header = {"N", "T", "objective", "mean_abs_error", "sd_abs_error", "bias", "rmse", "mean_noise_term",
                        "noise_shrink"};
    json noise = json::object();
    for (const auto& name : objectives) {
        EstimatorConfig est;
        est.objective = parse_objective(name);
        est.r_nt = r_nt;
        est.weights = weights;
        est.refine = refine;
        est.validate();
        std::vector<ConsistencyRow> rows;
        try {
            rows = consistency_diagnostic(model, est, dims, cfg.reps, cfg.base_seed, threads);
        } catch (const ConfigError&) {
            throw;
        } catch (const ReplicationError&) {
            throw;
        } catch (const std::exception& e) {
            throw ReplicationError(e.what(), cfg.base_seed);
        }
        double prev_noise = 0.0;
        json shrink = json::array();
        for (std::size_t d = 0; d < rows.size(); ++d) {
            const auto& row = rows[d];
            const Summary s = summarize(row.beta_hats, model.beta0);
            const double ratio = d == 0 ? 0.0 : prev_noise / row.mean_noise_term;
            prev_noise = row.mean_noise_term;
            if (d > 0) {
                shrink.push_back(ratio);
            }
            res.table.rows.push_back({std::to_string(row.rows), std::to_string(row.cols), name,
                                      format_number(row.mean_abs_error), format_number(row.sd_abs_error),
                                      format_number(s.bias), format_number(s.rmse), format_number(row.mean_noise_term),
                                      d == 0 ? "" : format_number(ratio)});
            res.cells.push_back({row.rows, row.cols, name, model.beta0, s, cfg.reps});
            for (int r = 0; r < cfg.reps; ++r) {
                res.per_rep.push_back({d, r, name, row.beta_hats[static_cast<std::size_t>(r)], model.beta0,
                                       replication_seed(cfg.base_seed, static_cast<std::size_t>(r), d)});
            }
            res.plot_points.emplace_back(static_cast<double>(std::min(row.rows, row.cols)), row.mean_abs_error,
                                         "mean_abs_error_" + name);
            res.plot_points.emplace_back(static_cast<double>(std::min(row.rows, row.cols)), row.mean_noise_term,
                                         "noise_term_" + name);
        }
        noise[name] = {{"mean_abs_error", json::array()}, {"noise_shrink", shrink}};
        for (const auto& row : rows) {
            noise[name]["mean_abs_error"].push_back(row.mean_abs_error);
        }
    }
    res.extra = noise;
    res.extra["beta0"] = model.beta0;
    return res;
}

std::string json_compact(const json& j) { return j.dump(); }

}  // namespace

// ---------------------------------------------------------------------------

ExperimentKind parse_experiment(std::string_view name) {
    if (name == "table1") return ExperimentKind::table1;
    if (name == "bound_scaling") return ExperimentKind::bound_scaling;
    if (name == "moment_consistency") return ExperimentKind::moment_consistency;
    if (name == "tail_check") return ExperimentKind::tail_check;
    throw ConfigError("unknown experiment '" + std::string(name) + "'", "experiment");
}

std::string_view experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::table1: return "table1";
        case ExperimentKind::bound_scaling: return "bound_scaling";
        case ExperimentKind::moment_consistency: return "moment_consistency";
        case ExperimentKind::tail_check: return "tail_check";
    }
    return "unknown";
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    StrictObject obj(j, "");
    check_schema_version(obj);
    ExperimentConfig cfg;
    cfg.experiment = parse_experiment(obj.require<std::string>("experiment"));
    cfg.dims_list = obj.get<std::vector<std::pair<Index, Index>>>("dims_list", {});
    cfg.reps = obj.get<int>("reps", 500);
    cfg.base_seed = obj.get<std::uint64_t>("base_seed", 42);
    cfg.threads = obj.get<int>("threads", 0);
    if (obj.has("sub_config")) {
        cfg.sub_config = obj.raw("sub_config");
    }
    obj.finish();
    if (cfg.reps < 1) {
        throw ConfigError("reps must be at least 1", "reps");
    }
    for (const auto& [n, t] : cfg.dims_list) {
        if (n < 1 || t < 1) {
            throw ConfigError("dims must be positive", "dims_list");
        }
    }
    return cfg;
}

json ExperimentConfig::to_json() const {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["experiment"] = std::string(experiment_name(experiment));
    j["dims_list"] = dims_list;
    j["reps"] = reps;
    j["base_seed"] = base_seed;
    j["sub_config"] = sub_config;
    return j;
}

std::string ExperimentConfig::hash() const {
    // nlohmann::json objects are key-sorted, so dump() is canonical.
    const std::string text = json_compact(to_json());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rep, std::size_t dims_index) {
    return split_seed(split_seed(base_seed, rep), dims_index);
}

Summary summarize(std::span<const double> estimates, double truth) {
    Summary s;
    if (estimates.empty()) {
        return s;
    }
    const auto n = static_cast<double>(estimates.size());
    s.mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
    s.bias = s.mean - truth;
    double sq = 0.0;
    double var = 0.0;
    for (double x : estimates) {
        sq += (x - truth) * (x - truth);
        var += (x - s.mean) * (x - s.mean);
    }
    s.rmse = std::sqrt(sq / n);
    s.sd = std::sqrt(var / n);
    return s;
}

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    // Avoid "-0.000000" so sign noise never changes the bytes.
    const std::string s = fmt::format("{:.6f}", v);
    return s == "-0.000000" ? "0.000000" : s;
}

std::string Table::csv() const {
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out += cells[i];
            out += i + 1 < cells.size() ? "," : "\n";
        }
    };
    line(header);
    for (const auto& row : rows) {
        line(row);
    }
    return out;
}

std::string Table::text() const {
    std::vector<std::size_t> width(header.size(), 0);
    for (std::size_t i = 0; i < header.size(); ++i) {
        width[i] = header[i].size();
        for (const auto& row : rows) {
            if (i < row.size()) {
                width[i] = std::max(width[i], row[i].size());
            }
        }
    }
    std::string out;
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out += fmt::format("{:>{}}", cells[i], width[i]);
            out += i + 1 < cells.size() ? "  " : "\n";
        }
    };
    line(header);
    for (const auto& row : rows) {
        line(row);
    }
    return out;
}

std::string ExperimentResult::text() const {
    std::string out = fmt::format("# {} (config {})\n", experiment, config_hash);
    out += table.text();
    return out;
}

std::string ExperimentResult::plot_data_csv() const {
    std::string out = "x,y,series\n";
    for (const auto& [x, y, series] : plot_points) {
        out += format_number(x) + "," + format_number(y) + "," + series + "\n";
    }
    return out;
}

json ExperimentResult::to_json(bool with_runtime) const {
    json j;
    j["experiment"] = experiment;
    j["config"] = config;
    j["config_hash"] = config_hash;
    j["header"] = table.header;
    j["rows"] = table.rows;
    j["extra"] = extra;
    json cells_json = json::array();
    for (const auto& c : cells) {
        cells_json.push_back({{"N", c.rows}, {"T", c.cols}, {"variant", c.variant}, {"truth", std::isnan(c.truth) ? json(nullptr) : json(c.truth)},
                              {"mean", c.summary.mean}, {"bias", c.summary.bias}, {"rmse", c.summary.rmse},
                              {"sd", c.summary.sd}, {"count", c.count}});
    }
    j["cells"] = cells_json;
    json reps = json::array();
    for (const auto& r : per_rep) {
        reps.push_back({{"dims_index", r.dims_index}, {"rep", r.rep}, {"variant", r.variant}, {"estimate", r.estimate},
                        {"truth", r.truth}, {"seed", r.seed}});
    }
    j["per_rep"] = reps;
    if (with_runtime) {
        j["runtime_seconds"] = runtime_seconds;
    }
    return j;
}

ExperimentResult run(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult res;
    switch (config.experiment) {
        case ExperimentKind::table1: res = run_table1(config); break;
        case ExperimentKind::bound_scaling: res = run_bound_scaling(config); break;
        case ExperimentKind::moment_consistency: res = run_moment_consistency(config); break;
        case ExperimentKind::tail_check: res = run_tail_check(config); break;
    }
    res.experiment = std::string(experiment_name(config.experiment));
    res.config = config.to_json();
    res.config_hash = config.hash();
    res.extra["reps"] = config.reps;
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

ExperimentResult table1(int reps, std::uint64_t base_seed, int threads, double sigma) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::table1;
    cfg.reps = reps;
    cfg.base_seed = base_seed;
    cfg.threads = threads;
    cfg.sub_config = {{"sigma", sigma}};
    return run(cfg);
}

}  // namespace opnorm
