#include "opnorm/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "opnorm/chaining.hpp"
#include "opnorm/config.hpp"
#include "opnorm/errors.hpp"
#include "opnorm/factorrank.hpp"
#include "opnorm/harness.hpp"
#include "opnorm/io.hpp"
#include "opnorm/momest.hpp"
#include "opnorm/subgauss.hpp"

namespace opnorm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    std::string plot_data;
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
    c.format = default_format;
    cmd->add_option("--config", c.config, "JSON config file (schema_version 1)");
    cmd->add_option("--seed", c.seed, "Seed override");
    cmd->add_option("--out", c.out, "Output path (stdout when omitted)");
    cmd->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "text"}))
        ->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads (0 = all; capped by OPNORM_LAB_THREADS)")
        ->capture_default_str();
}

json load_config(const std::string& path) {
    if (!fs::exists(path)) {
        throw ConfigError("config not found: " + path, "config");
    }
    try {
        return json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()), "config");
    }
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
    if (c.out.empty()) {
        out << text;
        return;
    }
    const fs::path path(c.out);
    if (path.has_parent_path() && !fs::is_directory(path.parent_path())) {
        throw ConfigError("output directory does not exist: " + path.parent_path().string(), "out");
    }
    io::write_text(path, text);
}

std::vector<std::pair<Index, Index>> parse_dims(const std::string& spec) {
    std::vector<std::pair<Index, Index>> dims;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto x = item.find('x');
        try {
            if (x == std::string::npos) {
                const Index n = std::stol(item);
                dims.emplace_back(n, n);
            } else {
                dims.emplace_back(std::stol(item.substr(0, x)), std::stol(item.substr(x + 1)));
            }
        } catch (const std::exception&) {
            throw ConfigError("cannot parse dims '" + item + "' (use NxT or N)", "dims");
        }
    }
    return dims;
}

std::string render_experiment(const ExperimentResult& res, const std::string& format) {
    if (format == "json") return res.to_json().dump(2) + "\n";
    if (format == "text") return res.text();
    return res.csv();
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
    std::string family = "trig_process";
    Index rows = 100;
    Index cols = 100;
    double grid_start = 0.0;
    double grid_stop = 1.0;
    double grid_step = 0.1;
    double scale = 1.0;
    double sigma = 1.0;
    double ma_rho = 0.0;
    Index ma_lags = 0;
};

void apply_simulate_config(const json& j, SimulateOpts& o, Common& c) {
    StrictObject obj(j, "");
    check_schema_version(obj);
    o.family = obj.get("family", o.family);
    o.rows = obj.get("rows", o.rows);
    o.cols = obj.get("cols", o.cols);
    o.scale = obj.get("scale", o.scale);
    o.sigma = obj.get("sigma", o.sigma);
    o.ma_rho = obj.get("ma_rho", o.ma_rho);
    o.ma_lags = obj.get("ma_lags", o.ma_lags);
    if (obj.has("grid")) {
        StrictObject g(obj.raw("grid"), "grid");
        o.grid_start = g.get("start", o.grid_start);
        o.grid_stop = g.get("stop", o.grid_stop);
        o.grid_step = g.get("step", o.grid_step);
        g.finish();
    }
    if (obj.has("seed") && !c.seed) {
        c.seed = obj.require<std::uint64_t>("seed");
    }
    obj.finish();
}

int run_simulate(SimulateOpts o, Common c, std::ostream& out) {
    if (!c.config.empty()) {
        apply_simulate_config(load_config(c.config), o, c);
    }
    if (c.out.empty()) {
        throw ConfigError("simulate needs --out <directory>", "out");
    }
    const std::uint64_t seed = c.seed.value_or(42);
    std::optional<ParamMatrixFamily> fam;
    if (o.family == "ffm") {
        FactorModelSpec spec = FactorModelSpec::reference_design(o.rows, o.cols, seed);
        spec.sigma = o.sigma;
        fam.emplace(generate_ffm(spec, rank_map_grid(spec)));
    } else {
        SubGaussianSpec spec{parse_family(o.family), o.scale, o.sigma};
        fam.emplace(gen_innovations(spec, o.rows, o.cols, ParamGrid::uniform(o.grid_start, o.grid_stop, o.grid_step), seed));
        if (o.ma_lags > 0) {
            fam.emplace(ma_filter(*fam, MAFilterSpec::geometric(o.rows, o.ma_rho, o.ma_lags), o.ma_lags));
        }
    }
    const fs::path manifest = io::write_family(c.out, *fam);
    const SupNorm sup = sup_operator_norm(*fam);
    const json summary = {{"manifest", manifest.string()},
                          {"grid_points", fam->grid().size()},
                          {"rows", fam->rows()},
                          {"cols", fam->cols()},
                          {"seed", seed},
                          {"sup_operator_norm", sup.value},
                          {"argmax_beta", sup.beta}};
    out << summary.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct ChainingOpts {
    std::string points;
    std::string distances;
    int sphere_dim = 0;
    std::size_t samples = 2000;
    double alpha = 2.0;
};

int run_chaining(ChainingOpts o, Common c, std::ostream& out) {
    if (!c.config.empty()) {
        StrictObject obj(load_config(c.config), "");
        check_schema_version(obj);
        o.points = obj.get("points", o.points);
        o.distances = obj.get("distances", o.distances);
        o.sphere_dim = obj.get("sphere_dim", o.sphere_dim);
        o.samples = obj.get("samples", o.samples);
        o.alpha = obj.get("alpha", o.alpha);
        if (obj.has("seed") && !c.seed) {
            c.seed = obj.require<std::uint64_t>("seed");
        }
        obj.finish();
    }
    const int sources = !o.points.empty() + !o.distances.empty() + (o.sphere_dim > 0);
    if (sources != 1) {
        throw ConfigError("give exactly one of --points, --distances, --sphere-dim", "points");
    }
    const auto require_file = [](const std::string& p) {
        if (!fs::exists(p)) {
            throw ConfigError("config not found: " + p, "points");
        }
    };
    std::optional<FiniteMetricSpace> space;
    if (!o.points.empty()) {
        require_file(o.points);
        space.emplace(FiniteMetricSpace::from_points(io::read_points_csv(o.points)));
    } else if (!o.distances.empty()) {
        require_file(o.distances);
        space.emplace(io::read_distance_csv(o.distances));
    } else {
        space.emplace(sample_sphere(o.sphere_dim, o.samples, c.seed.value_or(42)));
    }
    const ChainingEstimate est = gamma_upper(*space, o.alpha);
    if (c.format == "csv") {
        std::string text = "k,level_size,ek_radius\n";
        for (std::size_t k = 0; k < est.ek_radii.size(); ++k) {
            text += fmt::format("{},{},{}\n", k, est.sequence.subsets[k].size(), format_number(est.ek_radii[k]));
        }
        emit(c, text, out);
        return 0;
    }
    json j = io::to_json(est);
    j["n"] = space->size();
    j["diameter"] = space->diameter();
    j["dudley"] = dudley_integral(*space);
    j["dudley_greedy"] = *est.dudley;
    j["entropy_radii"] = entropy_radii(*space, static_cast<int>(est.ek_radii.size()) - 1);
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

// ---------------------------------------------------------------------------

struct RankOpts {
    std::string manifest;
    Index rows = 100;
    Index cols = 100;
    double sigma = 1.0;
    std::string variant = "psi2";
    Index k_max = 8;
    std::optional<double> psi;
};

int run_rank(RankOpts o, Common c, std::ostream& out) {
    if (!c.config.empty()) {
        StrictObject obj(load_config(c.config), "");
        check_schema_version(obj);
        o.manifest = obj.get("manifest", o.manifest);
        o.rows = obj.get("rows", o.rows);
        o.cols = obj.get("cols", o.cols);
        o.sigma = obj.get("sigma", o.sigma);
        o.variant = obj.get("variant", o.variant);
        o.k_max = obj.get("k_max", o.k_max);
        if (obj.has("psi")) {
            o.psi = obj.require<double>("psi");
        }
        if (obj.has("seed") && !c.seed) {
            c.seed = obj.require<std::uint64_t>("seed");
        }
        obj.finish();
    }
    ThresholdConfig cfg;
    cfg.variant = parse_threshold_variant(o.variant);
    cfg.k_max = o.k_max;
    cfg.explicit_value = o.psi;
    std::optional<ParamMatrixFamily> fam;
    if (!o.manifest.empty()) {
        fam.emplace(io::read_manifest(o.manifest));
    } else {
        FactorModelSpec spec = FactorModelSpec::reference_design(o.rows, o.cols, c.seed.value_or(42));
        spec.sigma = o.sigma;
        fam.emplace(generate_ffm(spec, rank_map_grid(spec)));
    }
    const RankEstimate est = estimate_max_rank(*fam, cfg);
    json j = io::to_json(est);
    j["variant"] = o.psi ? "explicit" : o.variant;
    j["k_max"] = o.k_max;
    if (c.format == "csv") {
        std::string text = "l,sup_singular,exceeds\n";
        for (std::size_t l = 0; l < est.sup_singulars.size(); ++l) {
            text += fmt::format("{},{},{}\n", l + 1, format_number(est.sup_singulars[l]),
                                est.sup_singulars[l] >= est.threshold_used ? 1 : 0);
        }
        emit(c, text, out);
        return 0;
    }
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

// ---------------------------------------------------------------------------

struct MomentOpts {
    Index rows = 200;
    Index cols = 200;
    double beta0 = 0.5;
    double noise_sd = 1.0;
    double grid_start = 0.0;
    double grid_stop = 1.0;
    double grid_step = 0.01;
    std::string objective = "opnorm";
    std::optional<Index> r_nt;
    std::vector<double> weights;
    bool refine = false;
    int reps = 0;
    std::string dims = "50,100,200";
};

int run_experiment_config(const json& j, Common& c, int reps_override, std::ostream& out) {
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    if (c.seed) cfg.base_seed = *c.seed;
    if (reps_override > 0) cfg.reps = reps_override;
    if (c.threads > 0) cfg.threads = c.threads;
    const ExperimentResult res = run(cfg);
    emit(c, render_experiment(res, c.format), out);
    if (!c.plot_data.empty()) {
        io::write_text(c.plot_data, res.plot_data_csv());
    }
    return 0;
}

int run_moment(MomentOpts o, Common c, std::ostream& out) {
    if (!c.config.empty()) {
        return run_experiment_config(load_config(c.config), c, o.reps, out);
    }
    const json params = {{"beta0", o.beta0},
                         {"noise_sd", o.noise_sd},
                         {"grid", {{"start", o.grid_start}, {"stop", o.grid_stop}, {"step", o.grid_step}}}};
    if (o.reps > 0) {
        ExperimentConfig cfg;
        cfg.experiment = ExperimentKind::moment_consistency;
        cfg.dims_list = parse_dims(o.dims);
        cfg.reps = o.reps;
        cfg.base_seed = c.seed.value_or(42);
        cfg.threads = c.threads;
        cfg.sub_config = {{"model", "location"}, {"params", params}, {"objectives", {o.objective}}, {"refine", o.refine}};
        if (o.r_nt) cfg.sub_config["r_nt"] = *o.r_nt;
        if (!o.weights.empty()) cfg.sub_config["weights"] = o.weights;
        const ExperimentResult res = run(cfg);
        emit(c, render_experiment(res, c.format), out);
        if (!c.plot_data.empty()) {
            io::write_text(c.plot_data, res.plot_data_csv());
        }
        return 0;
    }
    const MomentModel model = make_moment_model("location", params);
    EstimatorConfig est;
    est.objective = parse_objective(o.objective);
    est.r_nt = o.r_nt;
    est.weights = o.weights;
    est.refine = o.refine;
    const DenseMatrix data = model.data_gen(o.rows, o.cols, c.seed.value_or(42));
    const MomentEstimate res = estimate(model, data, est);
    if (c.format == "csv") {
        std::string text = "beta,objective\n";
        for (const auto& [b, v] : res.profile) {
            text += format_number(b) + "," + format_number(v) + "\n";
        }
        emit(c, text, out);
        return 0;
    }
    json profile = json::array();
    for (const auto& [b, v] : res.profile) {
        profile.push_back({b, v});
    }
    const json j = {{"beta_hat", res.beta_hat},
                    {"objective_at_min", res.objective_at_min},
                    {"objective", o.objective},
                    {"beta0", o.beta0},
                    {"noise_term", centered_sup_norm(model, data)},
                    {"profile", profile}};
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

// ---------------------------------------------------------------------------

struct ExperimentOpts {
    int reps = 0;
    std::string dims;
    double sigma = 1.0;
    Index k_max = 8;
    std::string family = "trig_process";
    int calibration_reps = -1;
    std::vector<double> u;
};

int run_named_experiment(ExperimentKind kind, ExperimentOpts o, Common c, std::ostream& out) {
    if (!c.config.empty()) {
        json j = load_config(c.config);
        if (j.is_object() && !j.contains("experiment")) {
            j["experiment"] = std::string(experiment_name(kind));
        }
        return run_experiment_config(j, c, o.reps, out);
    }
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.base_seed = c.seed.value_or(42);
    cfg.threads = c.threads;
    if (!o.dims.empty()) {
        cfg.dims_list = parse_dims(o.dims);
    }
    switch (kind) {
        case ExperimentKind::table1:
            cfg.reps = o.reps > 0 ? o.reps : 500;
            cfg.sub_config = {{"sigma", o.sigma}, {"k_max", o.k_max}};
            break;
        case ExperimentKind::bound_scaling:
            cfg.reps = o.reps > 0 ? o.reps : 50;
            cfg.sub_config = {{"family", o.family}, {"calibration_reps", o.calibration_reps >= 0 ? o.calibration_reps : 50}};
            break;
        case ExperimentKind::tail_check:
            cfg.reps = o.reps > 0 ? o.reps : 500;
            cfg.sub_config = {{"family", o.family}, {"calibration_reps", o.calibration_reps >= 0 ? o.calibration_reps : 200}};
            if (!o.u.empty()) cfg.sub_config["u"] = o.u;
            break;
        case ExperimentKind::moment_consistency:
            break;
    }
    const ExperimentResult res = run(cfg);
    emit(c, render_experiment(res, c.format), out);
    if (!c.plot_data.empty()) {
        io::write_text(c.plot_data, res.plot_data_csv());
    }
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"opnorm-lab: uniform operator-norm bounds, chaining functionals and factor-rank estimation"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    Common sim_c, chain_c, rank_c, mom_c, t1_c, bound_c, tail_c;
    SimulateOpts sim;
    ChainingOpts chain;
    RankOpts rank;
    MomentOpts mom;
    ExperimentOpts t1, bound, tail;

    auto* simulate = app.add_subcommand("simulate", "Generate a parameter-indexed matrix family as CSV files plus a manifest");
    add_common(simulate, sim_c, "json");
    simulate->add_option("--family", sim.family, "gaussian|rademacher|uniform_bounded|trig_process|ffm");
    simulate->add_option("--rows", sim.rows, "N");
    simulate->add_option("--cols", sim.cols, "T");
    simulate->add_option("--grid-start", sim.grid_start, "First grid point");
    simulate->add_option("--grid-stop", sim.grid_stop, "Last grid point");
    simulate->add_option("--grid-step", sim.grid_step, "Grid spacing");
    simulate->add_option("--scale", sim.scale, "Innovation scale");
    simulate->add_option("--sigma", sim.sigma, "Trig-process sigma / factor-model noise sigma");
    simulate->add_option("--ma-rho", sim.ma_rho, "Geometric MA coefficient rho");
    simulate->add_option("--ma-lags", sim.ma_lags, "MA truncation L (0 = no filter)");

    auto* chaining = app.add_subcommand("chaining", "Covering, entropy radii, gamma_alpha and Dudley integral of a point set");
    add_common(chaining, chain_c, "json");
    chaining->add_option("--points", chain.points, "CSV point cloud (Euclidean metric)");
    chaining->add_option("--distances", chain.distances, "CSV distance matrix");
    chaining->add_option("--sphere-dim", chain.sphere_dim, "Sample the unit sphere in R^d instead");
    chaining->add_option("--samples", chain.samples, "Points sampled on the sphere");
    chaining->add_option("--alpha", chain.alpha, "Functional order alpha >= 1");

    auto* rankcmd = app.add_subcommand("rank", "Maximal-rank estimate for a functional factor model");
    add_common(rankcmd, rank_c, "json");
    rankcmd->add_option("--manifest", rank.manifest, "Grid manifest of per-beta CSV matrices (default: simulate)");
    rankcmd->add_option("--rows", rank.rows, "N for the simulated design");
    rankcmd->add_option("--cols", rank.cols, "T for the simulated design");
    rankcmd->add_option("--sigma", rank.sigma, "Noise sigma for the simulated design");
    rankcmd->add_option("--variant", rank.variant, "psi1|psi2|psi3");
    rankcmd->add_option("--kmax", rank.k_max, "Factors removed before estimating sigma");
    rankcmd->add_option("--psi", rank.psi, "Explicit threshold overriding the formula");

    auto* moment = app.add_subcommand("moment", "Operator-norm moment estimator on the location model");
    add_common(moment, mom_c, "json");
    moment->add_option("--rows", mom.rows, "N");
    moment->add_option("--cols", mom.cols, "T");
    moment->add_option("--beta0", mom.beta0, "True parameter");
    moment->add_option("--noise-sd", mom.noise_sd, "Noise standard deviation");
    moment->add_option("--grid-start", mom.grid_start, "First candidate beta");
    moment->add_option("--grid-stop", mom.grid_stop, "Last candidate beta");
    moment->add_option("--grid-step", mom.grid_step, "Candidate spacing");
    moment->add_option("--objective", mom.objective, "opnorm|conventional|top_r|weighted");
    moment->add_option("--r-nt", mom.r_nt, "R_NT for top_r");
    moment->add_option("--weights", mom.weights, "Weights for the weighted objective");
    moment->add_flag("--refine", mom.refine, "Golden-section refinement around the grid minimum");
    moment->add_option("--reps", mom.reps, "Run the consistency experiment with this many reps (0 = single estimate)");
    moment->add_option("--dims", mom.dims, "Dimensions for the consistency experiment, e.g. 50,100x80");

    auto* t1cmd = app.add_subcommand("table1", "Reproduce the maximal-rank estimator table");
    add_common(t1cmd, t1_c, "csv");
    t1cmd->add_option("--reps", t1.reps, "Replications per cell (0 = 500)");
    t1cmd->add_option("--sigma", t1.sigma, "Noise sigma (0 = noiseless)");
    t1cmd->add_option("--kmax", t1.k_max, "k_max for sigma_hat");
    t1cmd->add_option("--dims", t1.dims, "Override dims, e.g. 25x25,100x100");

    auto* boundcmd = app.add_subcommand("bound", "Sup operator norm scaling against the uniform bound");
    add_common(boundcmd, bound_c, "csv");
    boundcmd->add_option("--reps", bound.reps, "Replications per dimension (0 = 50)");
    boundcmd->add_option("--dims", bound.dims, "Dimensions (>= 4), e.g. 50,100,200,400");
    boundcmd->add_option("--family", bound.family, "Innovation family");
    boundcmd->add_option("--calibration-reps", bound.calibration_reps, "Reps used to calibrate C (-1 = 50, 0 = C=1)");

    auto* tailcmd = app.add_subcommand("tail", "Exceedance frequencies against the tail bound");
    add_common(tailcmd, tail_c, "csv");
    tailcmd->add_option("--reps", tail.reps, "Fresh replications (0 = 500)");
    tailcmd->add_option("--dims", tail.dims, "Dimensions, e.g. 50x50");
    tailcmd->add_option("--family", tail.family, "Innovation family");
    tailcmd->add_option("--calibration-reps", tail.calibration_reps, "Reps used to calibrate C (-1 = 200)");
    tailcmd->add_option("--u", tail.u, "Deviation levels u");

    for (auto [cmd, c] : {std::pair{t1cmd, &t1_c}, std::pair{boundcmd, &bound_c}, std::pair{tailcmd, &tail_c},
                          std::pair{moment, &mom_c}}) {
        cmd->add_option("--plot-data", c->plot_data, "Also write long-format (x,y,series) CSV here");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim, sim_c, out);
        if (chaining->parsed()) return run_chaining(chain, chain_c, out);
        if (rankcmd->parsed()) return run_rank(rank, rank_c, out);
        if (moment->parsed()) return run_moment(mom, mom_c, out);
        if (t1cmd->parsed()) return run_named_experiment(ExperimentKind::table1, t1, t1_c, out);
        if (boundcmd->parsed()) return run_named_experiment(ExperimentKind::bound_scaling, bound, bound_c, out);
        if (tailcmd->parsed()) return run_named_experiment(ExperimentKind::tail_check, tail, tail_c, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what();
        if (!e.field().empty()) {
            err << " (field: " << e.field() << ")";
        }
        err << "\n";
        return 2;
    } catch (const ReplicationError& e) {
        err << "runtime error in replication with seed " << e.seed() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace opnorm::cli
