#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opnorm/chaining.hpp"
#include "opnorm/errors.hpp"
#include "opnorm/factorrank.hpp"
#include "opnorm/harness.hpp"
#include "opnorm/io.hpp"
#include "opnorm/matcore.hpp"
#include "opnorm/momest.hpp"
#include "opnorm/subgauss.hpp"

namespace py = pybind11;
using namespace opnorm;

namespace {

DenseMatrix to_dense(const Eigen::Ref<const RowMajorMatrix>& a) { return DenseMatrix(RowMajorMatrix(a)); }

FiniteMetricSpace to_space(const Eigen::MatrixXd& distances) { return FiniteMetricSpace(distances); }

py::dict chaining_dict(const ChainingEstimate& e) {
    py::dict d;
    d["gamma_upper"] = e.gamma_upper;
    d["ek_radii"] = e.ek_radii;
    d["dudley"] = e.dudley ? py::cast(*e.dudley) : py::none();
    d["alpha"] = e.alpha;
    d["exhaustive"] = e.exhaustive;
    d["sampled_space"] = e.sampled_space;
    d["sequence"] = e.sequence.subsets;
    return d;
}

py::dict rank_dict(const RankEstimate& e) {
    py::dict d;
    d["r_hat"] = e.r_hat;
    d["sup_singulars"] = e.sup_singulars;
    d["threshold_used"] = e.threshold_used;
    d["sigma_hat"] = e.sigma_hat;
    return d;
}

ParamMatrixFamily family_from_arrays(const std::vector<double>& grid, const std::vector<RowMajorMatrix>& mats) {
    std::vector<DenseMatrix> dense;
    dense.reserve(mats.size());
    for (const auto& m : mats) dense.emplace_back(m);
    return ParamMatrixFamily::from_matrices(ParamGrid(grid), std::move(dense));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Operator-norm bounds, chaining functionals and factor-rank estimation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ReplicationError>(m, "ReplicationError", PyExc_RuntimeError);
    py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    // matcore
    m.def("operator_norm", [](const Eigen::Ref<const RowMajorMatrix>& a) { return operator_norm(to_dense(a)); },
          py::arg("m"));
    m.def("singular_values", [](const Eigen::Ref<const RowMajorMatrix>& a) { return singular_values(to_dense(a)).values; },
          py::arg("m"));
    m.def("top_singular_sum",
          [](const Eigen::Ref<const RowMajorMatrix>& a, Index r) { return top_singular_sum(to_dense(a), r); },
          py::arg("m"), py::arg("r"));

    // subgauss
    py::class_<ParamMatrixFamily>(m, "ParamMatrixFamily")
        .def_property_readonly("grid", [](const ParamMatrixFamily& f) { return f.grid().points(); })
        .def_property_readonly("shape", [](const ParamMatrixFamily& f) { return py::make_tuple(f.rows(), f.cols()); })
        .def_property_readonly("seed", &ParamMatrixFamily::seed)
        .def("evaluate", [](const ParamMatrixFamily& f, std::size_t k) { return f.evaluate(k).values(); }, py::arg("k"))
        .def("reseeded", &ParamMatrixFamily::reseeded, py::arg("seed"))
        .def("scaled", &ParamMatrixFamily::scaled, py::arg("c"))
        .def("sup_operator_norm", [](const ParamMatrixFamily& f) {
            const auto s = sup_operator_norm(f);
            return py::make_tuple(s.value, s.argmax, s.beta);
        })
        .def("__len__", [](const ParamMatrixFamily& f) { return f.grid().size(); });

    m.def("gen_innovations",
          [](const std::string& family, Index rows, Index cols, std::vector<double> grid, std::uint64_t seed,
             double scale, double trig_sigma) {
              return gen_innovations({parse_family(family), scale, trig_sigma}, rows, cols, ParamGrid(std::move(grid)),
                                     seed);
          },
          py::arg("family"), py::arg("rows"), py::arg("cols"), py::arg("grid"), py::arg("seed"), py::arg("scale") = 1.0,
          py::arg("trig_sigma") = 1.0);
    m.def("family_from_arrays", &family_from_arrays, py::arg("grid"), py::arg("matrices"));
    m.def("ma_filter_geometric",
          [](const ParamMatrixFamily& f, double rho, Index lags) {
              return ma_filter(f, MAFilterSpec::geometric(f.rows(), rho, lags), lags);
          },
          py::arg("family"), py::arg("rho"), py::arg("lags"));
    m.def("orlicz_norm_estimate", [](const std::vector<double>& y) { return orlicz_norm_estimate(y); },
          py::arg("samples"));

    // chaining
    m.def("pairwise_distances",
          [](const Eigen::MatrixXd& points) { return FiniteMetricSpace::from_points(points).distances(); },
          py::arg("points"));
    m.def("covering_number", [](const Eigen::MatrixXd& d, double eps) { return covering_number(to_space(d), eps); },
          py::arg("distances"), py::arg("eps"));
    m.def("entropy_radii", [](const Eigen::MatrixXd& d, int kmax) { return entropy_radii(to_space(d), kmax); },
          py::arg("distances"), py::arg("kmax"));
    m.def("gamma_upper", [](const Eigen::MatrixXd& d, double alpha) { return chaining_dict(gamma_upper(to_space(d), alpha)); },
          py::arg("distances"), py::arg("alpha") = 2.0);
    m.def("dudley_integral", [](const Eigen::MatrixXd& d) { return dudley_integral(to_space(d)); }, py::arg("distances"));
    m.def("product_gamma",
          [](const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy) {
              const auto x = to_space(dx);
              const auto y = to_space(dy);
              return chaining_dict(product_admissible_sequence(x, gamma_upper(x), y, gamma_upper(y)));
          },
          py::arg("x_distances"), py::arg("y_distances"));
    m.def("theorem_bound", &theorem_bound, py::arg("rows"), py::arg("cols"), py::arg("k"), py::arg("gamma_b"),
          py::arg("c"), py::arg("alpha") = 2.0);
    m.def("tail_bound_value",
          [](Index n, Index t, double g, double diam, double k, double c, double u) {
              const auto tb = tail_bound_value(n, t, g, diam, k, c, u);
              return py::make_tuple(tb.threshold, tb.probability_floor);
          },
          py::arg("rows"), py::arg("cols"), py::arg("gamma_b"), py::arg("diam_b"), py::arg("k"), py::arg("c"),
          py::arg("u"));

    // factorrank
    m.def("reference_ffm",
          [](Index rows, Index cols, std::uint64_t seed, double sigma) {
              auto spec = FactorModelSpec::reference_design(rows, cols, seed);
              spec.sigma = sigma;
              return generate_ffm(spec, rank_map_grid(spec));
          },
          py::arg("rows"), py::arg("cols"), py::arg("seed"), py::arg("sigma") = 1.0);
    m.def("psi_threshold",
          [](Index n, Index t, double s, const std::string& v) { return psi_threshold(n, t, s, parse_threshold_variant(v)); },
          py::arg("rows"), py::arg("cols"), py::arg("sigma_hat"), py::arg("variant"));
    m.def("sigma_hat", &sigma_hat, py::arg("family"), py::arg("k_max") = 8);
    m.def("estimate_max_rank",
          [](const ParamMatrixFamily& f, const std::string& variant, Index k_max, std::optional<double> psi) {
              ThresholdConfig cfg;
              cfg.variant = parse_threshold_variant(variant);
              cfg.k_max = k_max;
              cfg.explicit_value = psi;
              return rank_dict(estimate_max_rank(f, cfg));
          },
          py::arg("family"), py::arg("variant") = "psi2", py::arg("k_max") = 8, py::arg("psi") = py::none());

    // momest
    m.def("estimate_location",
          [](const Eigen::Ref<const RowMajorMatrix>& data, std::vector<double> grid, const std::string& objective,
             std::optional<Index> r_nt, bool refine) {
              const auto model = location_model(0.0, std::move(grid));
              EstimatorConfig cfg;
              cfg.objective = parse_objective(objective);
              cfg.r_nt = r_nt;
              cfg.refine = refine;
              const auto e = estimate(model, to_dense(data), cfg);
              py::dict d;
              d["beta_hat"] = e.beta_hat;
              d["objective_at_min"] = e.objective_at_min;
              d["profile"] = e.profile;
              return d;
          },
          py::arg("data"), py::arg("grid"), py::arg("objective") = "opnorm", py::arg("r_nt") = py::none(),
          py::arg("refine") = false);

    // harness
    m.def("run_experiment_json",
          [](const std::string& config) {
              const auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(config));
              ExperimentResult res;
              {
                  py::gil_scoped_release release;
                  res = run(cfg);
              }
              auto j = res.to_json();
              j["csv"] = res.csv();
              return j.dump();
          },
          py::arg("config"));
    m.def("format_number", &format_number, py::arg("v"));
}
