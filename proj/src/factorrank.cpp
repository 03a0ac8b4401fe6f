#include "opnorm/factorrank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "opnorm/errors.hpp"
#include "opnorm/rng.hpp"

namespace opnorm {

namespace {

constexpr double kRelativeNoiseFloor = 1e-10;

double factor_draw(Stream stream, std::uint64_t seed, std::int64_t index, Index r) {
    return normal_pair(seed, {static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(static_cast<std::int32_t>(index)),
                              static_cast<std::uint32_t>(r), 0u})[0];
}

struct SpectrumPass {
    std::vector<double> sup;        // normalized by sqrt(NT)
    double sigma_sq = 0.0;          // sup over beta of trailing energy / NT
};

SpectrumPass scan(const ParamMatrixFamily& fam, Index k_max) {
    const double nt = static_cast<double>(fam.rows()) * static_cast<double>(fam.cols());
    const double norm = std::sqrt(nt);
    SpectrumPass pass;
    pass.sup.assign(static_cast<std::size_t>(std::min(fam.rows(), fam.cols())), 0.0);
    for (std::size_t k = 0; k < fam.grid().size(); ++k) {
        const auto s = singular_values(fam.evaluate(k)).values;
        double trailing = 0.0;
        for (std::size_t l = 0; l < s.size(); ++l) {
            pass.sup[l] = std::max(pass.sup[l], s[l] / norm);
            if (static_cast<Index>(l) >= k_max) {
                trailing += s[l] * s[l];
            }
        }
        pass.sigma_sq = std::max(pass.sigma_sq, trailing / nt);
    }
    return pass;
}

void check_k_max(const ParamMatrixFamily& fam, Index k_max) {
    if (k_max < 1 || k_max >= std::min(fam.rows(), fam.cols())) {
        throw ArgumentError("k_max " + std::to_string(k_max) + " must lie in [1, min(N,T))");
    }
}

RankEstimate count_exceedances(const std::vector<double>& sup, double threshold, double sigma) {
    RankEstimate est;
    est.sup_singulars = sup;
    est.threshold_used = threshold;
    est.sigma_hat = sigma;
    // Ties count as exceedances.
    est.r_hat = static_cast<Index>(std::count_if(sup.begin(), sup.end(), [&](double s) { return s >= threshold; }));
    return est;
}

double floored_sigma(const SpectrumPass& pass) {
    const double top = pass.sup.empty() ? 0.0 : pass.sup.front();
    return std::max({std::sqrt(pass.sigma_sq), kRelativeNoiseFloor * top, std::numeric_limits<double>::min()});
}

}  // namespace

void FactorModelSpec::validate() const {
    if (rows < 1 || cols < 1) {
        throw ConfigError("factor model dimensions must be positive", "N");
    }
    if (rank_map.empty()) {
        throw ConfigError("rank map is empty", "rank_map");
    }
    for (const auto& [beta, r] : rank_map) {
        if (r < 0 || r > std::min(rows, cols)) {
            throw ConfigError("rank " + std::to_string(r) + " at beta=" + std::to_string(beta) +
                                  " is outside [0, min(N,T)]",
                              "rank_map");
        }
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("sigma must be finite and non-negative", "sigma");
    }
}

int FactorModelSpec::max_rank() const {
    int r = 0;
    for (const auto& entry : rank_map) {
        r = std::max(r, entry.second);
    }
    return r;
}

FactorModelSpec FactorModelSpec::reference_design(Index rows, Index cols, std::uint64_t seed) {
    FactorModelSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.seed = seed;
    spec.sigma = 1.0;
    const int ranks[] = {4, 4, 1, 4, 3, 1, 2, 3, 4, 4, 1};
    for (int k = 0; k < 11; ++k) {
        spec.rank_map.emplace_back(0.1 * k, ranks[k]);
    }
    return spec;
}

ParamGrid rank_map_grid(const FactorModelSpec& spec) {
    std::vector<double> pts;
    for (const auto& entry : spec.rank_map) {
        pts.push_back(entry.first);
    }
    return ParamGrid(std::move(pts));
}

ParamMatrixFamily generate_ffm(const FactorModelSpec& spec, const ParamGrid& grid, LoadingHook hook) {
    spec.validate();
    if (grid.size() != spec.rank_map.size()) {
        throw ConfigError("grid has " + std::to_string(grid.size()) + " points but rank map has " +
                              std::to_string(spec.rank_map.size()),
                          "rank_map");
    }
    std::vector<std::pair<double, int>> ranks = spec.rank_map;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (std::abs(grid.point(k) - ranks[k].first) > 1e-12) {
            throw ConfigError("grid point " + std::to_string(grid.point(k)) + " does not match rank map key " +
                                  std::to_string(ranks[k].first),
                              "rank_map");
        }
        ranks[k].first = grid.point(k);
    }
    const Index rows = spec.rows;
    const Index max_rank = spec.max_rank();
    const SubGaussianSpec noise{Family::trig_process, 1.0, spec.sigma};

    return ParamMatrixFamily(
        grid, spec.rows, spec.cols, spec.seed,
        [ranks = std::move(ranks), rows, max_rank, noise, hook = std::move(hook)](
            double beta, std::uint64_t seed, std::int64_t t0, Index width) {
            const auto it = std::find_if(ranks.begin(), ranks.end(), [beta](const auto& e) { return e.first == beta; });
            if (it == ranks.end()) {
                throw ArgumentError("beta is not a grid point of the factor model");
            }
            const Index r_beta = it->second;
            Eigen::MatrixXd lambda(rows, max_rank);
            Eigen::MatrixXd f(width, max_rank);
            for (Index r = 0; r < max_rank; ++r) {
                for (Index i = 0; i < rows; ++i) {
                    lambda(i, r) = factor_draw(Stream::loading, seed, i, r);
                }
                for (Index j = 0; j < width; ++j) {
                    f(j, r) = factor_draw(Stream::factor, seed, t0 + j, r);
                }
            }
            if (hook) {
                hook(beta, lambda, f);
            }
            RowMajorMatrix y = lambda.leftCols(r_beta) * f.leftCols(r_beta).transpose();
            if (noise.trig_sigma > 0.0) {
                // Noise draws live in their own stream so factors and noise
                // are independent.
                const std::uint64_t noise_seed = split_seed(seed, static_cast<std::uint64_t>(Stream::factor_noise));
                for (Index i = 0; i < rows; ++i) {
                    for (Index j = 0; j < width; ++j) {
                        y(i, j) += innovation_entry(noise, noise_seed, i, t0 + j, beta);
                    }
                }
            }
            return DenseMatrix(std::move(y));
        });
}

ThresholdVariant parse_threshold_variant(std::string_view name) {
    if (name == "psi1") return ThresholdVariant::psi1;
    if (name == "psi2") return ThresholdVariant::psi2;
    if (name == "psi3") return ThresholdVariant::psi3;
    throw ConfigError("unknown threshold variant '" + std::string(name) + "'", "variant");
}

std::string_view threshold_variant_name(ThresholdVariant v) {
    switch (v) {
        case ThresholdVariant::psi1: return "psi1";
        case ThresholdVariant::psi2: return "psi2";
        case ThresholdVariant::psi3: return "psi3";
    }
    return "unknown";
}

double sigma_hat(const ParamMatrixFamily& fam, Index k_max) {
    check_k_max(fam, k_max);
    return std::sqrt(scan(fam, k_max).sigma_sq);
}

double psi_threshold(Index rows, Index cols, double sigma_hat_value, ThresholdVariant variant) {
    if (rows < 1 || cols < 1 || !(sigma_hat_value > 0.0)) {
        throw ArgumentError("threshold needs positive N, T and sigma_hat");
    }
    const auto n = static_cast<double>(rows);
    const auto t = static_cast<double>(cols);
    const double small = std::min(n, t);
    switch (variant) {
        case ThresholdVariant::psi1: return sigma_hat_value * std::sqrt((n + t) / (n * t) * std::log(n * t / (n + t)));
        case ThresholdVariant::psi2: return sigma_hat_value * std::sqrt((n + t) / (n * t) * std::log(small));
        case ThresholdVariant::psi3: return sigma_hat_value * std::sqrt(std::log(small) / small);
    }
    throw ConfigError("unknown threshold variant", "variant");
}

std::vector<double> sup_spectrum(const ParamMatrixFamily& fam) { return scan(fam, 0).sup; }

RankEstimate estimate_max_rank(const ParamMatrixFamily& fam, const ThresholdConfig& cfg) {
    if (cfg.explicit_value) {
        if (!(*cfg.explicit_value > 0.0)) {
            throw ConfigError("explicit threshold must be positive", "explicit_value");
        }
        const SpectrumPass pass = scan(fam, std::min(cfg.k_max, std::min(fam.rows(), fam.cols())));
        return count_exceedances(pass.sup, *cfg.explicit_value, std::sqrt(pass.sigma_sq));
    }
    const ThresholdVariant variants[] = {cfg.variant};
    return estimate_max_rank_all(fam, cfg.k_max, variants).front();
}

std::vector<RankEstimate> estimate_max_rank_all(const ParamMatrixFamily& fam, Index k_max,
                                                std::span<const ThresholdVariant> variants) {
    check_k_max(fam, k_max);
    const SpectrumPass pass = scan(fam, k_max);
    const double sigma = floored_sigma(pass);
    std::vector<RankEstimate> out;
    out.reserve(variants.size());
    for (ThresholdVariant v : variants) {
        out.push_back(count_exceedances(pass.sup, psi_threshold(fam.rows(), fam.cols(), sigma, v), sigma));
    }
    return out;
}

}  // namespace opnorm
