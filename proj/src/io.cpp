#include "opnorm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "opnorm/config.hpp"
#include "opnorm/errors.hpp"

namespace opnorm::io {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        // Trim spaces and a trailing CR.
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::vector<std::vector<double>> read_numeric_rows(const fs::path& path, bool allow_header) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string(), path.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_line(line);
        std::vector<double> values(cells.size());
        bool numeric = true;
        for (std::size_t i = 0; i < cells.size() && numeric; ++i) {
            numeric = parse_double(cells[i], values[i]);
        }
        if (!numeric) {
            if (allow_header && rows.empty() && line_no == 1) {
                continue;
            }
            throw ValidationError(fmt::format("{}:{}: non-numeric value", path.string(), line_no));
        }
        rows.push_back(std::move(values));
    }
    return rows;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const fs::path& path) {
    if (rows.empty()) {
        throw ValidationError(path.string() + ": no data rows");
    }
    const std::size_t width = rows.front().size();
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) {
            throw ValidationError(fmt::format("{}: row {} has {} values, expected {}", path.string(), i + 1,
                                              rows[i].size(), width));
        }
        for (std::size_t j = 0; j < width; ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return m;
}

}  // namespace

void write_matrix_csv(std::ostream& os, const DenseMatrix& m) {
    os << "rows,cols\n" << m.rows() << ',' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        std::string line;
        for (Index j = 0; j < m.cols(); ++j) {
            line += fmt::format("{}", m(i, j));
            line += j + 1 < m.cols() ? ',' : '\n';
        }
        os << line;
    }
}

void write_matrix_csv(const fs::path& path, const DenseMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string(), "out");
    }
    write_matrix_csv(out, m);
}

DenseMatrix read_matrix_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string(), path.string());
    }
    std::string header;
    std::getline(in, header);
    const auto head = split_line(header);
    if (head.size() != 2 || head[0] != "rows" || head[1] != "cols") {
        throw ValidationError(path.string() + ": expected a 'rows,cols' header");
    }
    in.close();
    const auto rows = read_numeric_rows(path, true);
    if (rows.empty() || rows.front().size() != 2) {
        throw ValidationError(path.string() + ": missing dimension line");
    }
    const auto n = static_cast<Index>(rows.front()[0]);
    const auto t = static_cast<Index>(rows.front()[1]);
    if (static_cast<Index>(rows.size()) - 1 != n) {
        throw ValidationError(fmt::format("{}: header says {} rows, found {}", path.string(), n, rows.size() - 1));
    }
    std::vector<double> entries;
    entries.reserve(static_cast<std::size_t>(n * t));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != t) {
            throw ValidationError(fmt::format("{}: row {} has {} values, expected {}", path.string(), i, rows[i].size(), t));
        }
        entries.insert(entries.end(), rows[i].begin(), rows[i].end());
    }
    return DenseMatrix(n, t, std::move(entries));
}

Eigen::MatrixXd read_points_csv(const fs::path& path) { return to_matrix(read_numeric_rows(path, true), path); }

Eigen::MatrixXd read_distance_csv(const fs::path& path) {
    Eigen::MatrixXd d = to_matrix(read_numeric_rows(path, true), path);
    if (d.rows() != d.cols()) {
        throw ValidationError(path.string() + ": distance matrix must be square");
    }
    return d;
}

ParamMatrixFamily read_manifest(const fs::path& path) {
    if (!fs::exists(path)) {
        throw ConfigError("config not found: " + path.string(), "manifest");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("manifest is not valid JSON: " + std::string(e.what()), "manifest");
    }
    StrictObject obj(j, "");
    check_schema_version(obj);
    const auto& points = obj.raw("points");
    obj.finish();
    if (!points.is_array() || points.empty()) {
        throw ConfigError("manifest 'points' must be a non-empty array", "points");
    }
    std::vector<double> betas;
    std::vector<DenseMatrix> mats;
    for (std::size_t k = 0; k < points.size(); ++k) {
        StrictObject p(points[k], fmt::format("points[{}]", k));
        betas.push_back(p.require<double>("beta"));
        mats.push_back(read_matrix_csv(path.parent_path() / p.require<std::string>("file")));
        p.finish();
    }
    return ParamMatrixFamily::from_matrices(ParamGrid(std::move(betas)), std::move(mats));
}

fs::path write_family(const fs::path& dir, const ParamMatrixFamily& fam) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string(), "out");
    }
    nlohmann::json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["points"] = nlohmann::json::array();
    for (std::size_t k = 0; k < fam.grid().size(); ++k) {
        const std::string file = fmt::format("beta_{:03d}.csv", k);
        write_matrix_csv(dir / file, fam.evaluate(k));
        manifest["points"].push_back({{"beta", fam.grid().point(k)}, {"file", file}});
    }
    const fs::path manifest_path = dir / "manifest.json";
    write_text(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

nlohmann::json to_json(const RankEstimate& est) {
    return {{"r_hat", est.r_hat},
            {"threshold_used", est.threshold_used},
            {"sigma_hat", est.sigma_hat},
            {"sup_singulars", est.sup_singulars}};
}

nlohmann::json to_json(const ChainingEstimate& est) {
    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& level : est.sequence.subsets) {
        sizes.push_back(level.size());
    }
    nlohmann::json j = {{"gamma_upper", est.gamma_upper},
                        {"alpha", est.alpha},
                        {"ek_radii", est.ek_radii},
                        {"sequence_sizes", sizes},
                        {"exhaustive", est.exhaustive},
                        {"sampled_space", est.sampled_space}};
    j["dudley"] = est.dudley ? nlohmann::json(*est.dudley) : nlohmann::json(nullptr);
    return j;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config not found: " + path.string(), "config");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string(), "out");
    }
    out << text;
}

}  // namespace opnorm::io
