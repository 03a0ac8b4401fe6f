#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "opnorm/chaining.hpp"
#include "opnorm/factorrank.hpp"
#include "opnorm/matcore.hpp"
#include "opnorm/subgauss.hpp"

namespace opnorm::io {

/// Matrix CSV: a "rows,cols" header line, the dimensions, then one line per
/// row. Values use the shortest round-trip decimal form.
void write_matrix_csv(std::ostream& os, const DenseMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix_csv(const std::filesystem::path& path);

/// One point per line, comma separated; a non-numeric first line is
/// treated as a header.
Eigen::MatrixXd read_points_csv(const std::filesystem::path& path);

/// Square distance matrix, same conventions as read_points_csv.
Eigen::MatrixXd read_distance_csv(const std::filesystem::path& path);

/// Grid manifest: {"schema_version": 1, "points": [{"beta": b, "file": f}, ...]}
/// with file names relative to the manifest directory.
ParamMatrixFamily read_manifest(const std::filesystem::path& path);

/// Writes beta_000.csv, beta_001.csv, ... and manifest.json into `dir`.
std::filesystem::path write_family(const std::filesystem::path& dir, const ParamMatrixFamily& fam);

nlohmann::json to_json(const RankEstimate& est);
nlohmann::json to_json(const ChainingEstimate& est);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace opnorm::io
