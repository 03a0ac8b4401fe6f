#include "opnorm/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "opnorm/errors.hpp"
#include "opnorm/rng.hpp"

namespace opnorm {

namespace {

void require_finite(const RowMajorMatrix& m) {
    if (!m.allFinite()) {
        throw ValidationError("matrix contains non-finite entries");
    }
}

std::vector<double> dense_singular_values(const RowMajorMatrix& m) {
    if (m.size() == 0) {
        return {};
    }
    // BDCSVD falls back to one-sided Jacobi below its block size.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    std::vector<double> out(s.data(), s.data() + s.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    for (double& v : out) {
        v = std::max(v, 0.0);
    }
    return out;
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols) : values_(RowMajorMatrix::Zero(rows, cols)) {
    if (rows < 0 || cols < 0) {
        throw ValidationError("negative matrix dimension");
    }
}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> row_major) {
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != row_major.size()) {
        throw ValidationError("entry count " + std::to_string(row_major.size()) + " does not match " +
                              std::to_string(rows) + "x" + std::to_string(cols));
    }
    values_ = Eigen::Map<const RowMajorMatrix>(row_major.data(), rows, cols);
    require_finite(values_);
}

DenseMatrix::DenseMatrix(RowMajorMatrix values) : values_(std::move(values)) { require_finite(values_); }

DenseMatrix DenseMatrix::identity(Index n) { return DenseMatrix(RowMajorMatrix::Identity(n, n)); }

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
    const auto n = static_cast<Index>(diag.size());
    RowMajorMatrix m = RowMajorMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        m(i, i) = diag[static_cast<std::size_t>(i)];
    }
    return DenseMatrix(std::move(m));
}

DenseMatrix DenseMatrix::operator+(const DenseMatrix& other) const {
    if (rows() != other.rows() || cols() != other.cols()) {
        throw ValidationError("shape mismatch in matrix sum");
    }
    return DenseMatrix(RowMajorMatrix(values_ + other.values_));
}

DenseMatrix DenseMatrix::operator-(const DenseMatrix& other) const {
    if (rows() != other.rows() || cols() != other.cols()) {
        throw ValidationError("shape mismatch in matrix difference");
    }
    return DenseMatrix(RowMajorMatrix(values_ - other.values_));
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& other) const {
    if (cols() != other.rows()) {
        throw ValidationError("shape mismatch in matrix product");
    }
    return DenseMatrix(RowMajorMatrix(values_ * other.values_));
}

DenseMatrix DenseMatrix::operator*(double c) const { return DenseMatrix(RowMajorMatrix(values_ * c)); }

bool DenseMatrix::operator==(const DenseMatrix& other) const {
    return rows() == other.rows() && cols() == other.cols() && values_ == other.values_;
}

std::vector<double> lanczos_top_singular_values(const DenseMatrix& m, Index r) {
    const Index rows = m.rows();
    const Index cols = m.cols();
    const Index full = std::min(rows, cols);
    if (r < 1 || r > full) {
        throw ArgumentError("rank " + std::to_string(r) + " outside [1, " + std::to_string(full) + "]");
    }
    const Eigen::MatrixXd a = m.values();

    // Krylov bases: U is rows x k, V is cols x k, B is upper bidiagonal.
    const Index max_steps = full;
    Eigen::MatrixXd u_basis(rows, max_steps);
    Eigen::MatrixXd v_basis(cols, max_steps);
    std::vector<double> alpha;
    std::vector<double> beta;

    Eigen::VectorXd v(cols);
    CounterRng rng(0x6c616e637a6f73ULL, Stream::lanczos_start);
    for (Index j = 0; j < cols; ++j) {
        v(j) = rng.normal();
    }
    v.normalize();

    std::vector<double> previous;
    Index step = 0;
    Index next_check = std::min(max_steps, std::max<Index>(2 * r + 10, 24));
    while (true) {
        v_basis.col(step) = v;
        Eigen::VectorXd u = a * v;
        if (step > 0) {
            u -= beta.back() * u_basis.col(step - 1);
        }
        // Full reorthogonalization, twice is enough.
        for (int pass = 0; pass < 2; ++pass) {
            u -= u_basis.leftCols(step) * (u_basis.leftCols(step).transpose() * u);
        }
        const double a_j = u.norm();
        alpha.push_back(a_j);
        u_basis.col(step) = a_j > 0 ? Eigen::VectorXd(u / a_j) : Eigen::VectorXd::Zero(rows);

        Eigen::VectorXd w = a.transpose() * u_basis.col(step) - a_j * v;
        for (int pass = 0; pass < 2; ++pass) {
            w -= v_basis.leftCols(step + 1) * (v_basis.leftCols(step + 1).transpose() * w);
        }
        const double b_j = w.norm();
        ++step;

        const bool exhausted = step >= max_steps || b_j <= 1e-14 * std::max(1.0, alpha.front());
        if (step >= next_check || exhausted) {
            Eigen::MatrixXd bidiag = Eigen::MatrixXd::Zero(step, step);
            for (Index j = 0; j < step; ++j) {
                bidiag(j, j) = alpha[static_cast<std::size_t>(j)];
                if (j + 1 < step) {
                    bidiag(j, j + 1) = beta[static_cast<std::size_t>(j)];
                }
            }
            auto ritz = dense_singular_values(bidiag);
            ritz.resize(static_cast<std::size_t>(std::min<Index>(r, step)), 0.0);
            bool converged = previous.size() == ritz.size();
            for (std::size_t i = 0; converged && i < ritz.size(); ++i) {
                converged = std::abs(ritz[i] - previous[i]) <= 1e-13 * std::max(ritz[0], 1e-300);
            }
            if ((converged && static_cast<Index>(ritz.size()) == r) || exhausted) {
                ritz.resize(static_cast<std::size_t>(r), 0.0);
                return ritz;
            }
            previous = std::move(ritz);
            next_check = std::min(max_steps, step + 16);
        }

        if (b_j <= 0.0) {
            break;
        }
        beta.push_back(b_j);
        v = w / b_j;
    }
    return std::vector<double>(static_cast<std::size_t>(r), 0.0);
}

SingularSpectrum singular_values(const DenseMatrix& m) { return {dense_singular_values(m.values())}; }

double operator_norm(const DenseMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) {
        return 0.0;
    }
    if (std::min(m.rows(), m.cols()) > kLanczosNormLimit) {
        return lanczos_top_singular_values(m, 1).front();
    }
    return dense_singular_values(m.values()).front();
}

double top_singular_sum(const DenseMatrix& m, Index r) {
    const Index full = std::min(m.rows(), m.cols());
    if (r < 1 || r > full) {
        throw ArgumentError("rank " + std::to_string(r) + " outside [1, " + std::to_string(full) + "]");
    }
    std::vector<double> s = full > kDenseSvdLimit ? lanczos_top_singular_values(m, r)
                                                  : dense_singular_values(m.values());
    return std::accumulate(s.begin(), s.begin() + r, 0.0);
}

}  // namespace opnorm
