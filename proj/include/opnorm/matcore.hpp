#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace opnorm {

using Index = Eigen::Index;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Real N x T matrix with finite entries. Immutable once built; arithmetic
/// returns new values.
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero matrix.
    DenseMatrix(Index rows, Index cols);

    /// Takes entries in row-major order. Throws ValidationError when the
    /// count does not match or an entry is non-finite.
    DenseMatrix(Index rows, Index cols, std::vector<double> row_major);

    /// Throws ValidationError on non-finite entries.
    explicit DenseMatrix(RowMajorMatrix values);

    template <typename Derived>
    static DenseMatrix from_eigen(const Eigen::MatrixBase<Derived>& m) {
        return DenseMatrix(RowMajorMatrix(m));
    }

    static DenseMatrix identity(Index n);
    static DenseMatrix diagonal(std::span<const double> diag);

    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }
    double operator()(Index i, Index j) const { return values_(i, j); }

    const RowMajorMatrix& values() const noexcept { return values_; }
    std::span<const double> entries() const noexcept {
        return {values_.data(), static_cast<std::size_t>(values_.size())};
    }

    DenseMatrix operator+(const DenseMatrix& other) const;
    DenseMatrix operator-(const DenseMatrix& other) const;
    DenseMatrix operator*(const DenseMatrix& other) const;
    DenseMatrix operator*(double c) const;

    bool operator==(const DenseMatrix& other) const;

private:
    RowMajorMatrix values_;
};

inline DenseMatrix operator*(double c, const DenseMatrix& m) { return m * c; }

/// Non-increasing singular values s_1 >= ... >= s_min(N,T) >= 0.
struct SingularSpectrum {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Above this min(N,T) the top-r routines switch from a full decomposition
/// to Lanczos bidiagonalization.
inline constexpr Index kDenseSvdLimit = 512;

/// operator_norm alone needs only s_1, which Lanczos reaches far sooner
/// than a full decomposition once min(N,T) exceeds this.
inline constexpr Index kLanczosNormLimit = 64;

double operator_norm(const DenseMatrix& m);
SingularSpectrum singular_values(const DenseMatrix& m);

/// Sum of the r largest singular values, 1 <= r <= min(N,T).
double top_singular_sum(const DenseMatrix& m, Index r);

/// Top-r singular values by Golub-Kahan-Lanczos bidiagonalization with full
/// reorthogonalization. Exposed for testing the large-matrix path directly.
std::vector<double> lanczos_top_singular_values(const DenseMatrix& m, Index r);

}  // namespace opnorm
