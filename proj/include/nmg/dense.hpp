#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace nmg {

/// Row-major dense matrix used for analysis oracles and the coarsest-level solve.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data_mut() noexcept { return data_; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

    DenseMatrix transpose() const;
    std::vector<double> multiply(std::span<const double> x) const;
    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s) noexcept;

    double frobenius_norm() const noexcept;
    double max_abs() const noexcept;
    /// max |A - A^T| / max |A|.
    double asymmetry() const noexcept;
    bool all_finite() const noexcept;

    DenseMatrix submatrix(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

/// LU with partial pivoting. Throws SingularMatrixError when a pivot falls below
/// pivot_tolerance * max|A|.
class LuFactorization {
public:
    explicit LuFactorization(const DenseMatrix& a, double pivot_tolerance = 1e-12);

    std::size_t size() const noexcept { return lu_.rows(); }
    std::vector<double> solve(std::span<const double> b) const;
    /// Solves A^T x = b.
    std::vector<double> solve_transpose(std::span<const double> b) const;
    DenseMatrix inverse() const;
    /// Solves A X = B column by column.
    DenseMatrix solve(const DenseMatrix& b) const;

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
};

/// A = L L^T for symmetric positive definite A.
class CholeskyFactorization {
public:
    explicit CholeskyFactorization(const DenseMatrix& a);

    const DenseMatrix& lower() const noexcept { return l_; }
    std::vector<double> solve(std::span<const double> b) const;
    /// L^{-1} B and L^{-T} B for whitening generalized eigenproblems.
    DenseMatrix solve_lower(const DenseMatrix& b) const;
    DenseMatrix solve_lower_transpose(const DenseMatrix& b) const;

private:
    DenseMatrix l_;
};

/// Returns false instead of throwing when A is not numerically SPD.
bool is_spd(const DenseMatrix& a);

std::vector<double> dense_solve(const DenseMatrix& a, std::span<const double> b);

/// Largest supported dimension for the dense eigensolvers.
inline constexpr std::size_t kMaxEigenDimension = 4096;

/// All eigenvalues of a general real matrix.
std::vector<std::complex<double>> eig_spectrum(const DenseMatrix& a);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    DenseMatrix vectors;         // column k belongs to values[k]
};

/// Eigenvalues ascending; vectors orthonormal.
SymmetricEigen symmetric_eigen(const DenseMatrix& a, bool want_vectors = true);
std::vector<double> symmetric_eigenvalues(const DenseMatrix& a);

double spectral_radius_of(std::span<const std::complex<double>> spectrum);

struct PowerIterationResult {
    double estimate;
    int iterations;
};

/// |lambda_max| by power iteration with Rayleigh-quotient-free norm ratios.
PowerIterationResult power_iteration(const DenseMatrix& a, int iterations, unsigned seed = 7);

} // namespace nmg
