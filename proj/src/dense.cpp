#include "nmg/dense.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nmg/errors.hpp"

namespace nmg {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) throw ContractError("DenseMatrix: entry count mismatch");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw ContractError("DenseMatrix::multiply: dimension mismatch");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = data_.data() + i * cols_;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * x[j];
        y[i] = acc;
    }
    return y;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ContractError("DenseMatrix +=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ContractError("DenseMatrix -=: shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

double DenseMatrix::frobenius_norm() const noexcept {
    double acc = 0.0;
    for (double v : data_) acc += v * v;
    return std::sqrt(acc);
}

double DenseMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double DenseMatrix::asymmetry() const noexcept {
    if (!square()) return INFINITY;
    double d = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j) d = std::max(d, std::abs((*this)(i, j) - (*this)(j, i)));
    const double scale = max_abs();
    return scale > 0.0 ? d / scale : d;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix DenseMatrix::submatrix(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const {
    DenseMatrix s(row_idx.size(), col_idx.size());
    for (std::size_t i = 0; i < row_idx.size(); ++i)
        for (std::size_t j = 0; j < col_idx.size(); ++j) s(i, j) = (*this)(row_idx[i], col_idx[j]);
    return s;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ContractError("DenseMatrix *: shape mismatch");
    DenseMatrix c(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data_mut().data() + i * n;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.data().data() + k * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

// ---------------------------------------------------------------------------

LuFactorization::LuFactorization(const DenseMatrix& a, double pivot_tolerance) : lu_(a) {
    if (!a.square()) throw ContractError("LuFactorization: matrix must be square");
    const std::size_t n = a.rows();
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    const double scale = std::max(a.max_abs(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > best) {
                best = std::abs(lu_(i, k));
                piv = i;
            }
        if (best <= pivot_tolerance * scale) throw SingularMatrixError("LuFactorization: singular matrix", k);
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
            std::swap(perm_[k], perm_[piv]);
        }
        const double inv = 1.0 / lu_(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = lu_(i, k) * inv;
            lu_(i, k) = m;
            if (m == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
        }
    }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw ContractError("LuFactorization::solve: size mismatch");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
        double acc = x[i];
        for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
        x[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= lu_(ii, j) * x[j];
        x[ii] = acc / lu_(ii, ii);
    }
    return x;
}

std::vector<double> LuFactorization::solve_transpose(std::span<const double> b) const {
    // A = P^T L U, so A^T = U^T L^T P: solve U^T y = b, L^T z = y, x = P^T z.
    const std::size_t n = size();
    if (b.size() != n) throw ContractError("LuFactorization::solve_transpose: size mismatch");
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double acc = y[i];
        for (std::size_t j = 0; j < i; ++j) acc -= lu_(j, i) * y[j];
        y[i] = acc / lu_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = y[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= lu_(j, ii) * y[j];
        y[ii] = acc;
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = y[i];
    return x;
}

DenseMatrix LuFactorization::inverse() const { return solve(DenseMatrix::identity(size())); }

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
    if (b.rows() != size()) throw ContractError("LuFactorization::solve: size mismatch");
    DenseMatrix x(b.rows(), b.cols());
    std::vector<double> col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        const auto s = solve(col);
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = s[i];
    }
    return x;
}

// ---------------------------------------------------------------------------

CholeskyFactorization::CholeskyFactorization(const DenseMatrix& a) : l_(a.rows(), a.cols()) {
    if (!a.square()) throw ContractError("CholeskyFactorization: matrix must be square");
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
        if (!(d > 0.0)) throw NumericError("CholeskyFactorization: matrix is not positive definite");
        const double ljj = std::sqrt(d);
        l_(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
            l_(i, j) = s / ljj;
        }
    }
}

std::vector<double> CholeskyFactorization::solve(std::span<const double> b) const {
    const std::size_t n = l_.rows();
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double acc = y[i];
        for (std::size_t k = 0; k < i; ++k) acc -= l_(i, k) * y[k];
        y[i] = acc / l_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) acc -= l_(k, ii) * y[k];
        y[ii] = acc / l_(ii, ii);
    }
    return y;
}

DenseMatrix CholeskyFactorization::solve_lower(const DenseMatrix& b) const {
    const std::size_t n = l_.rows();
    DenseMatrix x = b;
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < n; ++i) {
            double acc = x(i, j);
            for (std::size_t k = 0; k < i; ++k) acc -= l_(i, k) * x(k, j);
            x(i, j) = acc / l_(i, i);
        }
    return x;
}

DenseMatrix CholeskyFactorization::solve_lower_transpose(const DenseMatrix& b) const {
    const std::size_t n = l_.rows();
    DenseMatrix x = b;
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = x(ii, j);
            for (std::size_t k = ii + 1; k < n; ++k) acc -= l_(k, ii) * x(k, j);
            x(ii, j) = acc / l_(ii, ii);
        }
    return x;
}

bool is_spd(const DenseMatrix& a) {
    try {
        CholeskyFactorization c(a);
        return true;
    } catch (const NumericError&) {
        return false;
    }
}

std::vector<double> dense_solve(const DenseMatrix& a, std::span<const double> b) {
    return LuFactorization(a).solve(b);
}

PowerIterationResult power_iteration(const DenseMatrix& a, int iterations, unsigned seed) {
    if (!a.square()) throw ContractError("power_iteration: matrix must be square");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> x(a.rows());
    for (double& v : x) v = normal(rng);
    double nx = 0.0;
    for (double v : x) nx += v * v;
    nx = std::sqrt(nx);
    for (double& v : x) v /= nx;
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        auto y = a.multiply(x);
        double ny = 0.0;
        for (double v : y) ny += v * v;
        ny = std::sqrt(ny);
        estimate = ny;
        if (ny == 0.0) return {0.0, it + 1};
        for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] / ny;
    }
    return {estimate, iterations};
}

} // namespace nmg
