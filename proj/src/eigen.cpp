#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "nmg/dense.hpp"
#include "nmg/errors.hpp"

namespace nmg {

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
    return m;
}

void check_input(const DenseMatrix& a, const char* where) {
    if (!a.square()) throw ContractError(std::string(where) + ": matrix must be square");
    if (a.rows() == 0) throw ContractError(std::string(where) + ": empty matrix");
    if (a.rows() > kMaxEigenDimension) throw UnsupportedOperation(std::string(where) + ": matrix too large");
    if (!a.all_finite()) throw NumericError(std::string(where) + ": non-finite entries");
}

} // namespace

std::vector<std::complex<double>> eig_spectrum(const DenseMatrix& a) {
    check_input(a, "eig_spectrum");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(to_eigen(a), false);
    if (solver.info() != Eigen::Success) throw NumericError("eig_spectrum: QR iteration did not converge");
    const auto& ev = solver.eigenvalues();
    std::vector<std::complex<double>> out(static_cast<std::size_t>(ev.size()));
    for (Eigen::Index k = 0; k < ev.size(); ++k) out[static_cast<std::size_t>(k)] = ev(k);
    return out;
}

SymmetricEigen symmetric_eigen(const DenseMatrix& a, bool want_vectors) {
    check_input(a, "symmetric_eigen");
    if (a.asymmetry() > 1e-10) throw ContractError("symmetric_eigen: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        to_eigen(a), want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("symmetric_eigen: iteration did not converge");
    SymmetricEigen out;
    const auto n = static_cast<std::size_t>(a.rows());
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = solver.eigenvalues()(static_cast<Eigen::Index>(k));
    if (want_vectors) {
        out.vectors = DenseMatrix(n, n);
        const auto& v = solver.eigenvectors();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                out.vectors(i, k) = v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    return out;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& a) { return symmetric_eigen(a, false).values; }

double spectral_radius_of(std::span<const std::complex<double>> spectrum) {
    double r = 0.0;
    for (const auto& z : spectrum) r = std::max(r, std::abs(z));
    return r;
}

} // namespace nmg
