#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nmg/dense.hpp"
#include "nmg/hierarchy.hpp"
#include "nmg/smoothers.hpp"

namespace nmg {

using GridOperator = std::function<GridFunction(const GridFunction&)>;

/// Throws UnsupportedOperation unless op(a x + b y) == a op(x) + b op(y) (relative
/// tolerance) on `probes` random pairs.
void check_linearity(const GridOperator& op, const SpecPtr& spec, int probes = 10, double tol = 1e-10,
                     std::uint64_t seed = 11);

/// I - B A with B = materialize(H); checks linearity first.
DenseMatrix smoother_iteration_matrix(const Smoother& h, const StencilField& a);
/// Error propagation of one V-cycle (f = 0) on the finest level.
DenseMatrix cycle_matrix(const MultigridHierarchy& h);
/// Materialized smoother action B = H.
DenseMatrix smoother_matrix(const Smoother& h);
/// Materialized prolongation (fine x coarse).
DenseMatrix prolongation_matrix(const TransferPair& tp);
DenseMatrix restriction_matrix(const TransferPair& tp);

struct SpectralRadius {
    double rho = 0.0;
    /// Power-iteration estimate when the dominant eigenvalue is separated.
    std::optional<double> power_estimate;
};
SpectralRadius spectral_radius(const DenseMatrix& g, int power_iterations = 1000);

/// ||G||_A for SPD A.
double energy_norm(const DenseMatrix& g, const DenseMatrix& a);

struct SpectralReport {
    std::string tag;
    std::size_t dimension = 0;
    double rho = 0.0;
    std::optional<double> a_norm;
};
SpectralReport spectral_report(const DenseMatrix& g, const DenseMatrix* a, std::string tag);

/// (I - M^{-1}A)(I - P (P^T A P)^{-1} P^T A), optionally followed by a second smoothing.
DenseMatrix two_grid_operator(const DenseMatrix& a, const DenseMatrix& p, const DenseMatrix& minv,
                              bool post_smoothing = false);

/// M^T (M^T + M - A)^{-1} M. Throws NumericError (with the smallest eigenvalue) when
/// M^T + M - A is not SPD.
DenseMatrix symmetrized_smoother(const DenseMatrix& m, const DenseMatrix& a);
/// Smallest eigenvalue of the symmetric part of M^T + M - A.
double convergence_margin(const DenseMatrix& m, const DenseMatrix& a);
/// M = H^{-1}; throws NumericError when H is singular (pivot tolerance 1e-10).
DenseMatrix smoother_inverse(const DenseMatrix& h);

/// Fine/coarse partition of active points (indices into active order).
struct FCSplitting {
    std::vector<std::size_t> fine;
    std::vector<std::size_t> coarse;
    std::size_t size() const noexcept { return fine.size() + coarse.size(); }
};
/// C = coarse-grid coincident points of the transfer, F = the rest.
FCSplitting c_point_splitting(const TransferPair& tp);
/// Every point fine (S = I).
FCSplitting whole_grid_splitting(std::size_t n);
/// C-point injection R (n_c x n) for a splitting.
DenseMatrix injection_matrix(const FCSplitting& s);

/// beta* = sqrt(1 - lambda_min((S^T Mt S)^{-1} S^T A S)).
double ideal_bound(const DenseMatrix& a, const DenseMatrix& m, const FCSplitting& s);
/// sqrt(1 - lambda_min(...)) given the symmetrized smoother directly.
double ideal_bound_symmetrized(const DenseMatrix& a, const DenseMatrix& mt, const FCSplitting& s);
/// K = max_e ||(I - P R) e||^2_Mt / ||e||^2_A.
double weak_approximation_constant(const DenseMatrix& a, const DenseMatrix& mt, const DenseMatrix& p,
                                   const DenseMatrix& r);

struct SmoothingProfile {
    std::vector<double> eigenvalues;  // descending
    std::vector<double> factors;      // ||v - H(A v)|| for the matching unit eigenvector
    /// Mean factor over the first `fraction` of the (descending) spectrum.
    double mean_over_top(double fraction) const;
};
SmoothingProfile smoothing_profile(const StencilField& a, const Smoother& h);

struct FrobeniusProbe {
    double sample_mean = 0.0;   // mean of n ||X z||^2 over unit-sphere z
    double exact = 0.0;         // ||X||_F^2
    double ratio() const noexcept { return exact > 0.0 ? sample_mean / exact : (sample_mean == 0.0 ? 1.0 : INFINITY); }
};
FrobeniusProbe frobenius_probe(const DenseMatrix& x, int trials, std::uint64_t seed);
FrobeniusProbe frobenius_probe(const GridOperator& x, const SpecPtr& spec, int trials, std::uint64_t seed);

/// Rows of (parameters, smoother, metric, value).
struct MetricRow {
    std::string problem;
    std::string smoother;
    std::string metric;
    double value;
};
void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows, const std::string& config_hash,
                       std::uint64_t seed);

} // namespace nmg
