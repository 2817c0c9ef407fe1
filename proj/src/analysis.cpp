#include "nmg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>

#include "nmg/errors.hpp"
#include "nmg/materialize.hpp"

namespace nmg {

namespace {

std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

DenseMatrix symmetric_part(const DenseMatrix& m) {
    DenseMatrix s = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
}

double lambda_min_pencil(const DenseMatrix& a, const DenseMatrix& b) {
    // smallest lambda of a x = lambda b x, b SPD
    const CholeskyFactorization c(b);
    const DenseMatrix y = c.solve_lower(c.solve_lower(a).transpose());
    return symmetric_eigenvalues(symmetric_part(y)).front();
}

} // namespace

void check_linearity(const GridOperator& op, const SpecPtr& spec, int probes, double tol, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const std::size_t n = spec->active_count();
    for (int k = 0; k < probes; ++k) {
        const GridFunction x = GridFunction::from_active(spec, gaussian(n, rng));
        const GridFunction y = GridFunction::from_active(spec, gaussian(n, rng));
        const double a = coef(rng);
        const double b = coef(rng);
        const GridFunction lhs = op(a * x + b * y);
        const GridFunction rhs = a * op(x) + b * op(y);
        const double scale = std::max({norm2(lhs), norm2(rhs), 1e-300});
        if (norm2(lhs - rhs) > tol * scale)
            throw UnsupportedOperation("operator is not linear; use the FGMRES path instead of matrix analysis");
    }
}

DenseMatrix smoother_matrix(const Smoother& h) {
    const GridOperator op = [&](const GridFunction& r) { return h.apply(r); };
    check_linearity(op, h.spec_ptr());
    return materialize(op, h.spec_ptr());
}

DenseMatrix smoother_iteration_matrix(const Smoother& h, const StencilField& a) {
    const GridOperator op = [&](const GridFunction& e) { return e - h.apply(apply_stencil(a, e)); };
    check_linearity(op, a.spec_ptr());
    return materialize(op, a.spec_ptr());
}

DenseMatrix cycle_matrix(const MultigridHierarchy& h) {
    const SpecPtr& spec = h.level(0).op.spec_ptr();
    const GridFunction zero(spec);
    const GridOperator op = [&](const GridFunction& e) { return v_cycle(h, 0, zero, e); };
    check_linearity(op, spec);
    return materialize(op, spec);
}

DenseMatrix prolongation_matrix(const TransferPair& tp) {
    return materialize([&](const GridFunction& c) { return tp.prolong_to_fine(c); }, tp.coarse());
}

DenseMatrix restriction_matrix(const TransferPair& tp) {
    return materialize([&](const GridFunction& f) { return tp.restrict_to_coarse(f); }, tp.fine());
}

SpectralRadius spectral_radius(const DenseMatrix& g, int power_iterations) {
    if (!g.square()) throw ContractError("spectral_radius: matrix must be square");
    SpectralRadius out;
    if (g.max_abs() == 0.0) return out;
    const auto spec = eig_spectrum(g);
    std::vector<double> mod(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) mod[k] = std::abs(spec[k]);
    std::sort(mod.begin(), mod.end(), std::greater<>());
    out.rho = mod.front();
    // A real dominant eigenvalue separated from the rest in modulus.
    const bool separated = mod.size() == 1 || (mod[0] - mod[1]) > 1e-3 * mod[0];
    if (separated && power_iterations > 0) out.power_estimate = power_iteration(g, power_iterations).estimate;
    return out;
}

double energy_norm(const DenseMatrix& g, const DenseMatrix& a) {
    const CholeskyFactorization c(a);
    const DenseMatrix lt = c.lower().transpose();
    const DenseMatrix l_inv_t = c.solve_lower_transpose(DenseMatrix::identity(a.rows()));
    const DenseMatrix x = lt * g * l_inv_t;
    const auto ev = symmetric_eigenvalues(symmetric_part(x.transpose() * x));
    return std::sqrt(std::max(0.0, ev.back()));
}

SpectralReport spectral_report(const DenseMatrix& g, const DenseMatrix* a, std::string tag) {
    SpectralReport r;
    r.tag = std::move(tag);
    r.dimension = g.rows();
    r.rho = spectral_radius(g).rho;
    if (a && is_spd(*a)) r.a_norm = energy_norm(g, *a);
    return r;
}

DenseMatrix two_grid_operator(const DenseMatrix& a, const DenseMatrix& p, const DenseMatrix& minv, bool post) {
    const std::size_t n = a.rows();
    const DenseMatrix id = DenseMatrix::identity(n);
    const DenseMatrix pt = p.transpose();
    const LuFactorization coarse(pt * a * p);
    const DenseMatrix c = id - p * coarse.solve(pt * a);
    const DenseMatrix s = id - minv * a;
    return post ? s * c * s : s * c;
}

double convergence_margin(const DenseMatrix& m, const DenseMatrix& a) {
    return symmetric_eigenvalues(symmetric_part(m.transpose() + m - a)).front();
}

DenseMatrix symmetrized_smoother(const DenseMatrix& m, const DenseMatrix& a) {
    const DenseMatrix x = symmetric_part(m.transpose() + m - a);
    std::optional<CholeskyFactorization> c;
    try {
        c.emplace(x);
    } catch (const NumericError&) {
        throw NumericError("symmetrized_smoother: M^T + M - A is not SPD (smallest eigenvalue " +
                           std::to_string(symmetric_eigenvalues(x).front()) + ")");
    }
    // M^T X^{-1} M = (L^{-1} M)^T (L^{-1} M)
    const DenseMatrix y = c->solve_lower(m);
    return symmetric_part(y.transpose() * y);
}

DenseMatrix smoother_inverse(const DenseMatrix& h) {
    try {
        return LuFactorization(h, 1e-10).inverse();
    } catch (const SingularMatrixError& e) {
        throw NumericError(std::string("smoother matrix is singular; only spectral-radius analysis applies: ") +
                           e.what());
    }
}

FCSplitting c_point_splitting(const TransferPair& tp) {
    const GridSpec& f = *tp.fine();
    std::vector<std::uint8_t> is_c(f.active_count(), 0);
    for (std::int32_t fp : tp.coarse_to_fine())
        if (fp >= 0) is_c[static_cast<std::size_t>(f.active_index(static_cast<std::size_t>(fp)))] = 1;
    FCSplitting s;
    // C points listed in coarse active order so that injection matches P's columns.
    for (std::int32_t cp : tp.coarse()->active_points())
        s.coarse.push_back(static_cast<std::size_t>(
            f.active_index(static_cast<std::size_t>(tp.coarse_to_fine()[static_cast<std::size_t>(cp)]))));
    for (std::size_t k = 0; k < is_c.size(); ++k)
        if (!is_c[k]) s.fine.push_back(k);
    return s;
}

FCSplitting whole_grid_splitting(std::size_t n) {
    FCSplitting s;
    for (std::size_t k = 0; k < n; ++k) s.fine.push_back(k);
    return s;
}

DenseMatrix injection_matrix(const FCSplitting& s) {
    DenseMatrix r(s.coarse.size(), s.size());
    for (std::size_t k = 0; k < s.coarse.size(); ++k) r(k, s.coarse[k]) = 1.0;
    return r;
}

double ideal_bound_symmetrized(const DenseMatrix& a, const DenseMatrix& mt, const FCSplitting& s) {
    if (s.size() != a.rows()) throw ContractError("ideal_bound: splitting does not cover the operator");
    const double lmin = lambda_min_pencil(a.submatrix(s.fine, s.fine), mt.submatrix(s.fine, s.fine));
    return std::sqrt(std::max(0.0, 1.0 - lmin));
}

double ideal_bound(const DenseMatrix& a, const DenseMatrix& m, const FCSplitting& s) {
    return ideal_bound_symmetrized(a, symmetrized_smoother(m, a), s);
}

double weak_approximation_constant(const DenseMatrix& a, const DenseMatrix& mt, const DenseMatrix& p,
                                   const DenseMatrix& r) {
    const DenseMatrix b = DenseMatrix::identity(a.rows()) - p * r;
    const DenseMatrix y = b.transpose() * mt * b;
    const CholeskyFactorization c(a);
    const DenseMatrix z = c.solve_lower(c.solve_lower(y).transpose());
    return symmetric_eigenvalues(symmetric_part(z)).back();
}

double SmoothingProfile::mean_over_top(double fraction) const {
    if (factors.empty()) return 0.0;
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(factors.size()))));
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += factors[i];
    return s / static_cast<double>(k);
}

SmoothingProfile smoothing_profile(const StencilField& a, const Smoother& h) {
    const DenseMatrix am = materialize(a);
    if (am.rows() > kMaxEigenDimension) throw UnsupportedOperation("smoothing_profile: grid too large");
    if (am.asymmetry() > 1e-12) throw ContractError("smoothing_profile: operator is not symmetric");
    const SymmetricEigen eig = symmetric_eigen(symmetric_part(am));
    const std::size_t n = eig.values.size();
    SmoothingProfile out;
    std::vector<double> v(n);
    for (std::size_t kk = n; kk-- > 0;) {
        for (std::size_t i = 0; i < n; ++i) v[i] = eig.vectors(i, kk);
        const GridFunction vf = GridFunction::from_active(a.spec_ptr(), v);
        out.eigenvalues.push_back(eig.values[kk]);
        out.factors.push_back(norm2(vf - h.apply(apply_stencil(a, vf))));
    }
    return out;
}

FrobeniusProbe frobenius_probe(const DenseMatrix& x, int trials, std::uint64_t seed) {
    if (trials < 1) throw ContractError("frobenius_probe: trials must be >= 1");
    FrobeniusProbe out;
    const double f = x.frobenius_norm();
    out.exact = f * f;
    std::mt19937_64 rng(seed);
    const std::size_t n = x.cols();
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto z = gaussian(n, rng);
        double nz = 0.0;
        for (double v : z) nz += v * v;
        nz = std::sqrt(nz);
        for (double& v : z) v /= nz;
        const auto y = x.multiply(z);
        double ny = 0.0;
        for (double v : y) ny += v * v;
        acc += static_cast<double>(n) * ny;
    }
    out.sample_mean = acc / trials;
    return out;
}

FrobeniusProbe frobenius_probe(const GridOperator& x, const SpecPtr& spec, int trials, std::uint64_t seed) {
    return frobenius_probe(materialize(x, spec), trials, seed);
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows, const std::string& config_hash,
                       std::uint64_t seed) {
    os << "config_hash,seed,problem,smoother,metric,value\n";
    os << std::setprecision(10);
    for (const auto& r : rows)
        os << config_hash << ',' << seed << ",\"" << r.problem << "\"," << r.smoother << ',' << r.metric << ','
           << r.value << '\n';
}

} // namespace nmg
