#include "nmg/experiments.hpp"

#include <chrono>

#include "nmg/analysis.hpp"
#include "nmg/errors.hpp"
#include "nmg/krylov.hpp"
#include "nmg/materialize.hpp"

namespace nmg {

std::string SmootherChoice::tag() const {
    if (!label.empty()) return label;
    switch (kind) {
    case SmootherKind::Jacobi: return steps == 1 ? "jacobi" : "jacobi-x" + std::to_string(steps);
    case SmootherKind::GaussSeidel: return steps == 1 ? "gauss-seidel" : "gauss-seidel-x" + std::to_string(steps);
    case SmootherKind::Model: return model ? std::string("model-") + to_string(model->kind) : "model";
    }
    return "unknown";
}

int matched_cost_steps(Coarsening scheme) noexcept { return scheme == Coarsening::Full ? 6 : 2; }

MultigridHierarchy build_solver(const StencilField& a, int levels, Coarsening scheme, const SmootherChoice& s) {
    MultigridHierarchy h = MultigridHierarchy::build(a, levels, scheme);
    switch (s.kind) {
    case SmootherKind::Jacobi: install_classical(h, ClassicalSmoother::Jacobi, s.omega, s.steps); break;
    case SmootherKind::GaussSeidel: install_classical(h, ClassicalSmoother::GaussSeidel, s.omega, s.steps); break;
    case SmootherKind::Model:
        if (!s.model) throw ConfigError("model smoother requested without a model");
        s.model->install(h);
        break;
    }
    return h;
}

KrylovMode krylov_mode_from_string(const std::string& s) {
    if (s == "none" || s.empty()) return KrylovMode::None;
    if (s == "fgmres") return KrylovMode::Fgmres;
    throw ConfigError("unknown krylov mode '" + s + "' (expected none or fgmres)");
}

SolveSummary run_solve(const MultigridHierarchy& h, const GridFunction& f, KrylovMode mode, double tol, int max_iter) {
    SolveSummary out;
    if (mode == KrylovMode::None) {
        SolveOptions opt;
        opt.tol = tol;
        opt.max_iter = max_iter;
        const SolveResult r = solve(h, f, GridFunction(f.spec_ptr()), opt);
        out.iterations = r.report.iterations;
        out.converged = r.report.converged;
        out.wall_time = r.report.wall_time;
        out.history = r.report.residual_history;
    } else {
        FgmresConfig cfg;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        const KrylovResult r = fgmres(stencil_action(h.level(0).op), f, vcycle_preconditioner(h), cfg, "mg");
        out.iterations = r.report.iterations;
        out.converged = r.report.converged;
        out.wall_time = r.report.wall_time;
        out.history = r.report.residual_history;
    }
    out.final_residual = out.history.empty() ? 0.0 : out.history.back();
    return out;
}

GridFunction make_rhs(const SpecPtr& spec, const std::string& kind, std::uint64_t seed) {
    if (kind == "random") return random_unit_field(spec, seed);
    GridFunction f(spec);
    if (kind == "zero") return f;
    if (kind == "ones") {
        for (std::int32_t p : spec->active_points()) f.values_mut()[static_cast<std::size_t>(p)] = 1.0;
        return f;
    }
    throw ConfigError("unknown right-hand side '" + kind + "' (expected random, ones or zero)");
}

AnalysisSummary analyze_smoother(const StencilField& a, int levels, Coarsening scheme, const SmootherChoice& s) {
    const int n = std::max(a.spec().rows(), a.spec().cols());
    if (n > kMaxDenseAnalysisN)
        throw ConfigError("dense analysis is limited to N <= " + std::to_string(kMaxDenseAnalysisN) + " (got " +
                          std::to_string(n) + ")");
    AnalysisSummary out;
    out.levels = levels;
    const MultigridHierarchy h = build_solver(a, levels, scheme, s);
    const MultigridHierarchy h2 = levels == 2 ? h : build_solver(a, 2, scheme, s);
    const Smoother& sm = *h.level(0).smoother;
    const DenseMatrix ad = materialize(a);
    const DenseMatrix g = smoother_iteration_matrix(sm, a);
    out.rho_smoother = spectral_radius(g).rho;
    out.a_norm = energy_norm(g, ad);
    try {
        const DenseMatrix m = smoother_inverse(smoother_matrix(sm));
        out.margin = convergence_margin(m, ad);
        out.beta_star = ideal_bound(ad, m, whole_grid_splitting(ad.rows()));
    } catch (const NumericError& e) {
        out.note = std::string("no ideal bound: ") + e.what();
    }
    out.rho_two_grid = spectral_radius(cycle_matrix(h2)).rho;
    out.rho_cycle = spectral_radius(cycle_matrix(h)).rho;
    return out;
}

} // namespace nmg
