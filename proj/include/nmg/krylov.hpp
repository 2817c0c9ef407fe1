#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nmg/grid.hpp"
#include "nmg/hierarchy.hpp"

namespace nmg {

using LinearAction = std::function<GridFunction(const GridFunction&)>;

struct FgmresConfig {
    double tol = 1e-6;                // on ||f - A u|| / ||f||
    int max_iter = 200;
    std::optional<int> restart;       // none: a single cycle of up to max_iter
    double reorth_threshold = 1e-8;   // second Gram-Schmidt pass above this loss of orthogonality

    void validate() const;
};

struct KrylovReport {
    int iterations = 0;
    std::vector<double> residual_history;  // relative, history[0] for the initial guess
    bool converged = false;
    std::string preconditioner;
    int reorthogonalizations = 0;
    double wall_time = 0.0;
};

struct KrylovResult {
    GridFunction u;
    KrylovReport report;
};

/// Flexible GMRES with right preconditioning; the preconditioner may change
/// between iterations. Modified Gram-Schmidt Arnoldi.
KrylovResult fgmres(const LinearAction& a, const GridFunction& f, const LinearAction& precond,
                    const FgmresConfig& cfg = {}, std::string tag = "custom");

/// Unpreconditioned GMRES with classical Gram-Schmidt applied twice (an
/// independent orthogonalization path used to cross-check fgmres).
KrylovResult gmres(const LinearAction& a, const GridFunction& f, const FgmresConfig& cfg = {});

LinearAction stencil_action(const StencilField& a);
/// One V-cycle from a zero initial guess. The hierarchy must outlive the action.
LinearAction vcycle_preconditioner(const MultigridHierarchy& h);
LinearAction identity_action();

} // namespace nmg
