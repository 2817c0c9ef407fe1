#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nmg/dense.hpp"
#include "nmg/grid.hpp"
#include "nmg/smoothers.hpp"
#include "nmg/transfer.hpp"

namespace nmg {

struct Level {
    StencilField op;
    LevelLayout layout = LevelLayout::Regular;
    std::optional<TransferPair> transfer;  // to the next coarser level; absent at the coarsest
    SmootherPtr smoother;                  // absent at the coarsest
};

/// A_c = R A P computed locally; the result keeps every nonzero (radius grows
/// for red-black levels).
StencilField galerkin_product(const StencilField& a, const TransferPair& tp);

class MultigridHierarchy {
public:
    /// levels = L + 1 >= 2. Coarse operators are Galerkin products; the coarsest
    /// is factored densely.
    static MultigridHierarchy build(const StencilField& a, int levels, Coarsening scheme);

    int size() const noexcept { return static_cast<int>(levels_.size()); }
    int coarsest() const noexcept { return size() - 1; }
    Coarsening scheme() const noexcept { return scheme_; }
    const Level& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
    const std::vector<Level>& levels() const noexcept { return levels_; }
    const LuFactorization& coarse_factorization() const noexcept { return *coarse_lu_; }

    void set_smoother(int l, SmootherPtr s);
    /// True when every non-coarsest level has a smoother.
    bool complete() const noexcept;
    bool all_linear() const noexcept;
    /// Hierarchy with levels l.. of this one (shares operators and factorization).
    MultigridHierarchy tail(int l) const;

    GridFunction coarse_solve(const GridFunction& r) const;

private:
    Coarsening scheme_ = Coarsening::Full;
    std::vector<Level> levels_;
    std::shared_ptr<const LuFactorization> coarse_lu_;
};

/// Equip levels 0..L-1 with the same smoother kind built from each level operator.
enum class ClassicalSmoother { Jacobi, GaussSeidel };
void install_classical(MultigridHierarchy& h, ClassicalSmoother kind, double omega = kDefaultOmega, int steps = 1);

/// One V(1,1) cycle at level l from guess u.
GridFunction v_cycle(const MultigridHierarchy& h, int l, const GridFunction& f, const GridFunction& u);

struct SolveOptions {
    double tol = 1e-6;
    int max_iter = 500;
    double divergence_factor = 1e6;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residual_history;  // relative residuals, history[0] for u0
    bool converged = false;
    double wall_time = 0.0;                // seconds around the iteration loop
};

struct SolveResult {
    GridFunction u;
    SolveReport report;
};

/// Repeats V-cycles until ||f - A u|| / ||f|| < tol. Throws DivergenceError when the
/// residual grows beyond divergence_factor times the initial one or turns non-finite.
SolveResult solve(const MultigridHierarchy& h, const GridFunction& f, const GridFunction& u0,
                  const SolveOptions& opt = {});

} // namespace nmg
