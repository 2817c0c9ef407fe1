#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmg/hierarchy.hpp"
#include "nmg/model_io.hpp"

namespace nmg {

enum class SmootherKind { Jacobi, GaussSeidel, Model };

struct SmootherChoice {
    SmootherKind kind = SmootherKind::Jacobi;
    double omega = kDefaultOmega;
    int steps = 1;                              // classical smoothers only
    std::shared_ptr<const SavedModel> model;    // SmootherKind::Model
    std::string label;                          // overrides tag() when set

    std::string tag() const;
};

/// Jacobi steps per smoothing in matched-cost comparisons: 6 (full) or 2 (red-black).
int matched_cost_steps(Coarsening scheme) noexcept;

MultigridHierarchy build_solver(const StencilField& a, int levels, Coarsening scheme, const SmootherChoice& s);

enum class KrylovMode { None, Fgmres };
KrylovMode krylov_mode_from_string(const std::string& s);

struct SolveSummary {
    int iterations = 0;
    double final_residual = 0.0;
    bool converged = false;
    double wall_time = 0.0;
    std::vector<double> history;
};

/// MG iteration, or FGMRES with one V-cycle as the preconditioner.
SolveSummary run_solve(const MultigridHierarchy& h, const GridFunction& f, KrylovMode mode, double tol = 1e-6,
                       int max_iter = 500);

/// "random" (unit normal field), "ones" or "zero".
GridFunction make_rhs(const SpecPtr& spec, const std::string& kind, std::uint64_t seed);

inline constexpr int kMaxDenseAnalysisN = 64;

struct AnalysisSummary {
    double rho_smoother = 0.0;             // rho(I - H A) on the finest level
    double a_norm = 0.0;                   // ||I - H A||_A
    std::optional<double> beta_star;       // ideal bound, every point fine
    std::optional<double> margin;          // lambda_min(M^T + M - A)
    double rho_two_grid = 0.0;             // V(1,1) two-grid cycle
    double rho_cycle = 0.0;                // V(1,1) cycle over `levels`
    int levels = 2;
    std::string note;
};

/// Dense analysis of a linear smoother; throws ConfigError above kMaxDenseAnalysisN.
AnalysisSummary analyze_smoother(const StencilField& a, int levels, Coarsening scheme, const SmootherChoice& s);

} // namespace nmg
