#include "nmg/hierarchy.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "nmg/errors.hpp"
#include "nmg/materialize.hpp"

namespace nmg {

StencilField galerkin_product(const StencilField& a, const TransferPair& tp) {
    require_same_spec(a.spec(), *tp.fine(), "galerkin_product");
    const GridSpec& fs = *tp.fine();
    const GridSpec& cs = *tp.coarse();
    const auto& rt = tp.restriction_table();
    const auto& pt = tp.prolongation_table();
    const int ar = a.radius();

    // Row of R A P for each coarse point, keyed by coarse flat index.
    std::vector<std::map<std::int32_t, double>> rows(cs.size());
    int radius = 1;
    for (std::int32_t I : cs.active_points()) {
        auto& row = rows[static_cast<std::size_t>(I)];
        for (auto e = rt.start[static_cast<std::size_t>(I)]; e < rt.start[static_cast<std::size_t>(I) + 1]; ++e) {
            const auto f = rt.index[static_cast<std::size_t>(e)];
            const double rw = rt.weight[static_cast<std::size_t>(e)];
            const int fi = f / fs.cols();
            const int fj = f % fs.cols();
            for (int di = -ar; di <= ar; ++di)
                for (int dj = -ar; dj <= ar; ++dj) {
                    if (!fs.active(fi + di, fj + dj)) continue;
                    const double aw = a.at(static_cast<std::size_t>(f), di, dj);
                    if (aw == 0.0) continue;
                    const auto g = fs.flat(fi + di, fj + dj);
                    for (auto k = pt.start[g]; k < pt.start[g + 1]; ++k)
                        row[pt.index[static_cast<std::size_t>(k)]] += rw * aw * pt.weight[static_cast<std::size_t>(k)];
                }
        }
        const int ii = I / cs.cols();
        const int ij = I % cs.cols();
        for (const auto& [J, w] : row) {
            if (w == 0.0) continue;
            radius = std::max({radius, std::abs(J / cs.cols() - ii), std::abs(J % cs.cols() - ij)});
        }
    }
    StencilField out(tp.coarse(), radius);
    for (std::int32_t I : cs.active_points()) {
        const int ii = I / cs.cols();
        const int ij = I % cs.cols();
        for (const auto& [J, w] : rows[static_cast<std::size_t>(I)])
            out.at(static_cast<std::size_t>(I), J / cs.cols() - ii, J % cs.cols() - ij) = w;
    }
    return out;
}

MultigridHierarchy MultigridHierarchy::build(const StencilField& a, int levels, Coarsening scheme) {
    if (levels < 2) throw ConfigError("hierarchy needs at least 2 levels");
    MultigridHierarchy h;
    h.scheme_ = scheme;
    h.levels_.push_back({a, LevelLayout::Regular, std::nullopt, nullptr});
    for (int l = 0; l + 1 < levels; ++l) {
        Level& fine = h.levels_.back();
        try {
            fine.transfer = TransferPair::build(scheme, fine.op.spec_ptr(), fine.layout);
        } catch (const ConfigError& e) {
            throw ConfigError("level " + std::to_string(l + 1) + ": " + e.what());
        }
        StencilField coarse = galerkin_product(fine.op, *fine.transfer);
        const LevelLayout layout = fine.transfer->coarse_layout();
        h.levels_.push_back({std::move(coarse), layout, std::nullopt, nullptr});
    }
    try {
        h.coarse_lu_ = std::make_shared<const LuFactorization>(materialize(h.levels_.back().op));
    } catch (const SingularMatrixError& e) {
        throw NumericError(std::string("coarsest operator is singular: ") + e.what());
    }
    return h;
}

void MultigridHierarchy::set_smoother(int l, SmootherPtr s) {
    if (l < 0 || l >= coarsest()) throw ContractError("set_smoother: level out of range");
    if (s && !s->spec_ptr()->same_layout(level(l).op.spec()))
        throw ConfigError("smoother grid does not match level " + std::to_string(l));
    levels_[static_cast<std::size_t>(l)].smoother = std::move(s);
}

bool MultigridHierarchy::complete() const noexcept {
    for (int l = 0; l < coarsest(); ++l)
        if (!levels_[static_cast<std::size_t>(l)].smoother) return false;
    return true;
}

bool MultigridHierarchy::all_linear() const noexcept {
    for (int l = 0; l < coarsest(); ++l) {
        const auto& s = levels_[static_cast<std::size_t>(l)].smoother;
        if (s && !s->is_linear()) return false;
    }
    return true;
}

MultigridHierarchy MultigridHierarchy::tail(int l) const {
    if (l < 0 || l >= coarsest()) throw ContractError("tail: level out of range");
    MultigridHierarchy t;
    t.scheme_ = scheme_;
    t.levels_.assign(levels_.begin() + l, levels_.end());
    t.coarse_lu_ = coarse_lu_;
    return t;
}

GridFunction MultigridHierarchy::coarse_solve(const GridFunction& r) const {
    return GridFunction::from_active(r.spec_ptr(), coarse_lu_->solve(r.active_values()));
}

void install_classical(MultigridHierarchy& h, ClassicalSmoother kind, double omega, int steps) {
    for (int l = 0; l < h.coarsest(); ++l) {
        const StencilField& a = h.level(l).op;
        SmootherPtr s;
        if (kind == ClassicalSmoother::Jacobi)
            s = std::make_shared<JacobiSmoother>(a, omega);
        else
            s = std::make_shared<GaussSeidelSmoother>(a);
        if (steps > 1) s = std::make_shared<RepeatedSmoother>(s, a, steps);
        h.set_smoother(l, s);
    }
}

GridFunction v_cycle(const MultigridHierarchy& h, int l, const GridFunction& f, const GridFunction& u) {
    if (l < 0 || l > h.coarsest()) throw ContractError("v_cycle: level out of range");
    if (l == h.coarsest()) return h.coarse_solve(f);
    const Level& lv = h.level(l);
    if (!lv.smoother) throw ConfigError("v_cycle: level " + std::to_string(l) + " has no smoother");
    require_same_spec(lv.op.spec(), f.spec(), "v_cycle");
    GridFunction x = u;
    x += lv.smoother->apply(f - apply_stencil(lv.op, x));
    const GridFunction rc = lv.transfer->restrict_to_coarse(f - apply_stencil(lv.op, x));
    const GridFunction ec = l + 1 == h.coarsest() ? h.coarse_solve(rc) : v_cycle(h, l + 1, rc, GridFunction(rc.spec_ptr()));
    x += lv.transfer->prolong_to_fine(ec);
    x += lv.smoother->apply(f - apply_stencil(lv.op, x));
    return x;
}

SolveResult solve(const MultigridHierarchy& h, const GridFunction& f, const GridFunction& u0, const SolveOptions& opt) {
    if (!(opt.tol > 0.0)) throw ContractError("solve: tol must be positive");
    const StencilField& a = h.level(0).op;
    SolveResult out{u0, {}};
    const double nf = norm2(f);
    const double r0 = norm2(f - apply_stencil(a, u0));
    const double denom = nf > 0.0 ? nf : (r0 > 0.0 ? r0 : 1.0);
    out.report.residual_history.push_back(r0 / denom);
    const auto t0 = std::chrono::steady_clock::now();
    double rel = r0 / denom;
    while (!(rel < opt.tol) && out.report.iterations < opt.max_iter) {
        out.u = v_cycle(h, 0, f, out.u);
        ++out.report.iterations;
        const double r = norm2(f - apply_stencil(a, out.u));
        rel = r / denom;
        out.report.residual_history.push_back(rel);
        if (!std::isfinite(r) || r > opt.divergence_factor * std::max(r0, 1e-300))
            throw DivergenceError("multigrid solve diverged", out.report.iterations);
    }
    out.report.converged = rel < opt.tol;
    out.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace nmg
