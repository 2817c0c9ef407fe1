#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "nmg/analysis.hpp"
#include "nmg/errors.hpp"
#include "nmg/hierarchy.hpp"
#include "nmg/materialize.hpp"

using namespace nmg;
using testing::max_diff;

namespace {

double energy(const StencilField& a, const GridFunction& e) { return std::sqrt(dot(e, apply_stencil(a, e))); }

} // namespace

TEST_CASE("Galerkin coarse operators match the dense triple product") {
    const StencilField a = testing::rotated(std::numbers::pi / 4, 100.0, 15);
    for (Coarsening sc : {Coarsening::Full, Coarsening::RedBlack}) {
        const MultigridHierarchy h = MultigridHierarchy::build(a, 3, sc);
        for (int l = 0; l + 1 < h.size(); ++l) {
            const TransferPair& tp = *h.level(l).transfer;
            const DenseMatrix fine = materialize(h.level(l).op);
            const DenseMatrix rap = restriction_matrix(tp) * fine * prolongation_matrix(tp);
            const DenseMatrix coarse = materialize(h.level(l + 1).op);
            CHECK(max_diff(coarse, rap) <= 1e-12 * rap.max_abs());
            CHECK(coarse.asymmetry() <= 1e-12);
        }
    }
}

TEST_CASE("V-cycle error propagation matches the dense two-grid operator") {
    const StencilField a = testing::rotated(0.3, 10.0, 7);
    for (Coarsening sc : {Coarsening::Full, Coarsening::RedBlack}) {
        MultigridHierarchy h = MultigridHierarchy::build(a, 2, sc);
        install_classical(h, ClassicalSmoother::Jacobi);
        const DenseMatrix am = materialize(a);
        const DenseMatrix p = prolongation_matrix(*h.level(0).transfer);
        const DenseMatrix r = restriction_matrix(*h.level(0).transfer);
        const std::size_t n = am.rows();
        const DenseMatrix b = DenseMatrix::diagonal(a.diagonal());
        DenseMatrix s = DenseMatrix::identity(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s(i, j) -= kDefaultOmega * am(i, j) / b(i, i);
        const DenseMatrix cc = DenseMatrix::identity(n) - p * LuFactorization(r * am * p).solve(r * am);
        const DenseMatrix e = s * cc * s;
        CHECK(max_diff(cycle_matrix(h), e) <= 1e-12);
    }
}

TEST_CASE("solve with a zero right-hand side") {
    const StencilField a = testing::rotated(0.0, 100.0, 15);
    MultigridHierarchy h = MultigridHierarchy::build(a, 3, Coarsening::Full);
    install_classical(h, ClassicalSmoother::Jacobi);
    const SolveResult s = solve(h, GridFunction(a.spec_ptr()), GridFunction(a.spec_ptr()));
    CHECK(s.report.converged);
    CHECK(s.report.iterations == 0);
    CHECK(norm2(s.u) == 0.0);
}

TEST_CASE("exact-inverse smoother converges in one cycle") {
    const StencilField a = testing::rotated(1.0, 50.0, 7);
    MultigridHierarchy h = MultigridHierarchy::build(a, 2, Coarsening::Full);
    h.set_smoother(0, DenseSmoother::exact_inverse(a));
    const GridFunction f = testing::random_field(a.spec_ptr(), 3);
    const SolveResult s = solve(h, f, GridFunction(a.spec_ptr()), {.tol = 1e-10});
    CHECK(s.report.iterations == 1);
    CHECK(s.report.residual_history.back() <= 1e-12);
}

TEST_CASE("an over-relaxed smoother is reported as divergent") {
    const StencilField a = testing::rotated(0.0, 1.0, 15);
    MultigridHierarchy h = MultigridHierarchy::build(a, 2, Coarsening::Full);
    const auto d = a.diagonal();
    std::vector<double> inv(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) inv[i] = 5.0 / d[i];
    h.set_smoother(0, std::make_shared<DenseSmoother>(a.spec_ptr(), DenseMatrix::diagonal(inv)));
    const GridFunction f = testing::random_field(a.spec_ptr(), 5);
    CHECK_THROWS_AS(solve(h, f, GridFunction(a.spec_ptr()), {.tol = 1e-12, .max_iter = 200}), DivergenceError);
}

TEST_CASE("energy error never grows under symmetric cycles") {
    const StencilField a = testing::rotated(std::numbers::pi / 12, 100.0, 31);
    for (Coarsening sc : {Coarsening::Full, Coarsening::RedBlack}) {
        MultigridHierarchy h = MultigridHierarchy::build(a, 4, sc);
        install_classical(h, ClassicalSmoother::Jacobi);
        const GridFunction x = testing::random_field(a.spec_ptr(), 8);
        const GridFunction f = apply_stencil(a, x);
        GridFunction u(a.spec_ptr());
        double prev = energy(a, u - x);
        for (int it = 0; it < 10; ++it) {
            u = v_cycle(h, 0, f, u);
            const double e = energy(a, u - x);
            CHECK(e <= prev * (1.0 + 1e-12));
            prev = e;
        }
    }
}

TEST_CASE("hierarchy construction contracts") {
    const StencilField a = testing::rotated(0.0, 100.0, 15);
    CHECK_THROWS_AS(MultigridHierarchy::build(a, 1, Coarsening::Full), ConfigError);
    CHECK_THROWS(MultigridHierarchy::build(a, 10, Coarsening::Full));
    MultigridHierarchy h = MultigridHierarchy::build(a, 3, Coarsening::Full);
    CHECK_FALSE(h.complete());
    CHECK(h.level(1).op.spec().rows() == 7);
    CHECK(h.level(2).op.spec().rows() == 3);
    install_classical(h, ClassicalSmoother::GaussSeidel);
    CHECK(h.complete());
    CHECK(h.tail(1).size() == 2);
    CHECK_THROWS_AS(h.set_smoother(0, std::make_shared<JacobiSmoother>(h.level(1).op)), ConfigError);
    CHECK_THROWS_AS(v_cycle(h, 0, GridFunction(GridSpec::square(7)), GridFunction(a.spec_ptr())), ContractError);
}
