#include "doctest.h"
#include "helpers.hpp"
#include "nmg/analysis.hpp"
#include "nmg/errors.hpp"
#include "nmg/transfer.hpp"

using namespace nmg;
using testing::max_diff;

TEST_CASE("full weighting taps") {
    const auto fine = GridSpec::square(15);
    const TransferPair tp = TransferPair::build(Coarsening::Full, fine);
    CHECK(tp.coarse()->rows() == 7);
    const double w[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            GridFunction u(fine);
            u.set(2 * 3 + 1 + di, 2 * 4 + 1 + dj, 1.0);
            const GridFunction c = tp.restrict_to_coarse(u);
            CHECK(c(3, 4) == w[di + 1][dj + 1] / 16.0);
        }
    CHECK(max_diff(tp.restrict_to_coarse(GridFunction(fine)), GridFunction(tp.coarse())) == 0.0);
    const ConvKernel r = tp.restriction_stencil(), p = tp.prolongation_stencil();
    for (std::size_t t = 0; t < 9; ++t) CHECK(p.weights()[t] == 4.0 * r.weights()[t]);
}

TEST_CASE("transfers are exact duals") {
    const auto fine = GridSpec::square(16);
    for (Coarsening sc : {Coarsening::Full, Coarsening::RedBlack}) {
        const TransferPair tp = TransferPair::build(sc, fine);
        const DenseMatrix r = restriction_matrix(tp), p = prolongation_matrix(tp);
        DenseMatrix pt = p.transpose();
        pt *= 1.0 / tp.duality_factor();
        CHECK(max_diff(r, pt) == 0.0);
        if (sc == Coarsening::RedBlack) {
            const TransferPair next = TransferPair::build(sc, tp.coarse(), tp.coarse_layout());
            DenseMatrix pt2 = prolongation_matrix(next).transpose();
            pt2 *= 0.5;
            CHECK(max_diff(restriction_matrix(next), pt2) == 0.0);
        }
    }
}

TEST_CASE("red-black levels alternate layouts") {
    const auto fine = GridSpec::square(8);
    const TransferPair a = TransferPair::build(Coarsening::RedBlack, fine);
    CHECK(a.coarse_layout() == LevelLayout::Checkerboard);
    CHECK(a.coarse()->rows() == 8);
    CHECK(a.coarse()->active_count() == 32);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) CHECK(a.coarse()->active(i, j) == ((i + j) % 2 == 0));
    const TransferPair b = TransferPair::build(Coarsening::RedBlack, a.coarse(), LevelLayout::Checkerboard);
    CHECK(b.coarse_layout() == LevelLayout::Regular);
    CHECK(b.coarse()->rows() == 4);
    CHECK(b.coarse()->active_count() == 16);
    // injection-like centre weight of the red-black restriction
    GridFunction u(fine);
    u.set(2, 4, 1.0);
    CHECK(a.restrict_to_coarse(u)(2, 4) == 0.5);
}

TEST_CASE("restricting a prolonged constant is constant in the interior") {
    const auto fine = GridSpec::square(31);
    const TransferPair tp = TransferPair::build(Coarsening::Full, fine);
    GridFunction one(tp.coarse());
    for (std::int32_t p : tp.coarse()->active_points()) one.values_mut()[static_cast<std::size_t>(p)] = 1.0;
    const GridFunction back = tp.restrict_to_coarse(tp.prolong_to_fine(one));
    const double ref = back(7, 7);
    for (int i = 1; i < 14; ++i)
        for (int j = 1; j < 14; ++j) CHECK(std::abs(back(i, j) - ref) <= 1e-14);
}

TEST_CASE("restrict after prolong matches the dense product") {
    const TransferPair tp = TransferPair::build(Coarsening::Full, GridSpec::square(15));
    const DenseMatrix rp = restriction_matrix(tp) * prolongation_matrix(tp);
    const GridFunction c = testing::random_field(tp.coarse(), 4);
    CHECK(max_diff(tp.restrict_to_coarse(tp.prolong_to_fine(c)).active_values(), rp.multiply(c.active_values())) <= 1e-12);
}

TEST_CASE("coarsening limits") {
    CHECK_THROWS_AS(TransferPair::build(Coarsening::Full, GridSpec::full(1, 1, 0.5)), ConfigError);
    const TransferPair tp = TransferPair::build(Coarsening::Full, GridSpec::square(2));
    CHECK(tp.coarse()->active_count() == 1);
    CHECK_THROWS_AS(TransferPair::build(Coarsening::Full, GridSpec::square(15)).restrict_to_coarse(GridFunction(GridSpec::square(7))),
                    ContractError);
    CHECK(coarsening_from_string("rb") == Coarsening::RedBlack);
    CHECK_THROWS_AS(coarsening_from_string("semi"), ConfigError);
}
