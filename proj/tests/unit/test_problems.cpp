#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "nmg/errors.hpp"
#include "nmg/materialize.hpp"
#include "nmg/problems.hpp"

using namespace nmg;
using testing::max_diff;

namespace {

double smallest_eigenvalue(const StencilField& a) {
    const DenseMatrix m = materialize(a);
    DenseMatrix sym = m;
    const DenseMatrix mt = m.transpose();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) sym(i, j) = 0.5 * (m(i, j) + mt(i, j));
    return symmetric_eigenvalues(sym).front();
}

} // namespace

TEST_CASE("isotropic rotated operator is the five-point Laplacian") {
    const double h = 1.0 / 17;
    const ConvKernel k = rotated_laplacian_stencil(0.0, 1.0, h);
    const std::vector<double> expect{0, -1, 0, -1, 4, -1, 0, -1, 0};
    for (std::size_t t = 0; t < 9; ++t) CHECK(std::abs(k.weights()[t] * h * h - expect[t]) <= 1e-14);
    // any angle gives the same stencil when xi = 1
    const ConvKernel k2 = rotated_laplacian_stencil(0.7, 1.0, h);
    CHECK(max_diff(k.weights(), k2.weights()) <= 1e-10);
}

TEST_CASE("quarter turn swaps the axes") {
    const double h = 0.1;
    const ConvKernel a = rotated_laplacian_stencil(0.0, 100.0, h);
    const ConvKernel b = rotated_laplacian_stencil(std::numbers::pi / 2, 100.0, h);
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) CHECK(std::abs(a.at(di, dj) - b.at(dj, di)) <= 1e-10 * a.at(0, 0));
}

TEST_CASE("rotated operator is pi-periodic in theta") {
    for (double th : {0.1, 0.5, 1.2, 2.9}) {
        const ConvKernel a = rotated_laplacian_stencil(th, 100.0, 0.05);
        const ConvKernel b = rotated_laplacian_stencil(th + std::numbers::pi, 100.0, 0.05);
        CHECK(max_diff(a.weights(), b.weights()) <= 1e-12 * a.at(0, 0));
    }
}

TEST_CASE("rotated operator at 45 degrees is symmetric positive definite") {
    const StencilField a = testing::rotated(std::numbers::pi / 4, 100.0, 8);
    const DenseMatrix m = materialize(a);
    CHECK(m.asymmetry() <= 1e-12);
    CHECK(smallest_eigenvalue(a) > 0.0);
}

TEST_CASE("variable diffusion with constant coefficient") {
    const int n = 8;
    const double h = 1.0 / (n + 1);
    const StencilField one = testing::variable(0.0, n, 1.0);
    const std::size_t p = one.spec().flat(3, 4);
    const std::vector<double> expect{-1, -1, -1, -1, 8, -1, -1, -1, -1};
    for (std::size_t t = 0; t < 9; ++t) CHECK(std::abs(one.stencil(p)[t] - expect[t] / (3 * h * h)) <= 1e-10);
    const StencilField off = testing::variable(0.0, n);  // g = 1.1
    for (std::size_t t = 0; t < 9; ++t) CHECK(std::abs(off.stencil(p)[t] - 1.1 * one.stencil(p)[t]) <= 1e-10);
}

TEST_CASE("variable diffusion is symmetric positive definite") {
    const StencilField a = testing::variable(1.0, 8);
    CHECK(materialize(a).asymmetry() <= 1e-12);
    CHECK(smallest_eigenvalue(a) > 0.0);
}

TEST_CASE("interior rows sum to zero") {
    for (const StencilField& a : {testing::rotated(0.4, 100.0, 16), testing::variable(10.0, 16)}) {
        for (int i = 1; i < 15; ++i)
            for (int j = 1; j < 15; ++j) {
                const auto s = a.stencil(a.spec().flat(i, j));
                double sum = 0.0, l1 = 0.0;
                for (double v : s) {
                    sum += v;
                    l1 += std::abs(v);
                }
                CHECK(std::abs(sum) <= 1e-10 * l1);
            }
    }
}

TEST_CASE("every geometry and family gives an SPD operator") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> theta(0.0, std::numbers::pi), kappa(0.0, 100.0), xi(1.0, 200.0);
    for (Geometry g : {Geometry::Square, Geometry::LShape, Geometry::Cylinder})
        for (int draw = 0; draw < 10; ++draw) {
            ProblemSpec p;
            p.geometry = g;
            p.n = 8 + draw % 9;
            p.theta = theta(rng);
            p.xi = xi(rng);
            CHECK(smallest_eigenvalue(assemble(p)) > 0.0);
            p.family = Family::VariableDiffusion;
            p.kappa = kappa(rng);
            CHECK(smallest_eigenvalue(assemble(p)) > 0.0);
        }
}

TEST_CASE("geometry active counts") {
    CHECK(build_geometry(Geometry::Square, 4)->active_count() == 16);
    CHECK(build_geometry(Geometry::LShape, 8)->active_count() == 48);
    std::size_t removed = 0;
    const double c = 7.5;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            if ((i - c) * (i - c) + (j - c) * (j - c) <= 16.0) ++removed;
    CHECK(build_geometry(Geometry::Cylinder, 16)->active_count() == 256 - removed);
    CHECK_THROWS_AS(build_geometry(Geometry::LShape, 4), ContractError);
}

TEST_CASE("problem validation") {
    ProblemSpec p;
    p.n = 2;
    CHECK_THROWS_AS(p.validate(), ContractError);
    p.n = 16;
    p.xi = 0.0;
    CHECK_THROWS_AS(p.validate(), ContractError);
    p.xi = 100.0;
    p.theta = std::numbers::pi;
    CHECK_THROWS_AS(p.validate(), ContractError);
    CHECK_THROWS_AS(family_from_string("heat"), ConfigError);
    CHECK(geometry_from_string("lshape") == Geometry::LShape);
}

TEST_CASE("training datasets") {
    const StencilField a = testing::rotated(0.0, 100.0, 16);
    const auto d1 = make_dataset(a, 1, 99);
    const auto d2 = make_dataset(a, 1, 99);
    CHECK(testing::bitwise_equal(d1[0].f.values(), d2[0].f.values()));
    CHECK(testing::bitwise_equal(d1[0].u0.values(), d2[0].u0.values()));
    const auto d = make_dataset(a, 50, 5);
    double mean = 0.0;
    for (const auto& s : d) {
        CHECK(testing::bitwise_equal(apply_stencil(a, s.u_star).values(), s.f.values()));
        CHECK(std::abs(norm2(s.u0) - 1.0) <= 1e-14);
        mean += norm2(s.u_star);
    }
    CHECK(std::abs(mean / 50.0 - 1.0) <= 1e-14);
    CHECK_FALSE(testing::bitwise_equal(d[0].u_star.values(), d[1].u_star.values()));
}
