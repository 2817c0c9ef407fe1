#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "nmg/errors.hpp"
#include "nmg/materialize.hpp"
#include "nmg/problems.hpp"

using namespace nmg;
using testing::max_diff;
using testing::random_field;
using testing::random_kernel;

TEST_CASE("grid spec validates shape and mask") {
    CHECK_THROWS_AS(GridSpec(0, 3, 0.1, {}), ContractError);
    CHECK_THROWS_AS(GridSpec(2, 2, 0.1, std::vector<std::uint8_t>(3, 1)), ContractError);
    CHECK_THROWS_AS(GridSpec(2, 2, 0.1, std::vector<std::uint8_t>(4, 0)), ContractError);
    CHECK_THROWS_AS(GridSpec(2, 2, -1.0, std::vector<std::uint8_t>(4, 1)), ContractError);
    GridSpec g(2, 3, 0.5, {1, 0, 1, 1, 1, 0});
    CHECK(g.active_count() == 4);
    CHECK(g.active_index(1) == -1);
    CHECK(g.active_index(2) == 1);
}

TEST_CASE("grid functions stay zero at inactive points") {
    auto s = std::make_shared<const GridSpec>(2, 2, 0.5, std::vector<std::uint8_t>{1, 0, 1, 1});
    GridFunction g(s, {1.0, 2.0, 3.0, 4.0});
    CHECK(g.values()[1] == 0.0);
    CHECK_THROWS_AS(g.set(0, 1, 1.0), ContractError);
    const auto k = random_kernel(3, 1);
    CHECK(convolve(k, g).values()[1] == 0.0);
}

TEST_CASE("stencil application matches dense matrix-vector product") {
    const StencilField a = testing::rotated(std::numbers::pi / 6, 100.0, 8);
    const DenseMatrix m = materialize(a);
    const GridFunction u = random_field(a.spec_ptr(), 3);
    const auto y = m.multiply(u.active_values());
    CHECK(max_diff(apply_stencil(a, u).active_values(), y) <= 1e-12 * m.max_abs());

    const StencilField id = StencilField::constant(a.spec_ptr(), ConvKernel::delta(3));
    CHECK(max_diff(apply_stencil(id, u), u) == 0.0);
    CHECK(max_diff(apply_stencil(a, GridFunction(a.spec_ptr())), GridFunction(a.spec_ptr())) == 0.0);
}

TEST_CASE("stencil application rejects mismatched specs") {
    const StencilField a = testing::rotated(0.0, 1.0, 4);
    CHECK_THROWS_AS(apply_stencil(a, GridFunction(GridSpec::square(5))), ContractError);
}

TEST_CASE("materialize of the identity and the five-point stencil") {
    auto s = GridSpec::full(4, 4, 1.0);
    const DenseMatrix id = materialize([](const GridFunction& x) { return x; }, s);
    CHECK(max_diff(id, DenseMatrix::identity(16)) == 0.0);

    ConvKernel lap(3, {0, -1, 0, -1, 4, -1, 0, -1, 0});
    auto s3 = GridSpec::full(3, 3, 1.0);
    const DenseMatrix m = materialize(StencilField::constant(s3, lap));
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 9; ++j) {
            const int di = static_cast<int>(i / 3) - static_cast<int>(j / 3);
            const int dj = static_cast<int>(i % 3) - static_cast<int>(j % 3);
            double expect = 0.0;
            if (i == j) expect = 4.0;
            else if (std::abs(di) + std::abs(dj) == 1) expect = -1.0;
            CHECK(m(i, j) == expect);
        }
}

TEST_CASE("materialize reports non-finite output") {
    auto s = GridSpec::full(2, 2, 1.0);
    auto bad = [](const GridFunction& x) {
        GridFunction y = x;
        y.values_mut()[0] = NAN;
        return y;
    };
    CHECK_THROWS_AS(materialize(bad, s), NumericError);
}

TEST_CASE("convolution is zero-padded cross-correlation") {
    auto s = GridSpec::full(1, 5, 1.0);
    GridFunction u(s);
    u.values_mut()[2] = 1.0;
    const GridFunction y = convolve(ConvKernel(3, std::vector<double>(9, 1.0)), u);
    const std::vector<double> expect{0, 1, 1, 1, 0};
    CHECK(max_diff(y.values(), expect) == 0.0);
    CHECK(max_diff(convolve(ConvKernel::delta(3), u), u) == 0.0);
    CHECK_THROWS_AS(ConvKernel(4), ContractError);
}

TEST_CASE("convolution matches an entrywise Toeplitz-block matrix") {
    auto s = GridSpec::full(5, 5, 1.0);
    const ConvKernel k = random_kernel(3, 9);
    const DenseMatrix m = materialize([&](const GridFunction& x) { return convolve(k, x); }, s);
    for (int i = 0; i < 25; ++i)
        for (int j = 0; j < 25; ++j) {
            const int di = j / 5 - i / 5, dj = j % 5 - i % 5;
            const double expect = std::abs(di) <= 1 && std::abs(dj) <= 1 ? k.at(di, dj) : 0.0;
            CHECK(std::abs(m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - expect) <= 1e-12);
        }
    const GridFunction u = random_field(GridSpec::full(8, 8, 1.0), 4);
    const DenseMatrix m8 = materialize([&](const GridFunction& x) { return convolve(k, x); }, u.spec_ptr());
    CHECK(max_diff(convolve(k, u).active_values(), m8.multiply(u.active_values())) <= 1e-12);
}

TEST_CASE("convolution transpose is the adjoint") {
    auto s = std::make_shared<const GridSpec>(6, 7, 0.1, [] {
        std::vector<std::uint8_t> m(42, 1);
        m[10] = m[11] = m[30] = 0;
        return m;
    }());
    const ConvKernel k = random_kernel(5, 2);
    for (int t = 0; t < 10; ++t) {
        const GridFunction u = random_field(s, 100 + t), v = random_field(s, 200 + t);
        CHECK(std::abs(dot(convolve(k, u), v) - dot(u, convolve_transpose(k, v))) <= 1e-12);
    }
}

TEST_CASE("kernel composition equals sequential application") {
    const ConvKernel a = random_kernel(3, 1), b = random_kernel(3, 2), c = random_kernel(3, 3);
    const auto s = GridSpec::full(32, 32, 1.0);
    const GridFunction u = testing::interior_field(s, 4, 5);
    CHECK(max_diff(convolve(compose_kernels(a, b), u), convolve(a, convolve(b, u))) <= 1e-12);

    const ConvKernel ab_c = compose_kernels(compose_kernels(a, b), c);
    const ConvKernel a_bc = compose_kernels(a, compose_kernels(b, c));
    CHECK(max_diff(ab_c.weights(), a_bc.weights()) <= 1e-14);

    const ConvKernel d = compose_kernels(ConvKernel::delta(1), b);
    CHECK(max_diff(d.weights(), b.weights()) == 0.0);
    const ConvKernel big = compose_kernels(random_kernel(9, 4), compose_kernels(random_kernel(9, 5), random_kernel(9, 6)));
    CHECK(big.size() == 25);
}

TEST_CASE("stencil transpose is the adjoint and symmetric assemblies are self-adjoint") {
    const StencilField a = testing::rotated(std::numbers::pi / 3, 100.0, 12, Geometry::Square);
    const StencilField v = testing::variable(10.0, 12);
    for (int t = 0; t < 100; ++t) {
        const GridFunction x = random_field(a.spec_ptr(), 300 + t), y = random_field(a.spec_ptr(), 400 + t);
        const double sa = std::abs(dot(apply_stencil(a, x), y));
        CHECK(std::abs(dot(apply_stencil(a, x), y) - dot(x, apply_stencil(a, y))) <= 1e-12 * std::max(sa, 1.0) * 10);
        CHECK(std::abs(dot(apply_stencil(v, x), y) - dot(x, apply_stencil_transpose(v, y))) <=
              1e-12 * std::max(std::abs(dot(apply_stencil(v, x), y)), 1.0) * 10);
    }
}

TEST_CASE("trimmed keeps every nonzero") {
    auto s = GridSpec::full(5, 5, 1.0);
    StencilField f(s, 2);
    for (std::int32_t p : s->active_points()) f.at(static_cast<std::size_t>(p), 1, -1) = 2.0;
    const StencilField t = f.trimmed();
    CHECK(t.radius() == 1);
    const GridFunction u = random_field(s, 8);
    CHECK(max_diff(apply_stencil(f, u), apply_stencil(t, u)) == 0.0);
}

TEST_CASE("dense solve and spectra on small cases") {
    const std::vector<double> b{1.0, -2.0, 3.0};
    CHECK(max_diff(dense_solve(DenseMatrix::identity(3), b), b) == 0.0);
    const std::vector<double> d{1.0, 2.0, 3.0};
    auto spec = eig_spectrum(DenseMatrix::diagonal(d));
    std::vector<double> re;
    for (auto z : spec) re.push_back(z.real());
    std::sort(re.begin(), re.end());
    CHECK(max_diff(re, d) <= 1e-12);
    DenseMatrix sing(2, 2, 1.0);
    CHECK_THROWS_AS(LuFactorization{sing}, SingularMatrixError);
    try {
        LuFactorization lu(sing);
    } catch (const SingularMatrixError& e) {
        CHECK(e.pivot() == 1);
    }
}

TEST_CASE("QR spectrum agrees with power iteration on a Jacobi iteration matrix") {
    ConvKernel lap(3, {0, -1, 0, -1, 4, -1, 0, -1, 0});
    const auto s = GridSpec::full(4, 4, 1.0);
    const DenseMatrix a = materialize(StencilField::constant(s, lap));
    DenseMatrix g = DenseMatrix::identity(16);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) g(i, j) -= (2.0 / 3.0) * a(i, j) / 4.0;
    const double rho = spectral_radius_of(eig_spectrum(g));
    const auto pw = power_iteration(g, 5000, 3);
    CHECK(std::abs(rho - pw.estimate) <= 1e-8);
    // shifted matrix: G + I has dominant eigenvalue 1 + lambda_max(G)
    DenseMatrix sh = g;
    for (std::size_t i = 0; i < 16; ++i) sh(i, i) += 1.0;
    const auto ev = symmetric_eigenvalues(g);
    const double lmax = ev.back();
    CHECK(std::abs(power_iteration(sh, 5000, 4).estimate - (1.0 + lmax)) <= 1e-8);
}
