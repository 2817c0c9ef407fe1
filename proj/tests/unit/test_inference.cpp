#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "nmg/errors.hpp"
#include "nmg/inference.hpp"

using namespace nmg;
using testing::max_diff;

namespace {

void randomize(KernelInferenceNet& net, std::uint64_t seed, double sd = 0.2) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sd);
    std::vector<double> p(net.parameter_count());
    for (double& v : p) v = nd(rng);
    net.set_parameters(p);
}

double leaky(double v, double s) { return v < 0.0 ? s * v : v; }

} // namespace

TEST_CASE("parameter counts of the inference nets") {
    CHECK(KernelInferenceNet(InferenceVariant::FullyConnected, 1, 1).parameter_count() == 6800);
    CHECK(KernelInferenceNet(InferenceVariant::Convolutional, 1, 1).parameter_count() == 378);
    CHECK(KernelInferenceNet(InferenceVariant::FullyConnected, 3, 1).parameter_count() == 6800 + 2 * 360);
    CHECK(KernelInferenceNet(InferenceVariant::Convolutional, 2, 1).parameter_count() == 378 + 243);
    CHECK_THROWS_AS(inference_variant_from_string("rnn"), ConfigError);
}

TEST_CASE("feature map blocks outside the domain are zero") {
    const StencilField a = testing::variable(1.0, 8);
    const auto f = build_feature_map(a, 2.0);
    const auto& s = a.spec();
    CHECK(f.size() == s.size() * kFeatureWidth);
    auto block_zero = [&](std::size_t p, int b) {
        for (int t = 0; t < 9; ++t)
            if (f[p * kFeatureWidth + static_cast<std::size_t>(b * 9 + t)] != 0.0) return false;
        return true;
    };
    int zeros = 0;
    for (int b = 0; b < 9; ++b) zeros += block_zero(s.flat(0, 0), b);
    CHECK(zeros == 5);
    // block of neighbour (di, dj) = (1, 0) at (3, 3) is the stencil of (4, 3), scaled
    const auto st = a.stencil(s.flat(4, 3));
    for (int t = 0; t < 9; ++t)
        CHECK(f[s.flat(3, 3) * kFeatureWidth + static_cast<std::size_t>(((1 + 1) * 3 + 1) * 9 + t)] == 2.0 * st[static_cast<std::size_t>(t)]);
    StencilField wide(a.spec_ptr(), 2);
    for (std::int32_t p : s.active_points()) {
        wide.at(static_cast<std::size_t>(p), 0, 0) = 1.0;
        wide.at(static_cast<std::size_t>(p), 2, 0) = -0.1;
    }
    CHECK_THROWS_AS(build_feature_map(wide, 1.0), ContractError);
}

TEST_CASE("constant coefficients give identical interior kernels") {
    const StencilField a = testing::rotated(0.6, 100.0, 10);
    KernelInferenceNet net(InferenceVariant::FullyConnected, 2, 4);
    randomize(net, 8);
    const auto sm = infer_kernels(net, a);
    const auto& s = a.spec();
    for (const auto& k : sm->kernels()) {
        const std::size_t ref = s.flat(5, 5);
        for (int i = 2; i < 8; ++i)
            for (int j = 2; j < 8; ++j) {
                const std::size_t p = s.flat(i, j);
                CHECK(testing::bitwise_equal({k.data() + 9 * p, 9}, {k.data() + 9 * ref, 9}));
            }
    }
}

TEST_CASE("zero last layer gives zero or Jacobi") {
    const StencilField a = testing::variable(10.0, 9);
    const GridFunction r = testing::random_field(a.spec_ptr(), 3);
    for (InferenceVariant v : {InferenceVariant::FullyConnected, InferenceVariant::Convolutional}) {
        const KernelInferenceNet net(v, 2, 11);
        CHECK(norm2(infer_kernels(net, a, false)->apply(r)) == 0.0);
        CHECK(testing::rel_diff(infer_kernels(net, a, true)->apply(r), JacobiSmoother(a).apply(r)) <= 1e-15);
    }
}

TEST_CASE("inferred smoother matches a direct per-point evaluation") {
    const StencilField a = testing::variable(10.0, 9);
    const auto& s = a.spec();
    for (InferenceVariant v : {InferenceVariant::FullyConnected, InferenceVariant::Convolutional}) {
        KernelInferenceNet net(v, 2, 5);
        randomize(net, 6);
        const auto sm = infer_kernels(net, a, true);
        const GridFunction r = testing::random_field(a.spec_ptr(), 7);
        const auto& k = sm->kernels();
        REQUIRE(k.size() == 2);
        auto stage = [&](const std::vector<double>& w, const std::vector<double>& x) {
            std::vector<double> y(s.size(), 0.0);
            for (int i = 0; i < s.rows(); ++i)
                for (int j = 0; j < s.cols(); ++j) {
                    const std::size_t p = s.flat(i, j);
                    for (int di = -1; di <= 1; ++di)
                        for (int dj = -1; dj <= 1; ++dj) {
                            const int ii = i + di, jj = j + dj;
                            if (ii < 0 || jj < 0 || ii >= s.rows() || jj >= s.cols()) continue;
                            y[p] += w[9 * p + static_cast<std::size_t>((di + 1) * 3 + dj + 1)] * x[s.flat(ii, jj)];
                        }
                }
            return y;
        };
        std::vector<double> x = stage(k[0], std::vector<double>(r.values().begin(), r.values().end()));
        for (double& t : x) t = leaky(t, net.slope());
        x = stage(k[1], x);
        const auto d = a.diagonal();
        std::vector<double> expect(s.size(), 0.0);
        for (std::size_t q = 0; q < s.active_count(); ++q) {
            const auto p = static_cast<std::size_t>(s.active_points()[q]);
            expect[p] = sm->scale() * x[p] + kDefaultOmega / d[q] * r.values()[p];
        }
        const GridFunction got = sm->apply(r);
        double mx = 0.0;
        for (double e : expect) mx = std::max(mx, std::abs(e));
        CHECK(max_diff(got.values(), expect) <= 1e-12 * mx);
        CHECK_FALSE(sm->is_linear());
    }
}

TEST_CASE("net backward matches finite differences") {
    for (InferenceVariant v : {InferenceVariant::FullyConnected, InferenceVariant::Convolutional}) {
        KernelInferenceNet net(v, 2, 3);
        randomize(net, 4, 0.3);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> nd;
        std::vector<double> feat(kFeatureWidth), c(18);
        for (double& f : feat) f = nd(rng);
        for (double& f : c) f = nd(rng);
        KernelInferenceNet::Workspace ws;
        std::vector<double> out(18);
        net.forward(feat.data(), out.data(), ws);
        std::vector<double> g(net.parameter_count(), 0.0);
        net.backward(feat.data(), c.data(), ws, g.data());
        auto loss = [&](const std::vector<double>& p) {
            KernelInferenceNet n2 = net;
            n2.set_parameters(p);
            KernelInferenceNet::Workspace w2;
            std::vector<double> o(18);
            n2.forward(feat.data(), o.data(), w2);
            double s = 0.0;
            for (std::size_t i = 0; i < 18; ++i) s += c[i] * o[i];
            return s;
        };
        std::vector<double> p = net.parameters();
        double gmax = 0.0, err = 0.0;
        for (double x : g) gmax = std::max(gmax, std::abs(x));
        for (std::size_t i = 0; i < p.size(); i += (p.size() > 1000 ? 7 : 1)) {
            const double keep = p[i], h = 1e-6;
            p[i] = keep + h;
            const double lp = loss(p);
            p[i] = keep - h;
            const double lm = loss(p);
            p[i] = keep;
            err = std::max(err, std::abs((lp - lm) / (2 * h) - g[i]) / gmax);
        }
        CAPTURE(to_string(v));
        CHECK(err <= 1e-6);
    }
}

TEST_CASE("nets are seeded deterministically") {
    const KernelInferenceNet a(InferenceVariant::FullyConnected, 1, 9), b(InferenceVariant::FullyConnected, 1, 9),
        c(InferenceVariant::FullyConnected, 1, 10);
    CHECK(testing::bitwise_equal(a.parameters(), b.parameters()));
    CHECK_FALSE(testing::bitwise_equal(a.parameters(), c.parameters()));
    KernelInferenceNet d = a;
    std::vector<double> p = d.parameters();
    p[0] = NAN;
    CHECK_THROWS_AS(d.set_parameters(p), NumericError);
}
