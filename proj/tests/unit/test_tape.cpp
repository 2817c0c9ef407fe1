#include <functional>

#include "doctest.h"
#include "helpers.hpp"
#include "nmg/errors.hpp"
#include "nmg/hierarchy.hpp"
#include "nmg/materialize.hpp"
#include "nmg/tape.hpp"

using namespace nmg;

namespace {

using Graph = std::function<Tape::Id(Tape&, Tape::Id)>;

double loss_of(const Graph& g, const GridFunction& x) {
    Tape t;
    return norm2(t.value(g(t, t.constant(x))));
}

// Largest relative error between the taped input gradient of ||g(x)|| and
// central differences over every active entry.
double input_grad_error(const Graph& g, const GridFunction& x) {
    Tape t;
    const Tape::Id in = t.constant(x);
    t.backward_norm(g(t, in));
    const std::vector<double> grad = t.grad(in);
    double err = 0.0, scale = 0.0;
    for (double v : grad) scale = std::max(scale, std::abs(v));
    const double h = 1e-6;
    for (std::int32_t p : x.spec().active_points()) {
        GridFunction xp = x, xm = x;
        xp.values_mut()[static_cast<std::size_t>(p)] += h;
        xm.values_mut()[static_cast<std::size_t>(p)] -= h;
        const double fd = (loss_of(g, xp) - loss_of(g, xm)) / (2 * h);
        err = std::max(err, std::abs(fd - grad[static_cast<std::size_t>(p)]) / scale);
    }
    return err;
}

} // namespace

TEST_CASE("input gradients of every tape operation match finite differences") {
    const StencilField a = testing::rotated(0.8, 30.0, 7);
    const SpecPtr s = a.spec_ptr();
    const GridFunction x = testing::random_field(s, 2);
    const ConvKernel k = testing::random_kernel(3, 5);
    std::vector<double> pp(s->size() * 9);
    for (std::size_t i = 0; i < pp.size(); ++i) pp[i] = std::sin(0.37 * static_cast<double>(i));
    std::vector<double> w(s->size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + std::cos(static_cast<double>(i));
    const TransferPair tp = TransferPair::build(Coarsening::Full, s);
    const MultigridHierarchy h = MultigridHierarchy::build(a, 2, Coarsening::Full);
    const DenseMatrix dm = materialize(a);
    const LuFactorization lu(dm);

    const std::vector<std::pair<const char*, Graph>> graphs{
        {"convolve", [&](Tape& t, Tape::Id i) { return t.convolve(k, i); }},
        {"per_point", [&](Tape& t, Tape::Id i) { return t.per_point(pp, i); }},
        {"stencil", [&](Tape& t, Tape::Id i) { return t.stencil(a, i); }},
        {"restrict", [&](Tape& t, Tape::Id i) { return t.restrict_to_coarse(tp, i); }},
        {"prolong", [&](Tape& t, Tape::Id i) { return t.prolong_to_fine(tp, t.restrict_to_coarse(tp, i)); }},
        {"dense_solve", [&](Tape& t, Tape::Id i) { return t.dense_solve(lu, i); }},
        {"dense", [&](Tape& t, Tape::Id i) { return t.dense(dm, i); }},
        {"pointwise", [&](Tape& t, Tape::Id i) { return t.pointwise(w, i); }},
        {"add", [&](Tape& t, Tape::Id i) { return t.add(i, t.convolve(k, i)); }},
        {"sub", [&](Tape& t, Tape::Id i) { return t.sub(t.scale(i, 3.0), t.stencil(a, i)); }},
        {"leaky_relu", [&](Tape& t, Tape::Id i) { return t.leaky_relu(t.convolve(k, i), 0.1); }},
        {"coarse solve",
         [&](Tape& t, Tape::Id i) { return t.dense_solve(h.coarse_factorization(), t.restrict_to_coarse(tp, i)); }},
    };
    for (const auto& [name, g] : graphs) {
        CAPTURE(name);
        CHECK(input_grad_error(g, x) <= 1e-6);
    }
}

TEST_CASE("trainable kernel and per-point gradients match finite differences") {
    const SpecPtr s = GridSpec::square(6);
    const GridFunction x = testing::random_field(s, 3);
    ConvKernel k1 = testing::random_kernel(3, 1), k2 = testing::random_kernel(5, 2);
    std::vector<double> pp(s->size() * 9, 0.0);
    for (std::size_t i = 0; i < pp.size(); ++i) pp[i] = std::cos(0.11 * static_cast<double>(i));
    auto forward = [&](std::vector<double>* g1, std::vector<double>* g2, std::vector<double>* gp) {
        auto t = std::make_unique<Tape>();
        Tape::Id y = t->convolve(k1, t->constant(x), g1);
        y = t->leaky_relu(y, 0.2);
        y = t->convolve(k2, y, g2);
        y = t->per_point(pp, y, gp);
        return std::pair{std::move(t), y};
    };
    std::vector<double> g1(9, 0.0), g2(25, 0.0), gp(pp.size(), 0.0);
    {
        auto [t, y] = forward(&g1, &g2, &gp);
        t->backward_norm(y);
    }
    auto loss = [&] {
        auto [t, y] = forward(nullptr, nullptr, nullptr);
        return norm2(t->value(y));
    };
    const double h = 1e-6;
    auto check = [&](std::span<double> wts, const std::vector<double>& grad) {
        double scale = 0.0, err = 0.0;
        for (double v : grad) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < wts.size(); ++i) {
            const double keep = wts[i];
            wts[i] = keep + h;
            const double lp = loss();
            wts[i] = keep - h;
            const double lm = loss();
            wts[i] = keep;
            err = std::max(err, std::abs((lp - lm) / (2 * h) - grad[i]) / scale);
        }
        return err;
    };
    CHECK(check(k1.weights_mut(), g1) <= 1e-6);
    CHECK(check(k2.weights_mut(), g2) <= 1e-6);
    for (std::size_t p = 0; p < s->size(); ++p)
        if (!s->active(p)) CHECK(std::all_of(gp.begin() + 9 * p, gp.begin() + 9 * p + 9, [](double v) { return v == 0.0; }));
    CHECK(check(pp, gp) <= 1e-6);
}

TEST_CASE("backward accumulates through shared nodes") {
    const SpecPtr s = GridSpec::square(4);
    const GridFunction x = testing::random_field(s, 9);
    Tape t;
    const Tape::Id in = t.constant(x);
    const Tape::Id y = t.add(t.scale(in, 2.0), in);
    std::vector<double> seed(s->size(), 1.0);
    t.backward(y, seed);
    for (double g : t.grad(in)) CHECK(g == 3.0);
    CHECK(t.value(y).values()[5] == 3.0 * x.values()[5]);
    CHECK_THROWS_AS(t.add(in, 42), ContractError);
}
