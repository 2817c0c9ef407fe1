#include "nmg/tape.hpp"

#include <cmath>

#include "nmg/errors.hpp"
#include "nmg/kernels.hpp"

namespace nmg {

namespace {
kernels::Lattice lattice_of(const GridSpec& s) { return {s.rows(), s.cols(), s.mask().data()}; }
} // namespace

void Tape::check(Id x) const {
    if (x < 0 || static_cast<std::size_t>(x) >= nodes_.size()) throw ContractError("Tape: unknown node id");
}

std::vector<double>& Tape::grad_mut(Id x) {
    Node& n = nodes_[static_cast<std::size_t>(x)];
    if (n.grad.empty()) n.grad.assign(n.value.values().size(), 0.0);
    return n.grad;
}

Tape::Id Tape::push(GridFunction v, std::function<void(Tape&, const std::vector<double>&)> back) {
    nodes_.push_back({std::move(v), {}, std::move(back)});
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::constant(GridFunction v) { return push(std::move(v), nullptr); }

Tape::Id Tape::convolve(const ConvKernel& k, Id x, std::vector<double>* kernel_grad) {
    check(x);
    if (kernel_grad && kernel_grad->size() != k.weights().size())
        throw ContractError("Tape::convolve: gradient buffer size mismatch");
    GridFunction y = nmg::convolve(k, value(x));
    return push(std::move(y), [&k, x, kernel_grad](Tape& t, const std::vector<double>& gy) {
        const GridFunction& xv = t.value(x);
        const auto lat = lattice_of(xv.spec());
        auto& gx = t.grad_mut(x);
        std::vector<double> tmp(gx.size(), 0.0);
        kernels::omp::convolve_transpose(lat, k.size(), k.weights().data(), gy.data(), tmp.data());
        for (std::size_t p = 0; p < gx.size(); ++p) gx[p] += tmp[p];
        if (kernel_grad) kernels::omp::kernel_grad(lat, k.size(), xv.data(), gy.data(), kernel_grad->data());
    });
}

Tape::Id Tape::per_point(const std::vector<double>& weights, Id x, std::vector<double>* weight_grad) {
    check(x);
    const GridFunction& xv = value(x);
    if (weights.size() != xv.spec().size() * 9) throw ContractError("Tape::per_point: weight array size mismatch");
    if (weight_grad && weight_grad->size() != weights.size())
        throw ContractError("Tape::per_point: gradient buffer size mismatch");
    GridFunction y(xv.spec_ptr());
    kernels::omp::apply_per_point(lattice_of(xv.spec()), {1, weights.data()}, xv.data(), y.data());
    return push(std::move(y), [&weights, x, weight_grad](Tape& t, const std::vector<double>& gy) {
        const GridFunction& xv = t.value(x);
        const auto lat = lattice_of(xv.spec());
        auto& gx = t.grad_mut(x);
        std::vector<double> tmp(gx.size(), 0.0);
        kernels::omp::apply_per_point_transpose(lat, {1, weights.data()}, gy.data(), tmp.data());
        for (std::size_t p = 0; p < gx.size(); ++p) gx[p] += tmp[p];
        if (weight_grad) kernels::omp::per_point_weight_grad(lat, 1, xv.data(), gy.data(), weight_grad->data());
    });
}

Tape::Id Tape::stencil(const StencilField& a, Id x) {
    check(x);
    GridFunction y = apply_stencil(a, value(x));
    return push(std::move(y), [&a, x](Tape& t, const std::vector<double>& gy) {
        const GridFunction g(t.value(x).spec_ptr(), gy);
        const GridFunction gx = apply_stencil_transpose(a, g);
        auto& acc = t.grad_mut(x);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += gx.values()[p];
    });
}

Tape::Id Tape::restrict_to_coarse(const TransferPair& tp, Id x) {
    check(x);
    GridFunction y = tp.restrict_to_coarse(value(x));
    return push(std::move(y), [&tp, x](Tape& t, const std::vector<double>& gy) {
        // R^T = P / c
        const GridFunction g(tp.coarse(), gy);
        const GridFunction gx = tp.prolong_to_fine(g);
        const double inv = 1.0 / tp.duality_factor();
        auto& acc = t.grad_mut(x);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += inv * gx.values()[p];
    });
}

Tape::Id Tape::prolong_to_fine(const TransferPair& tp, Id x) {
    check(x);
    GridFunction y = tp.prolong_to_fine(value(x));
    return push(std::move(y), [&tp, x](Tape& t, const std::vector<double>& gy) {
        // P^T = c R
        const GridFunction g(tp.fine(), gy);
        const GridFunction gx = tp.restrict_to_coarse(g);
        const double c = tp.duality_factor();
        auto& acc = t.grad_mut(x);
        for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += c * gx.values()[p];
    });
}

Tape::Id Tape::dense_solve(const LuFactorization& lu, Id x) {
    check(x);
    const GridFunction& xv = value(x);
    if (xv.spec().active_count() != lu.size()) throw ContractError("Tape::dense_solve: size mismatch");
    GridFunction y = GridFunction::from_active(xv.spec_ptr(), lu.solve(xv.active_values()));
    return push(std::move(y), [&lu, x](Tape& t, const std::vector<double>& gy) {
        const SpecPtr& spec = t.value(x).spec_ptr();
        const GridFunction g(spec, gy);
        const auto gx = lu.solve_transpose(g.active_values());
        auto& acc = t.grad_mut(x);
        const auto& pts = spec->active_points();
        for (std::size_t k = 0; k < pts.size(); ++k) acc[static_cast<std::size_t>(pts[k])] += gx[k];
    });
}

Tape::Id Tape::dense(const DenseMatrix& m, Id x) {
    check(x);
    const GridFunction& xv = value(x);
    if (m.rows() != xv.spec().active_count() || !m.square()) throw ContractError("Tape::dense: size mismatch");
    GridFunction y = GridFunction::from_active(xv.spec_ptr(), m.multiply(xv.active_values()));
    return push(std::move(y), [&m, x](Tape& t, const std::vector<double>& gy) {
        const SpecPtr& spec = t.value(x).spec_ptr();
        const auto& pts = spec->active_points();
        auto& acc = t.grad_mut(x);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double g = gy[static_cast<std::size_t>(pts[i])];
            if (g == 0.0) continue;
            for (std::size_t j = 0; j < pts.size(); ++j) acc[static_cast<std::size_t>(pts[j])] += m(i, j) * g;
        }
    });
}

Tape::Id Tape::pointwise(const std::vector<double>& w, Id x) {
    check(x);
    GridFunction y = value(x);
    if (w.size() != y.values().size()) throw ContractError("Tape::pointwise: weight size mismatch");
    auto v = y.values_mut();
    for (std::size_t p = 0; p < v.size(); ++p) v[p] *= w[p];
    y.remask();
    return push(std::move(y), [&w, x](Tape& t, const std::vector<double>& gy) {
        auto& acc = t.grad_mut(x);
        const auto& mask = t.value(x).spec().mask();
        for (std::size_t p = 0; p < acc.size(); ++p)
            if (mask[p]) acc[p] += w[p] * gy[p];
    });
}

Tape::Id Tape::add(Id a, Id b) {
    check(a);
    check(b);
    GridFunction y = value(a) + value(b);
    return push(std::move(y), [a, b](Tape& t, const std::vector<double>& gy) {
        auto& ga = t.grad_mut(a);
        for (std::size_t p = 0; p < ga.size(); ++p) ga[p] += gy[p];
        auto& gb = t.grad_mut(b);
        for (std::size_t p = 0; p < gb.size(); ++p) gb[p] += gy[p];
    });
}

Tape::Id Tape::sub(Id a, Id b) {
    check(a);
    check(b);
    GridFunction y = value(a) - value(b);
    return push(std::move(y), [a, b](Tape& t, const std::vector<double>& gy) {
        auto& ga = t.grad_mut(a);
        for (std::size_t p = 0; p < ga.size(); ++p) ga[p] += gy[p];
        auto& gb = t.grad_mut(b);
        for (std::size_t p = 0; p < gb.size(); ++p) gb[p] -= gy[p];
    });
}

Tape::Id Tape::scale(Id x, double s) {
    check(x);
    GridFunction y = s * value(x);
    return push(std::move(y), [x, s](Tape& t, const std::vector<double>& gy) {
        auto& g = t.grad_mut(x);
        for (std::size_t p = 0; p < g.size(); ++p) g[p] += s * gy[p];
    });
}

Tape::Id Tape::leaky_relu(Id x, double slope) {
    check(x);
    GridFunction y = value(x);
    for (double& v : y.values_mut())
        if (v < 0.0) v *= slope;
    return push(std::move(y), [x, slope](Tape& t, const std::vector<double>& gy) {
        const auto xv = t.value(x).values();
        auto& g = t.grad_mut(x);
        for (std::size_t p = 0; p < g.size(); ++p) g[p] += (xv[p] < 0.0 ? slope : 1.0) * gy[p];
    });
}

void Tape::backward(Id x, std::span<const double> seed) {
    check(x);
    for (Node& n : nodes_) n.grad.clear();
    auto& g = grad_mut(x);
    if (seed.size() != g.size()) throw ContractError("Tape::backward: seed size mismatch");
    for (std::size_t p = 0; p < g.size(); ++p) g[p] = seed[p];
    for (Id id = x; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.back || n.grad.empty()) continue;
        // Copy: the callback may grow other nodes' gradients but never this one.
        const std::vector<double> gy = n.grad;
        n.back(*this, gy);
    }
}

double Tape::backward_norm(Id x, double weight) {
    check(x);
    const auto v = value(x).values();
    double s = 0.0;
    for (double e : v) s += e * e;
    const double norm = std::sqrt(s);
    std::vector<double> seed(v.size(), 0.0);
    if (norm > 0.0)
        for (std::size_t p = 0; p < v.size(); ++p) seed[p] = weight * v[p] / norm;
    backward(x, seed);
    return norm;
}

} // namespace nmg
