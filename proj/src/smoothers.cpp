#include "nmg/smoothers.hpp"

#include <algorithm>
#include <cmath>

#include "nmg/errors.hpp"
#include "nmg/materialize.hpp"

namespace nmg {

Tape::Id Smoother::record(Tape&, Tape::Id) const {
    throw UnsupportedOperation("smoother '" + tag() + "' cannot be recorded on a tape");
}

// ---------------------------------------------------------------------------

JacobiSmoother::JacobiSmoother(const StencilField& a, double omega) : spec_(a.spec_ptr()), omega_(omega) {
    if (!(omega > 0.0 && omega < 2.0)) throw ContractError("JacobiSmoother: omega must lie in (0, 2)");
    weight_.assign(spec_->size(), 0.0);
    for (std::int32_t p : spec_->active_points()) {
        const double d = a.center(static_cast<std::size_t>(p));
        if (d == 0.0) throw NumericError("JacobiSmoother: zero diagonal entry");
        weight_[static_cast<std::size_t>(p)] = omega / d;
    }
}

GridFunction JacobiSmoother::apply(const GridFunction& r) const {
    require_same_spec(*spec_, r.spec(), "JacobiSmoother::apply");
    GridFunction out = r;
    auto v = out.values_mut();
    for (std::size_t p = 0; p < v.size(); ++p) v[p] *= weight_[p];
    return out;
}

Tape::Id JacobiSmoother::record(Tape& tape, Tape::Id r) const { return tape.pointwise(weight_, r); }

// ---------------------------------------------------------------------------

GaussSeidelSmoother::GaussSeidelSmoother(const StencilField& a) : a_(a) {
    for (std::int32_t p : a_.spec().active_points())
        if (a_.center(static_cast<std::size_t>(p)) == 0.0) throw NumericError("GaussSeidelSmoother: zero diagonal entry");
}

GridFunction GaussSeidelSmoother::apply(const GridFunction& r) const {
    const GridSpec& s = a_.spec();
    require_same_spec(s, r.spec(), "GaussSeidelSmoother::apply");
    GridFunction x(r.spec_ptr());
    auto xv = x.values_mut();
    const int rad = a_.radius();
    // Lexicographic order: every neighbour with a smaller flat index is already updated.
    for (std::int32_t p32 : s.active_points()) {
        const auto p = static_cast<std::size_t>(p32);
        const int i = p32 / s.cols();
        const int j = p32 % s.cols();
        double acc = r.values()[p];
        for (int di = -rad; di <= 0; ++di)
            for (int dj = -rad; dj <= rad; ++dj) {
                if (di == 0 && dj >= 0) break;
                if (!s.active(i + di, j + dj)) continue;
                acc -= a_.at(p, di, dj) * xv[s.flat(i + di, j + dj)];
            }
        xv[p] = acc / a_.center(p);
    }
    return x;
}

// ---------------------------------------------------------------------------

DenseSmoother::DenseSmoother(SpecPtr spec, DenseMatrix h, std::string tag)
    : spec_(std::move(spec)), h_(std::move(h)), tag_(std::move(tag)) {
    if (h_.rows() != spec_->active_count() || !h_.square()) throw ContractError("DenseSmoother: size mismatch");
}

std::shared_ptr<DenseSmoother> DenseSmoother::exact_inverse(const StencilField& a) {
    return std::make_shared<DenseSmoother>(a.spec_ptr(), LuFactorization(materialize(a)).inverse(), "exact");
}

GridFunction DenseSmoother::apply(const GridFunction& r) const {
    require_same_spec(*spec_, r.spec(), "DenseSmoother::apply");
    return GridFunction::from_active(r.spec_ptr(), h_.multiply(r.active_values()));
}

Tape::Id DenseSmoother::record(Tape& tape, Tape::Id r) const { return tape.dense(h_, r); }

Tape::Id ZeroSmoother::record(Tape& tape, Tape::Id r) const { return tape.scale(r, 0.0); }

// ---------------------------------------------------------------------------

RepeatedSmoother::RepeatedSmoother(SmootherPtr inner, const StencilField& a, int steps)
    : inner_(std::move(inner)), a_(a), steps_(steps) {
    if (!inner_) throw ContractError("RepeatedSmoother: null inner smoother");
    if (steps < 1) throw ContractError("RepeatedSmoother: steps must be >= 1");
}

GridFunction RepeatedSmoother::apply(const GridFunction& r) const {
    GridFunction x = inner_->apply(r);
    for (int s = 1; s < steps_; ++s) x += inner_->apply(r - apply_stencil(a_, x));
    return x;
}

Tape::Id RepeatedSmoother::record(Tape& tape, Tape::Id r) const {
    Tape::Id x = inner_->record(tape, r);
    for (int s = 1; s < steps_; ++s) x = tape.add(x, inner_->record(tape, tape.sub(r, tape.stencil(a_, x))));
    return x;
}

// ---------------------------------------------------------------------------

const char* to_string(Activation a) noexcept { return a == Activation::Linear ? "linear" : "leaky_relu"; }
const char* to_string(ConvArchitecture a) noexcept {
    return a == ConvArchitecture::FullCoarsening ? "conv-full" : "conv-redblack";
}

Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "leaky_relu" || s == "leaky-relu" || s == "leakyrelu") return Activation::LeakyRelu;
    throw ConfigError("unknown activation '" + s + "'");
}

ConvArchitecture architecture_from_string(const std::string& s) {
    if (s == "conv-full" || s == "full") return ConvArchitecture::FullCoarsening;
    if (s == "conv-redblack" || s == "redblack") return ConvArchitecture::RedBlack;
    throw ConfigError("unknown smoother architecture '" + s + "'");
}

ConvSmootherWeights ConvSmootherWeights::jacobi_initialized(ConvArchitecture arch, double omega, Activation act) {
    ConvSmootherWeights w;
    w.architecture = arch;
    w.activation = act;
    if (arch == ConvArchitecture::FullCoarsening) {
        for (int k = 0; k < 4; ++k) w.layers.push_back(ConvKernel::delta(3));
        w.layers.emplace_back(3);
        w.skip = ConvKernel::delta(3, omega);
    } else {
        const double s = std::sqrt(omega);
        w.layers.push_back(ConvKernel::delta(3, s));
        w.layers.push_back(ConvKernel::delta(3, s));
    }
    return w;
}

std::size_t ConvSmootherWeights::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& k : layers) n += k.weights().size();
    if (skip) n += skip->weights().size();
    return n;
}

std::vector<double> ConvSmootherWeights::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& k : layers) out.insert(out.end(), k.weights().begin(), k.weights().end());
    if (skip) out.insert(out.end(), skip->weights().begin(), skip->weights().end());
    return out;
}

void ConvSmootherWeights::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ContractError("ConvSmootherWeights::assign: size mismatch");
    std::size_t off = 0;
    auto fill = [&](ConvKernel& k) {
        auto w = k.weights_mut();
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + w.size()), w.begin());
        off += w.size();
    };
    for (auto& k : layers) fill(k);
    if (skip) fill(*skip);
}

double smoother_scale(const StencilField& a) {
    auto d = a.diagonal();
    if (d.empty()) throw ContractError("smoother_scale: no active points");
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    if (*mid == 0.0) throw NumericError("smoother_scale: zero median diagonal");
    return 1.0 / *mid;
}

ConvSmoother::ConvSmoother(ConvSmootherWeights w, const StencilField& a)
    : ConvSmoother(std::move(w), a.spec_ptr(), smoother_scale(a)) {}

ConvSmoother::ConvSmoother(ConvSmootherWeights w, SpecPtr spec, double scale)
    : w_(std::move(w)), spec_(std::move(spec)), scale_(scale) {
    if (w_.layers.empty()) throw ContractError("ConvSmoother: at least one layer required");
    if (!std::isfinite(scale_)) throw ContractError("ConvSmoother: non-finite scale");
}

GridFunction ConvSmoother::apply(const GridFunction& r) const {
    require_same_spec(*spec_, r.spec(), "ConvSmoother::apply");
    GridFunction x = convolve(w_.layers.front(), r);
    for (std::size_t k = 1; k < w_.layers.size(); ++k) {
        if (w_.activation == Activation::LeakyRelu)
            for (double& v : x.values_mut())
                if (v < 0.0) v *= w_.slope;
        x = convolve(w_.layers[k], x);
    }
    if (w_.skip) x += convolve(*w_.skip, r);
    x *= scale_;
    return x;
}

Tape::Id ConvSmoother::record_impl(Tape& tape, Tape::Id r, std::vector<std::vector<double>>* grads) const {
    auto g = [&](std::size_t k) { return grads ? &(*grads)[k] : nullptr; };
    Tape::Id x = tape.convolve(w_.layers.front(), r, g(0));
    for (std::size_t k = 1; k < w_.layers.size(); ++k) {
        if (w_.activation == Activation::LeakyRelu) x = tape.leaky_relu(x, w_.slope);
        x = tape.convolve(w_.layers[k], x, g(k));
    }
    if (w_.skip) x = tape.add(x, tape.convolve(*w_.skip, r, g(w_.layers.size())));
    return tape.scale(x, scale_);
}

Tape::Id ConvSmoother::record(Tape& tape, Tape::Id r) const { return record_impl(tape, r, nullptr); }

Tape::Id ConvSmoother::record_trainable(Tape& tape, Tape::Id r, std::vector<std::vector<double>>& grads) const {
    const std::size_t kernels = w_.layers.size() + (w_.skip ? 1 : 0);
    if (grads.size() != kernels) throw ContractError("ConvSmoother::record_trainable: one buffer per kernel required");
    for (std::size_t k = 0; k < w_.layers.size(); ++k)
        if (grads[k].size() != w_.layers[k].weights().size()) throw ContractError("ConvSmoother: buffer size mismatch");
    return record_impl(tape, r, &grads);
}

ConvKernel effective_kernel(const ConvSmootherWeights& w, double scale) {
    if (w.activation != Activation::Linear && w.layers.size() > 1)
        throw UnsupportedOperation("effective_kernel: nonlinear smoother has no single equivalent kernel");
    ConvKernel k = w.layers.front();
    for (std::size_t i = 1; i < w.layers.size(); ++i) k = compose_kernels(w.layers[i], k);
    if (w.skip) {
        const int size = std::max(k.size(), w.skip->size());
        ConvKernel a = k.padded(size);
        const ConvKernel b = w.skip->padded(size);
        for (std::size_t t = 0; t < a.weights().size(); ++t) a.weights_mut()[t] += b.weights()[t];
        k = a;
    }
    for (double& v : k.weights_mut()) v *= scale;
    return k;
}

ConvKernel effective_kernel(const ConvSmoother& s) { return effective_kernel(s.weights(), s.scale()); }

} // namespace nmg
