#include "nmg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nmg/errors.hpp"
#include "nmg/kernels.hpp"

namespace nmg {

GridSpec::GridSpec(int rows, int cols, double spacing, std::vector<std::uint8_t> mask)
    : rows_(rows), cols_(cols), spacing_(spacing), mask_(std::move(mask)) {
    if (rows < 1 || cols < 1) throw ContractError("GridSpec: rows and cols must be >= 1");
    if (!(spacing > 0.0)) throw ContractError("GridSpec: spacing must be positive");
    if (mask_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ContractError("GridSpec: mask must have rows*cols entries");
    active_index_.assign(mask_.size(), -1);
    for (std::size_t p = 0; p < mask_.size(); ++p) {
        if (mask_[p]) {
            mask_[p] = 1;
            active_index_[p] = static_cast<std::int32_t>(active_.size());
            active_.push_back(static_cast<std::int32_t>(p));
        }
    }
    if (active_.empty()) throw ContractError("GridSpec: at least one active point required");
}

std::shared_ptr<const GridSpec> GridSpec::full(int rows, int cols, double spacing) {
    return std::make_shared<const GridSpec>(
        rows, cols, spacing,
        std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(rows, 0)) * static_cast<std::size_t>(std::max(cols, 0)), 1));
}

bool GridSpec::same_layout(const GridSpec& other) const noexcept {
    return this == &other || (rows_ == other.rows_ && cols_ == other.cols_ && mask_ == other.mask_);
}

void require_same_spec(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!a.same_layout(b)) throw ContractError(std::string(where) + ": grid specs differ");
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(SpecPtr spec) : spec_(std::move(spec)) {
    if (!spec_) throw ContractError("GridFunction: null spec");
    values_.assign(spec_->size(), 0.0);
}

GridFunction::GridFunction(SpecPtr spec, std::vector<double> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
    if (!spec_) throw ContractError("GridFunction: null spec");
    if (values_.size() != spec_->size()) throw ContractError("GridFunction: value count mismatch");
    remask();
}

GridFunction GridFunction::from_active(SpecPtr spec, std::span<const double> active_values) {
    GridFunction g(spec);
    const auto& pts = spec->active_points();
    if (active_values.size() != pts.size()) throw ContractError("GridFunction::from_active: size mismatch");
    for (std::size_t k = 0; k < pts.size(); ++k) g.values_[static_cast<std::size_t>(pts[k])] = active_values[k];
    return g;
}

void GridFunction::set(int i, int j, double v) {
    const std::size_t p = spec_->flat(i, j);
    if (!spec_->active(p)) throw ContractError("GridFunction::set: inactive point");
    values_[p] = v;
}

std::vector<double> GridFunction::active_values() const {
    const auto& pts = spec_->active_points();
    std::vector<double> out(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) out[k] = values_[static_cast<std::size_t>(pts[k])];
    return out;
}

void GridFunction::remask() noexcept {
    const auto& m = spec_->mask();
    for (std::size_t p = 0; p < values_.size(); ++p)
        if (!m[p]) values_[p] = 0.0;
}

bool GridFunction::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_same_spec(*spec_, *other.spec_, "GridFunction::operator+=");
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += other.values_[p];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_same_spec(*spec_, *other.spec_, "GridFunction::operator-=");
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] -= other.values_[p];
    return *this;
}

GridFunction& GridFunction::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

void GridFunction::axpy(double a, const GridFunction& x) {
    require_same_spec(*spec_, *x.spec_, "GridFunction::axpy");
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += a * x.values_[p];
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

double dot(const GridFunction& a, const GridFunction& b) {
    require_same_spec(a.spec(), b.spec(), "dot");
    double acc = 0.0;
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t p = 0; p < va.size(); ++p) acc += va[p] * vb[p];
    return acc;
}

double norm2(const GridFunction& a) { return std::sqrt(dot(a, a)); }

// ---------------------------------------------------------------------------

ConvKernel::ConvKernel(int size) : size_(size) {
    if (size < 1 || size % 2 == 0) throw ContractError("ConvKernel: size must be odd and >= 1");
    weights_.assign(static_cast<std::size_t>(size * size), 0.0);
}

ConvKernel::ConvKernel(int size, std::vector<double> weights) : size_(size), weights_(std::move(weights)) {
    if (size < 1 || size % 2 == 0) throw ContractError("ConvKernel: size must be odd and >= 1");
    if (weights_.size() != static_cast<std::size_t>(size * size)) throw ContractError("ConvKernel: weight count mismatch");
    for (double w : weights_)
        if (!std::isfinite(w)) throw ContractError("ConvKernel: non-finite weight");
}

ConvKernel ConvKernel::delta(int size, double value) {
    ConvKernel k(size);
    k.at(0, 0) = value;
    return k;
}

ConvKernel ConvKernel::padded(int new_size) const {
    if (new_size < size_ || new_size % 2 == 0) throw ContractError("ConvKernel::padded: bad size");
    ConvKernel out(new_size);
    const int r = radius();
    for (int di = -r; di <= r; ++di)
        for (int dj = -r; dj <= r; ++dj) out.at(di, dj) = at(di, dj);
    return out;
}

// ---------------------------------------------------------------------------

StencilField::StencilField(SpecPtr spec, int radius) : spec_(std::move(spec)), radius_(radius) {
    if (!spec_) throw ContractError("StencilField: null spec");
    if (radius < 0) throw ContractError("StencilField: negative radius");
    weights_.assign(spec_->size() * points_per_stencil(), 0.0);
}

StencilField StencilField::constant(SpecPtr spec, const ConvKernel& stencil) {
    StencilField f(spec, stencil.radius());
    const auto w = stencil.weights();
    for (std::int32_t p : spec->active_points()) {
        auto dst = f.stencil_mut(static_cast<std::size_t>(p));
        std::copy(w.begin(), w.end(), dst.begin());
    }
    return f;
}

std::vector<double> StencilField::diagonal() const {
    std::vector<double> d;
    d.reserve(spec_->active_count());
    for (std::int32_t p : spec_->active_points()) d.push_back(center(static_cast<std::size_t>(p)));
    return d;
}

StencilField StencilField::trimmed() const {
    int needed = 0;
    for (std::int32_t p : spec_->active_points()) {
        const auto s = stencil(static_cast<std::size_t>(p));
        for (int di = -radius_; di <= radius_; ++di)
            for (int dj = -radius_; dj <= radius_; ++dj)
                if (s[static_cast<std::size_t>((di + radius_) * width() + dj + radius_)] != 0.0)
                    needed = std::max(needed, std::max(std::abs(di), std::abs(dj)));
    }
    needed = std::max(needed, 1);
    if (needed >= radius_) return *this;
    StencilField out(spec_, needed);
    for (std::int32_t p : spec_->active_points())
        for (int di = -needed; di <= needed; ++di)
            for (int dj = -needed; dj <= needed; ++dj)
                out.at(static_cast<std::size_t>(p), di, dj) = at(static_cast<std::size_t>(p), di, dj);
    return out;
}

// ---------------------------------------------------------------------------

namespace {
kernels::Lattice lattice_of(const GridSpec& s) { return {s.rows(), s.cols(), s.mask().data()}; }
} // namespace

GridFunction apply_stencil(const StencilField& field, const GridFunction& u) {
    require_same_spec(field.spec(), u.spec(), "apply_stencil");
    GridFunction out(u.spec_ptr());
    kernels::omp::apply_per_point(lattice_of(u.spec()), {field.radius(), field.raw().data()}, u.data(), out.data());
    return out;
}

GridFunction apply_stencil_transpose(const StencilField& field, const GridFunction& u) {
    require_same_spec(field.spec(), u.spec(), "apply_stencil_transpose");
    GridFunction out(u.spec_ptr());
    kernels::omp::apply_per_point_transpose(lattice_of(u.spec()), {field.radius(), field.raw().data()}, u.data(),
                                            out.data());
    return out;
}

GridFunction convolve(const ConvKernel& kernel, const GridFunction& u) {
    GridFunction out(u.spec_ptr());
    kernels::omp::convolve(lattice_of(u.spec()), kernel.size(), kernel.weights().data(), u.data(), out.data());
    return out;
}

GridFunction convolve_transpose(const ConvKernel& kernel, const GridFunction& u) {
    GridFunction out(u.spec_ptr());
    kernels::omp::convolve_transpose(lattice_of(u.spec()), kernel.size(), kernel.weights().data(), u.data(),
                                     out.data());
    return out;
}

ConvKernel compose_kernels(const ConvKernel& outer, const ConvKernel& inner) {
    const int size = outer.size() + inner.size() - 1;
    ConvKernel out(size);
    const int ro = outer.radius();
    const int ri = inner.radius();
    for (int ai = -ro; ai <= ro; ++ai)
        for (int aj = -ro; aj <= ro; ++aj) {
            const double wo = outer.at(ai, aj);
            if (wo == 0.0) continue;
            for (int bi = -ri; bi <= ri; ++bi)
                for (int bj = -ri; bj <= ri; ++bj) out.at(ai + bi, aj + bj) += wo * inner.at(bi, bj);
        }
    return out;
}

} // namespace nmg
