#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace nmg {

/// Masked 2-D lattice. Points are stored row-major (flat = i * cols + j);
/// row index i runs along y, column index j along x.
class GridSpec {
public:
    GridSpec(int rows, int cols, double spacing, std::vector<std::uint8_t> mask);

    static std::shared_ptr<const GridSpec> full(int rows, int cols, double spacing);
    static std::shared_ptr<const GridSpec> square(int n) { return full(n, n, 1.0 / (n + 1)); }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return mask_.size(); }
    std::size_t active_count() const noexcept { return active_.size(); }

    bool active(int i, int j) const noexcept {
        return i >= 0 && j >= 0 && i < rows_ && j < cols_ && mask_[flat(i, j)] != 0;
    }
    bool active(std::size_t flat_index) const noexcept { return mask_[flat_index] != 0; }
    std::size_t flat(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j);
    }

    const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
    /// Flat indices of active points in row-major order.
    const std::vector<std::int32_t>& active_points() const noexcept { return active_; }
    /// Position of a flat index in active_points(), or -1 for inactive points.
    std::int32_t active_index(std::size_t flat_index) const noexcept { return active_index_[flat_index]; }

    bool same_layout(const GridSpec& other) const noexcept;

private:
    int rows_;
    int cols_;
    double spacing_;
    std::vector<std::uint8_t> mask_;
    std::vector<std::int32_t> active_;
    std::vector<std::int32_t> active_index_;
};

using SpecPtr = std::shared_ptr<const GridSpec>;

void require_same_spec(const GridSpec& a, const GridSpec& b, const char* where);

/// Scalar field on a GridSpec. Values at inactive points are kept at zero.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(SpecPtr spec);
    GridFunction(SpecPtr spec, std::vector<double> values);

    static GridFunction from_active(SpecPtr spec, std::span<const double> active_values);

    const GridSpec& spec() const noexcept { return *spec_; }
    const SpecPtr& spec_ptr() const noexcept { return spec_; }
    bool empty() const noexcept { return !spec_; }

    std::span<const double> values() const noexcept { return values_; }
    /// Raw storage. Writers must leave inactive entries at zero (see remask()).
    std::span<double> values_mut() noexcept { return values_; }
    const double* data() const noexcept { return values_.data(); }
    double* data() noexcept { return values_.data(); }

    double operator()(int i, int j) const noexcept { return values_[spec_->flat(i, j)]; }
    void set(int i, int j, double v);

    std::vector<double> active_values() const;
    void remask() noexcept;
    bool all_finite() const noexcept;

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double s) noexcept;
    void axpy(double a, const GridFunction& x);

private:
    SpecPtr spec_;
    std::vector<double> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

double dot(const GridFunction& a, const GridFunction& b);
double norm2(const GridFunction& a);

/// Odd-sized square convolution kernel; weight(di, dj) for di, dj in [-radius, radius].
class ConvKernel {
public:
    ConvKernel() : ConvKernel(1) {}
    explicit ConvKernel(int size);
    ConvKernel(int size, std::vector<double> weights);

    static ConvKernel delta(int size, double value = 1.0);

    int size() const noexcept { return size_; }
    int radius() const noexcept { return size_ / 2; }
    double& at(int di, int dj) noexcept { return weights_[index(di, dj)]; }
    double at(int di, int dj) const noexcept { return weights_[index(di, dj)]; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<double> weights_mut() noexcept { return weights_; }

    /// Zero-pads to a larger odd size, keeping the centre.
    ConvKernel padded(int new_size) const;

private:
    std::size_t index(int di, int dj) const noexcept {
        const int r = size_ / 2;
        return static_cast<std::size_t>((di + r) * size_ + (dj + r));
    }
    int size_;
    std::vector<double> weights_;
};

/// Per-point stencil of odd width 2*radius+1 (3x3 unless produced by red-black Galerkin products).
class StencilField {
public:
    StencilField(SpecPtr spec, int radius);

    const GridSpec& spec() const noexcept { return *spec_; }
    const SpecPtr& spec_ptr() const noexcept { return spec_; }
    int radius() const noexcept { return radius_; }
    int width() const noexcept { return 2 * radius_ + 1; }
    std::size_t points_per_stencil() const noexcept { return static_cast<std::size_t>(width() * width()); }

    std::span<const double> stencil(std::size_t flat) const noexcept {
        return {weights_.data() + flat * points_per_stencil(), points_per_stencil()};
    }
    std::span<double> stencil_mut(std::size_t flat) noexcept {
        return {weights_.data() + flat * points_per_stencil(), points_per_stencil()};
    }
    double& at(std::size_t flat, int di, int dj) noexcept { return weights_[offset(flat, di, dj)]; }
    double at(std::size_t flat, int di, int dj) const noexcept { return weights_[offset(flat, di, dj)]; }
    double center(std::size_t flat) const noexcept { return at(flat, 0, 0); }

    std::span<const double> raw() const noexcept { return weights_; }

    /// Same stencil at every active point.
    static StencilField constant(SpecPtr spec, const ConvKernel& stencil);

    /// Diagonal entries in active-point order.
    std::vector<double> diagonal() const;
    /// Smallest radius that still holds every nonzero entry.
    StencilField trimmed() const;

private:
    std::size_t offset(std::size_t flat, int di, int dj) const noexcept {
        return flat * points_per_stencil() + static_cast<std::size_t>((di + radius_) * width() + (dj + radius_));
    }
    SpecPtr spec_;
    int radius_;
    std::vector<double> weights_;
};

GridFunction apply_stencil(const StencilField& field, const GridFunction& u);
GridFunction apply_stencil_transpose(const StencilField& field, const GridFunction& u);
GridFunction convolve(const ConvKernel& kernel, const GridFunction& u);
GridFunction convolve_transpose(const ConvKernel& kernel, const GridFunction& u);

/// Kernel such that convolve(result, u) == convolve(outer, convolve(inner, u)) away from the boundary.
ConvKernel compose_kernels(const ConvKernel& outer, const ConvKernel& inner);

} // namespace nmg
