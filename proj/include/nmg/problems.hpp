#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmg/grid.hpp"

namespace nmg {

enum class Family { RotatedLaplacian, VariableDiffusion };
enum class Geometry { Square, LShape, Cylinder };

const char* to_string(Family f) noexcept;
const char* to_string(Geometry g) noexcept;
Family family_from_string(const std::string& s);
Geometry geometry_from_string(const std::string& s);

struct ProblemSpec {
    Family family = Family::RotatedLaplacian;
    double theta = 0.0;   // rotated Laplacian: anisotropy angle, counter-clockwise
    double xi = 100.0;    // rotated Laplacian: conductivity ratio
    double kappa = 1.0;   // variable diffusion: g = sin(kappa*pi*x*y) + offset
    double offset = 1.1;
    int n = 16;
    Geometry geometry = Geometry::Square;

    double spacing() const noexcept { return 1.0 / (n + 1); }
    /// Throws ContractError on out-of-range parameters.
    void validate() const;
    std::string describe() const;
};

SpecPtr build_geometry(Geometry kind, int n);

/// -div(T grad u) with T = R(theta) diag(1, xi) R(theta)^T: five-point -u_xx, -u_yy
/// and the seven-point u_xy stencil, all with 1/h^2 scaling.
StencilField assemble_rotated_laplacian(const ProblemSpec& spec);
StencilField assemble_rotated_laplacian(const ProblemSpec& spec, const SpecPtr& grid);

/// Bilinear nine-point stencil of -div(g grad u) with g sampled at cell midpoints.
StencilField assemble_variable_diffusion(const ProblemSpec& spec);
StencilField assemble_variable_diffusion(const ProblemSpec& spec, const SpecPtr& grid);

/// Dispatches on spec.family over build_geometry(spec.geometry, spec.n).
StencilField assemble(const ProblemSpec& spec);

/// Constant 3x3 rotated-Laplacian stencil (weights at (di, dj), di along +y).
ConvKernel rotated_laplacian_stencil(double theta, double xi, double h);

struct TrainingSample {
    GridFunction f;
    GridFunction u0;
    GridFunction u_star;
};

/// u_star and u0 i.i.d. normal on active points, scaled to unit 2-norm; f = A u_star.
std::vector<TrainingSample> make_dataset(const StencilField& a, int q, std::uint64_t seed);

/// Standard-normal field scaled to unit 2-norm (used by datasets and random right-hand sides).
GridFunction random_unit_field(const SpecPtr& spec, std::uint64_t seed);

} // namespace nmg
