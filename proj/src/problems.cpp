#include "nmg/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nmg/errors.hpp"

namespace nmg {

const char* to_string(Family f) noexcept { return f == Family::RotatedLaplacian ? "rotated" : "variable"; }

const char* to_string(Geometry g) noexcept {
    switch (g) {
    case Geometry::Square: return "square";
    case Geometry::LShape: return "lshape";
    case Geometry::Cylinder: return "cylinder";
    }
    return "?";
}

Family family_from_string(const std::string& s) {
    if (s == "rotated" || s == "rotated-laplacian") return Family::RotatedLaplacian;
    if (s == "variable" || s == "variable-diffusion") return Family::VariableDiffusion;
    throw ConfigError("unknown problem family '" + s + "'");
}

Geometry geometry_from_string(const std::string& s) {
    if (s == "square") return Geometry::Square;
    if (s == "lshape" || s == "l-shape") return Geometry::LShape;
    if (s == "cylinder") return Geometry::Cylinder;
    throw ConfigError("unknown geometry '" + s + "'");
}

void ProblemSpec::validate() const {
    if (n < 3) throw ContractError("ProblemSpec: n must be >= 3");
    if (family == Family::RotatedLaplacian) {
        if (!(xi > 0.0)) throw ContractError("ProblemSpec: xi must be positive");
        if (!(theta >= 0.0 && theta < std::numbers::pi)) throw ContractError("ProblemSpec: theta must lie in [0, pi)");
    } else if (!(kappa >= 0.0)) {
        throw ContractError("ProblemSpec: kappa must be >= 0");
    }
    if (geometry != Geometry::Square && n < 8) throw ContractError("ProblemSpec: non-square geometries need n >= 8");
}

std::string ProblemSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(family) << " n=" << n << " geometry=" << to_string(geometry);
    if (family == Family::RotatedLaplacian)
        os << " theta=" << theta << " xi=" << xi;
    else
        os << " kappa=" << kappa << " offset=" << offset;
    return os.str();
}

SpecPtr build_geometry(Geometry kind, int n) {
    if (n < 1) throw ContractError("build_geometry: n must be >= 1");
    if (kind != Geometry::Square && n < 8) throw ContractError("build_geometry: non-square geometries need n >= 8");
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 1);
    const int half = (n + 1) / 2;
    const double c = (n - 1) / 2.0;
    const int radius = n / 4;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            bool removed = false;
            if (kind == Geometry::LShape) removed = i >= n - half && j >= n - half;
            if (kind == Geometry::Cylinder) removed = (i - c) * (i - c) + (j - c) * (j - c) <= radius * radius;
            if (removed) mask[static_cast<std::size_t>(i * n + j)] = 0;
        }
    return std::make_shared<const GridSpec>(n, n, 1.0 / (n + 1), std::move(mask));
}

ConvKernel rotated_laplacian_stencil(double theta, double xi, double h) {
    const double cs = std::cos(theta);
    const double sn = std::sin(theta);
    const double a = cs * cs + xi * sn * sn;
    const double c = sn * sn + xi * cs * cs;
    const double b = cs * sn * (1.0 - xi);
    const double ih2 = 1.0 / (h * h);
    ConvKernel k(3);
    k.at(0, 0) = 2.0 * a * ih2 + 2.0 * c * ih2;
    k.at(0, -1) = k.at(0, 1) = -a * ih2;
    k.at(-1, 0) = k.at(1, 0) = -c * ih2;
    // u_xy ~ [u(+y,+x) + u(-y,-x) - u(+y) - u(-y) - u(+x) - u(-x) + 2 u] / (2 h^2)
    const double m = -2.0 * b * 0.5 * ih2;
    k.at(1, 1) += m;
    k.at(-1, -1) += m;
    k.at(1, 0) -= m;
    k.at(-1, 0) -= m;
    k.at(0, 1) -= m;
    k.at(0, -1) -= m;
    k.at(0, 0) += 2.0 * m;
    return k;
}

StencilField assemble_rotated_laplacian(const ProblemSpec& spec, const SpecPtr& grid) {
    if (spec.family != Family::RotatedLaplacian) throw ContractError("assemble_rotated_laplacian: wrong family");
    spec.validate();
    return StencilField::constant(grid, rotated_laplacian_stencil(spec.theta, spec.xi, grid->spacing()));
}

StencilField assemble_rotated_laplacian(const ProblemSpec& spec) {
    return assemble_rotated_laplacian(spec, build_geometry(spec.geometry, spec.n));
}

StencilField assemble_variable_diffusion(const ProblemSpec& spec, const SpecPtr& grid) {
    if (spec.family != Family::VariableDiffusion) throw ContractError("assemble_variable_diffusion: wrong family");
    spec.validate();
    const double h = grid->spacing();
    const double pi = std::numbers::pi;
    auto g = [&](double x, double y) {
        const double v = std::sin(spec.kappa * pi * x * y) + spec.offset;
        if (!(v > 0.0)) throw NumericError("assemble_variable_diffusion: non-positive coefficient sample");
        return v;
    };
    StencilField field(grid, 1);
    const double ih2 = 1.0 / (h * h);
    for (std::int32_t p : grid->active_points()) {
        const int i = p / grid->cols();
        const int j = p % grid->cols();
        const double x = (j + 1) * h;
        const double y = (i + 1) * h;
        const double g1 = g(x - 0.5 * h, y + 0.5 * h);  // top-left cell
        const double g2 = g(x + 0.5 * h, y + 0.5 * h);  // top-right
        const double g3 = g(x - 0.5 * h, y - 0.5 * h);  // bottom-left
        const double g4 = g(x + 0.5 * h, y - 0.5 * h);  // bottom-right
        const auto fp = static_cast<std::size_t>(p);
        field.at(fp, 1, -1) = -g1 * ih2 / 3.0;
        field.at(fp, 1, 1) = -g2 * ih2 / 3.0;
        field.at(fp, -1, -1) = -g3 * ih2 / 3.0;
        field.at(fp, -1, 1) = -g4 * ih2 / 3.0;
        field.at(fp, 1, 0) = -(g1 + g2) * ih2 / 6.0;
        field.at(fp, 0, 1) = -(g2 + g4) * ih2 / 6.0;
        field.at(fp, -1, 0) = -(g3 + g4) * ih2 / 6.0;
        field.at(fp, 0, -1) = -(g1 + g3) * ih2 / 6.0;
        field.at(fp, 0, 0) = 2.0 * (g1 + g2 + g3 + g4) * ih2 / 3.0;
    }
    return field;
}

StencilField assemble_variable_diffusion(const ProblemSpec& spec) {
    return assemble_variable_diffusion(spec, build_geometry(spec.geometry, spec.n));
}

StencilField assemble(const ProblemSpec& spec) {
    return spec.family == Family::RotatedLaplacian ? assemble_rotated_laplacian(spec) : assemble_variable_diffusion(spec);
}

namespace {
GridFunction unit_normal(const SpecPtr& spec, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(spec->active_count());
    double s = 0.0;
    for (double& x : v) {
        x = normal(rng);
        s += x * x;
    }
    s = std::sqrt(s);
    for (double& x : v) x /= s;
    return GridFunction::from_active(spec, v);
}
} // namespace

GridFunction random_unit_field(const SpecPtr& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return unit_normal(spec, rng);
}

std::vector<TrainingSample> make_dataset(const StencilField& a, int q, std::uint64_t seed) {
    if (q < 1) throw ContractError("make_dataset: Q must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<TrainingSample> out;
    out.reserve(static_cast<std::size_t>(q));
    for (int k = 0; k < q; ++k) {
        TrainingSample s;
        s.u_star = unit_normal(a.spec_ptr(), rng);
        s.u0 = unit_normal(a.spec_ptr(), rng);
        s.f = apply_stencil(a, s.u_star);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace nmg
