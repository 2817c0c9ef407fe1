#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "nmg/dense.hpp"
#include "nmg/grid.hpp"
#include "nmg/problems.hpp"

namespace testing {

inline nmg::GridFunction random_field(const nmg::SpecPtr& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    nmg::GridFunction g(s);
    for (std::int32_t p : s->active_points()) g.values_mut()[static_cast<std::size_t>(p)] = nd(rng);
    return g;
}

inline nmg::ConvKernel random_kernel(int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    nmg::ConvKernel k(size);
    for (double& w : k.weights_mut()) w = nd(rng);
    return k;
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return a.size() == b.size() ? m : INFINITY;
}

inline double max_diff(const nmg::GridFunction& a, const nmg::GridFunction& b) { return max_diff(a.values(), b.values()); }

inline double max_diff(const nmg::DenseMatrix& a, const nmg::DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    return max_diff(a.data(), b.data());
}

inline double rel_diff(const nmg::GridFunction& a, const nmg::GridFunction& b) {
    double s = 0.0;
    for (double v : b.values()) s = std::max(s, std::abs(v));
    return max_diff(a, b) / std::max(s, 1e-300);
}

inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

inline nmg::StencilField rotated(double theta, double xi, int n, nmg::Geometry g = nmg::Geometry::Square) {
    nmg::ProblemSpec p;
    p.theta = theta;
    p.xi = xi;
    p.n = n;
    p.geometry = g;
    return nmg::assemble(p);
}

inline nmg::StencilField variable(double kappa, int n, double offset = 1.1) {
    nmg::ProblemSpec p;
    p.family = nmg::Family::VariableDiffusion;
    p.kappa = kappa;
    p.offset = offset;
    p.n = n;
    return nmg::assemble(p);
}

/// Interior-supported field: zero within `margin` of the boundary.
inline nmg::GridFunction interior_field(const nmg::SpecPtr& s, int margin, std::uint64_t seed) {
    nmg::GridFunction g = random_field(s, seed);
    for (int i = 0; i < s->rows(); ++i)
        for (int j = 0; j < s->cols(); ++j)
            if (i < margin || j < margin || i >= s->rows() - margin || j >= s->cols() - margin)
                g.values_mut()[s->flat(i, j)] = 0.0;
    return g;
}

} // namespace testing
