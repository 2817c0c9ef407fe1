#pragma once

// Data-parallel inner loops. Every kernel exists twice: a serial reference and
// an OpenMP version. Each output point is computed by exactly one iteration
// with a fixed summation order, so both versions agree bitwise.

#include <cstdint>

namespace nmg::kernels {

struct Lattice {
    int rows;
    int cols;
    const std::uint8_t* mask;
};

/// Per-point weights of width (2*radius+1), one block per grid point.
struct PerPointWeights {
    int radius;
    const double* w;
};

/// Sparse gather table: out[p] = sum_{k in [start[p], start[p+1])} weight[k] * in[index[k]].
struct GatherTable {
    int n_out;
    const std::int32_t* start;
    const std::int32_t* index;
    const double* weight;
};

namespace serial {
// y(p) = sum_q W_p(q) x(p+q); y masked.
void apply_per_point(Lattice g, PerPointWeights w, const double* x, double* y);
// y(p) = sum_q W_{p-q}(q) x(p-q); y masked.
void apply_per_point_transpose(Lattice g, PerPointWeights w, const double* x, double* y);
// gW_p(q) += gy(p) x(p+q), active p only.
void per_point_weight_grad(Lattice g, int radius, const double* x, const double* gy, double* gw);

// Cross-correlation with one shared kernel of size k (odd).
void convolve(Lattice g, int k, const double* kernel, const double* x, double* y);
void convolve_transpose(Lattice g, int k, const double* kernel, const double* x, double* y);
// gk(q) += sum_p gy(p) x(p+q); row partial sums combined in row order.
void kernel_grad(Lattice g, int k, const double* x, const double* gy, double* gk);

void gather(GatherTable t, const double* in, double* out);
} // namespace serial

namespace omp {
void apply_per_point(Lattice g, PerPointWeights w, const double* x, double* y);
void apply_per_point_transpose(Lattice g, PerPointWeights w, const double* x, double* y);
void per_point_weight_grad(Lattice g, int radius, const double* x, const double* gy, double* gw);
void convolve(Lattice g, int k, const double* kernel, const double* x, double* y);
void convolve_transpose(Lattice g, int k, const double* kernel, const double* x, double* y);
void kernel_grad(Lattice g, int k, const double* x, const double* gy, double* gk);
void gather(GatherTable t, const double* in, double* out);
} // namespace omp

/// Grids smaller than this stay on one thread in the OpenMP versions.
inline constexpr int kParallelThreshold = 4096;

} // namespace nmg::kernels
