#include "nmg/kernels.hpp"

#include <cstddef>
#include <vector>

namespace nmg::kernels::omp {

#ifdef _OPENMP
#define NMG_PARALLEL_FOR _Pragma("omp parallel for schedule(static) if (g.rows * g.cols >= kParallelThreshold)")
#else
#define NMG_PARALLEL_FOR
#endif

#include "kernel_body.inc"
#undef NMG_PARALLEL_FOR

} // namespace nmg::kernels::omp
