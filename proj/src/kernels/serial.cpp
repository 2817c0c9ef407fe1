#include "nmg/kernels.hpp"

#include <cstddef>
#include <vector>

namespace nmg::kernels::serial {

#define NMG_PARALLEL_FOR
#include "kernel_body.inc"
#undef NMG_PARALLEL_FOR

} // namespace nmg::kernels::serial
