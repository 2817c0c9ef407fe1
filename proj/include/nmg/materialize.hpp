#pragma once

#include <string>

#include "nmg/dense.hpp"
#include "nmg/errors.hpp"
#include "nmg/grid.hpp"

namespace nmg {

/// Dense matrix of a linear grid operator over active points: column j is
/// op(e_j) for the j-th active unit vector of `in`.
template <class Op>
DenseMatrix materialize(Op&& op, const SpecPtr& in) {
    const std::size_t n_in = in->active_count();
    DenseMatrix m;
    GridFunction e(in);
    for (std::size_t j = 0; j < n_in; ++j) {
        const auto p = static_cast<std::size_t>(in->active_points()[j]);
        e.values_mut()[p] = 1.0;
        const GridFunction y = op(static_cast<const GridFunction&>(e));
        e.values_mut()[p] = 0.0;
        if (!y.all_finite())
            throw NumericError("materialize: non-finite output in column " + std::to_string(j));
        const auto& pts = y.spec().active_points();
        if (j == 0) m = DenseMatrix(pts.size(), n_in);
        if (pts.size() != m.rows()) throw ContractError("materialize: output spec changed between columns");
        for (std::size_t i = 0; i < pts.size(); ++i) m(i, j) = y.values()[static_cast<std::size_t>(pts[i])];
    }
    return m;
}

DenseMatrix materialize(const StencilField& a);

} // namespace nmg
