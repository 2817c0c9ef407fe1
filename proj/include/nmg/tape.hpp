#pragma once

#include <functional>
#include <vector>

#include "nmg/dense.hpp"
#include "nmg/grid.hpp"
#include "nmg/transfer.hpp"

namespace nmg {

/// Reverse-mode tape over grid values. Nodes are appended in evaluation order,
/// so the reverse of insertion order is a valid topological order.
///
/// Operators and kernels are held by reference and must outlive the tape.
/// Trainable weights are identified by a caller-owned gradient buffer that
/// backward() accumulates into.
class Tape {
public:
    using Id = int;

    Id constant(GridFunction v);
    /// y = convolve(k, x). If kernel_grad is non-null (size k.size()^2) the
    /// kernel is treated as trainable.
    Id convolve(const ConvKernel& k, Id x, std::vector<double>* kernel_grad = nullptr);
    /// y(p) = sum_q W_p(q) x(p+q) with per-point 3x3 weights (flat-point-major).
    Id per_point(const std::vector<double>& weights, Id x, std::vector<double>* weight_grad = nullptr);
    Id stencil(const StencilField& a, Id x);
    Id restrict_to_coarse(const TransferPair& tp, Id x);
    Id prolong_to_fine(const TransferPair& tp, Id x);
    /// Exact solve with a factored matrix over the active points of spec.
    Id dense_solve(const LuFactorization& lu, Id x);
    /// y = M x over active points (same spec in and out).
    Id dense(const DenseMatrix& m, Id x);
    /// y = w .* x with a fixed per-point weight array.
    Id pointwise(const std::vector<double>& w, Id x);
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id scale(Id x, double s);
    Id leaky_relu(Id x, double slope);

    const GridFunction& value(Id x) const { return nodes_.at(static_cast<std::size_t>(x)).value; }
    const std::vector<double>& grad(Id x) const { return nodes_.at(static_cast<std::size_t>(x)).grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Seeds d(loss)/d(value(x)) = seed and propagates to every node and buffer.
    void backward(Id x, std::span<const double> seed);
    /// Loss ||value(x)||_2 scaled by weight; returns the (unscaled) norm.
    double backward_norm(Id x, double weight = 1.0);

private:
    struct Node {
        GridFunction value;
        std::vector<double> grad;
        std::function<void(Tape&, const std::vector<double>&)> back;
    };
    Id push(GridFunction v, std::function<void(Tape&, const std::vector<double>&)> back);
    void check(Id x) const;
    std::vector<double>& grad_mut(Id x);

    std::vector<Node> nodes_;
};

} // namespace nmg
