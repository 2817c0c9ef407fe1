#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmg/dense.hpp"
#include "nmg/grid.hpp"
#include "nmg/tape.hpp"

namespace nmg {

/// A smoother maps a residual r to a correction H(r), approximating M^{-1} r.
class Smoother {
public:
    virtual ~Smoother() = default;
    virtual GridFunction apply(const GridFunction& r) const = 0;
    virtual bool is_linear() const noexcept { return true; }
    virtual std::string tag() const = 0;
    virtual const SpecPtr& spec_ptr() const noexcept = 0;
    /// Records apply() on a tape with every weight frozen. The smoother must
    /// outlive the tape.
    virtual Tape::Id record(Tape& tape, Tape::Id r) const;
};

using SmootherPtr = std::shared_ptr<const Smoother>;

inline constexpr double kDefaultOmega = 2.0 / 3.0;
inline constexpr double kDefaultLeakySlope = 0.01;

/// H = omega D^{-1}.
class JacobiSmoother final : public Smoother {
public:
    explicit JacobiSmoother(const StencilField& a, double omega = kDefaultOmega);
    GridFunction apply(const GridFunction& r) const override;
    std::string tag() const override { return "jacobi"; }
    const SpecPtr& spec_ptr() const noexcept override { return spec_; }
    Tape::Id record(Tape& tape, Tape::Id r) const override;
    double omega() const noexcept { return omega_; }

private:
    SpecPtr spec_;
    double omega_;
    std::vector<double> weight_;  // omega / diag, zero at inactive points
};

/// H = (D - L)^{-1}: one forward lexicographic sweep from a zero guess.
class GaussSeidelSmoother final : public Smoother {
public:
    explicit GaussSeidelSmoother(const StencilField& a);
    GridFunction apply(const GridFunction& r) const override;
    std::string tag() const override { return "gauss-seidel"; }
    const SpecPtr& spec_ptr() const noexcept override { return a_.spec_ptr(); }

private:
    StencilField a_;
};

/// H given as a dense matrix over active points (analysis and tests).
class DenseSmoother final : public Smoother {
public:
    DenseSmoother(SpecPtr spec, DenseMatrix h, std::string tag = "dense");
    /// H = A^{-1} of the materialized operator.
    static std::shared_ptr<DenseSmoother> exact_inverse(const StencilField& a);
    GridFunction apply(const GridFunction& r) const override;
    std::string tag() const override { return tag_; }
    const SpecPtr& spec_ptr() const noexcept override { return spec_; }
    Tape::Id record(Tape& tape, Tape::Id r) const override;

private:
    SpecPtr spec_;
    DenseMatrix h_;
    std::string tag_;
};

/// H = 0.
class ZeroSmoother final : public Smoother {
public:
    explicit ZeroSmoother(SpecPtr spec) : spec_(std::move(spec)) {}
    GridFunction apply(const GridFunction& r) const override { return GridFunction(r.spec_ptr()); }
    std::string tag() const override { return "zero"; }
    const SpecPtr& spec_ptr() const noexcept override { return spec_; }
    Tape::Id record(Tape& tape, Tape::Id r) const override;

private:
    SpecPtr spec_;
};

/// m steps of an inner smoother from a zero guess: x <- x + H(r - A x).
class RepeatedSmoother final : public Smoother {
public:
    RepeatedSmoother(SmootherPtr inner, const StencilField& a, int steps);
    GridFunction apply(const GridFunction& r) const override;
    bool is_linear() const noexcept override { return inner_->is_linear(); }
    std::string tag() const override { return inner_->tag() + "x" + std::to_string(steps_); }
    const SpecPtr& spec_ptr() const noexcept override { return inner_->spec_ptr(); }
    Tape::Id record(Tape& tape, Tape::Id r) const override;

private:
    SmootherPtr inner_;
    StencilField a_;
    int steps_;
};

enum class Activation { Linear, LeakyRelu };
enum class ConvArchitecture { FullCoarsening, RedBlack };

const char* to_string(Activation a) noexcept;
const char* to_string(ConvArchitecture a) noexcept;
Activation activation_from_string(const std::string& s);
ConvArchitecture architecture_from_string(const std::string& s);

/// Weights of a convolutional smoother, independent of any operator.
struct ConvSmootherWeights {
    ConvArchitecture architecture = ConvArchitecture::FullCoarsening;
    Activation activation = Activation::Linear;
    double slope = kDefaultLeakySlope;
    std::vector<ConvKernel> layers;   // applied first to last
    std::optional<ConvKernel> skip;   // full-coarsening form only

    /// Standard layouts: five 3x3 layers + 3x3 skip, or two 3x3 layers.
    /// The chain starts as identity kernels with a zero last layer and the
    /// skip (or the layer product) equals omega * delta, so H == Jacobi.
    static ConvSmootherWeights jacobi_initialized(ConvArchitecture arch, double omega = kDefaultOmega,
                                                  Activation act = Activation::Linear);
    std::size_t parameter_count() const noexcept;
    /// Flat copy of every weight (layers in order, then skip).
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
};

/// H(r) = s * (phi_J * a(... a(phi_1 * r)) + phi_skip * r) with s = 1 / median(diag A),
/// so weights are dimensionless and transfer across grid sizes.
class ConvSmoother final : public Smoother {
public:
    ConvSmoother(ConvSmootherWeights w, const StencilField& a);
    ConvSmoother(ConvSmootherWeights w, SpecPtr spec, double scale);

    GridFunction apply(const GridFunction& r) const override;
    bool is_linear() const noexcept override { return w_.activation == Activation::Linear; }
    std::string tag() const override { return "conv"; }
    const SpecPtr& spec_ptr() const noexcept override { return spec_; }
    Tape::Id record(Tape& tape, Tape::Id r) const override;

    /// Records with trainable weights; grads[k] matches kernel k of layers then skip.
    Tape::Id record_trainable(Tape& tape, Tape::Id r, std::vector<std::vector<double>>& grads) const;

    const ConvSmootherWeights& weights() const noexcept { return w_; }
    double scale() const noexcept { return scale_; }
    /// Same weights, scale recomputed for another operator.
    ConvSmoother bind(const StencilField& a) const { return ConvSmoother(w_, a); }

private:
    Tape::Id record_impl(Tape& tape, Tape::Id r, std::vector<std::vector<double>>* grads) const;
    ConvSmootherWeights w_;
    SpecPtr spec_;
    double scale_;
};

/// 1 / median of the diagonal over active points.
double smoother_scale(const StencilField& a);

/// Single kernel equivalent to a linear ConvSmoother away from the boundary
/// (includes the scale). Throws UnsupportedOperation for nonlinear activations.
ConvKernel effective_kernel(const ConvSmoother& s);
ConvKernel effective_kernel(const ConvSmootherWeights& w, double scale = 1.0);

} // namespace nmg
