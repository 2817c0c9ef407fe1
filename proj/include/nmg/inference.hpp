#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmg/grid.hpp"
#include "nmg/smoothers.hpp"

namespace nmg {

enum class InferenceVariant { FullyConnected, Convolutional };

const char* to_string(InferenceVariant v) noexcept;
InferenceVariant inference_variant_from_string(const std::string& s);

inline constexpr int kFeatureWidth = 81;  // nine 3x3 stencils

/// Per point, the nine 3x3 stencils of the point and its neighbours (row-major
/// over (di, dj)), multiplied by `scale`; out-of-domain stencils are zero.
/// Layout: spec.size() x 81, rows of inactive points zero.
std::vector<double> build_feature_map(const StencilField& a, double scale = 1.0);

/// Maps the 81 local stencil values of a point to `kernels` 3x3 kernels.
///  FullyConnected: 81 -> 40 -> 40 -> 40 -> 9k, LeakyReLU between layers.
///  Convolutional: three layers on the nine 3x3 stencil images; output channel o
///  of a layer convolves the sum of the input channels with its own 3x3 kernel
///  (7, 5, 3 channels), followed by a dense 27 -> 9k layer.
/// No biases. The last layer starts at zero.
class KernelInferenceNet {
public:
    KernelInferenceNet(InferenceVariant variant, int kernels, std::uint64_t seed, double slope = kDefaultLeakySlope);

    InferenceVariant variant() const noexcept { return variant_; }
    int kernels() const noexcept { return kernels_; }
    double slope() const noexcept { return slope_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }
    const std::vector<double>& parameters() const noexcept { return params_; }
    void set_parameters(std::span<const double> p);

    struct Workspace {
        std::vector<double> act;  // pre-activations of every hidden layer, concatenated
    };
    /// out has 9 * kernels() entries.
    void forward(const double* features, double* out, Workspace& ws) const;
    /// Accumulates d(out)/d(params)^T gout into gparams (uses ws from forward()).
    void backward(const double* features, const double* gout, const Workspace& ws, double* gparams) const;

private:
    InferenceVariant variant_;
    int kernels_;
    double slope_;
    std::vector<double> params_;
};

/// Per-point kernel stacks for one operator. apply: x_1 = W_1 . r, x_s = W_s . a(x_{s-1}),
/// result = scale * x_k + skip .* r.
class InferredSmoother final : public Smoother {
public:
    InferredSmoother(SpecPtr spec, std::vector<std::vector<double>> kernels, double scale, std::vector<double> skip,
                     double slope);

    GridFunction apply(const GridFunction& r) const override;
    bool is_linear() const noexcept override { return kernels_.size() <= 1; }
    std::string tag() const override { return "inferred"; }
    const SpecPtr& spec_ptr() const noexcept override { return spec_; }
    Tape::Id record(Tape& tape, Tape::Id r) const override;

    /// Records with gradient buffers for every kernel stage (each spec.size() * 9).
    Tape::Id record_trainable(Tape& tape, Tape::Id r, std::vector<std::vector<double>>& grads) const;

    const std::vector<std::vector<double>>& kernels() const noexcept { return kernels_; }
    double scale() const noexcept { return scale_; }

private:
    Tape::Id record_impl(Tape& tape, Tape::Id r, std::vector<std::vector<double>>* grads) const;
    SpecPtr spec_;
    std::vector<std::vector<double>> kernels_;
    double scale_;
    std::vector<double> skip_;
    double slope_;
};

/// Runs the net at every active point of A. With jacobi_skip the smoother adds
/// omega / diag(p) * r(p), so a zero net output gives weighted Jacobi.
std::shared_ptr<InferredSmoother> infer_kernels(const KernelInferenceNet& net, const StencilField& a,
                                                bool jacobi_skip = true, double omega = kDefaultOmega);

} // namespace nmg
