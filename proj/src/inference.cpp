#include "nmg/inference.hpp"

#include <cmath>
#include <random>

#include "nmg/errors.hpp"

namespace nmg {

const char* to_string(InferenceVariant v) noexcept {
    return v == InferenceVariant::FullyConnected ? "fc" : "conv";
}

InferenceVariant inference_variant_from_string(const std::string& s) {
    if (s == "fc" || s == "fully-connected") return InferenceVariant::FullyConnected;
    if (s == "conv" || s == "convolutional") return InferenceVariant::Convolutional;
    throw ConfigError("unknown inference network variant '" + s + "' (expected fc or conv)");
}

std::vector<double> build_feature_map(const StencilField& a_in, double scale) {
    const StencilField a = a_in.radius() > 1 ? a_in.trimmed() : a_in;
    if (a.radius() != 1) throw ContractError("build_feature_map: operator must have 3x3 stencils");
    const GridSpec& g = a.spec();
    std::vector<double> feat(g.size() * kFeatureWidth, 0.0);
    for (std::int32_t pf : g.active_points()) {
        const std::size_t p = static_cast<std::size_t>(pf);
        const int i = static_cast<int>(p) / g.cols();
        const int j = static_cast<int>(p) % g.cols();
        double* out = feat.data() + p * kFeatureWidth;
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj) {
                if (!g.active(i + di, j + dj)) continue;
                const auto s = a.stencil(g.flat(i + di, j + dj));
                double* block = out + ((di + 1) * 3 + (dj + 1)) * 9;
                for (int t = 0; t < 9; ++t) block[t] = scale * s[static_cast<std::size_t>(t)];
            }
    }
    return feat;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kHidden = 40;
constexpr int kConvChannels[3] = {7, 5, 3};

inline double leaky(double z, double slope) { return z > 0.0 ? z : slope * z; }
inline double leaky_d(double z, double slope) { return z > 0.0 ? 1.0 : slope; }

// z(i,j) = sum_{a,b} k(a,b) s(i+a, j+b) on a zero-padded 3x3 image.
void conv3(const double* k, const double* s, double* z) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int a = -1; a <= 1; ++a)
                for (int b = -1; b <= 1; ++b) {
                    const int ii = i + a, jj = j + b;
                    if (ii < 0 || ii > 2 || jj < 0 || jj > 2) continue;
                    acc += k[(a + 1) * 3 + (b + 1)] * s[ii * 3 + jj];
                }
            z[i * 3 + j] = acc;
        }
}

void conv3_back(const double* k, const double* s, const double* gz, double* gk, double* gs) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double g = gz[i * 3 + j];
            if (g == 0.0) continue;
            for (int a = -1; a <= 1; ++a)
                for (int b = -1; b <= 1; ++b) {
                    const int ii = i + a, jj = j + b;
                    if (ii < 0 || ii > 2 || jj < 0 || jj > 2) continue;
                    gk[(a + 1) * 3 + (b + 1)] += g * s[ii * 3 + jj];
                    gs[ii * 3 + jj] += g * k[(a + 1) * 3 + (b + 1)];
                }
        }
}

struct FcLayout {
    int out;
    std::size_t w1, w2, w3, w4, total;
    explicit FcLayout(int kernels) : out(9 * kernels) {
        w1 = 0;
        w2 = w1 + static_cast<std::size_t>(kHidden * kFeatureWidth);
        w3 = w2 + static_cast<std::size_t>(kHidden * kHidden);
        w4 = w3 + static_cast<std::size_t>(kHidden * kHidden);
        total = w4 + static_cast<std::size_t>(out * kHidden);
    }
};

struct ConvLayout {
    int out;
    std::size_t k[3], dense, total;
    explicit ConvLayout(int kernels) : out(9 * kernels) {
        k[0] = 0;
        k[1] = k[0] + static_cast<std::size_t>(9 * kConvChannels[0]);
        k[2] = k[1] + static_cast<std::size_t>(9 * kConvChannels[1]);
        dense = k[2] + static_cast<std::size_t>(9 * kConvChannels[2]);
        total = dense + static_cast<std::size_t>(out * 9 * kConvChannels[2]);
    }
};

// y = W x, W rows x cols.
void matvec(const double* w, int rows, int cols, const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* wr = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
        for (int c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] = acc;
    }
}

// gW += gy x^T; gx = W^T gy (if gx non-null).
void matvec_back(const double* w, int rows, int cols, const double* x, const double* gy, double* gw, double* gx) {
    if (gx)
        for (int c = 0; c < cols; ++c) gx[c] = 0.0;
    for (int r = 0; r < rows; ++r) {
        const double g = gy[r];
        if (g == 0.0) continue;
        const std::size_t off = static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
        for (int c = 0; c < cols; ++c) {
            gw[off + static_cast<std::size_t>(c)] += g * x[c];
            if (gx) gx[c] += g * w[off + static_cast<std::size_t>(c)];
        }
    }
}

} // namespace

KernelInferenceNet::KernelInferenceNet(InferenceVariant variant, int kernels, std::uint64_t seed, double slope)
    : variant_(variant), kernels_(kernels), slope_(slope) {
    if (kernels < 1) throw ConfigError("KernelInferenceNet: at least one output kernel required");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](std::size_t from, std::size_t count, int fan_in) {
        const double sd = std::sqrt(2.0 / fan_in);
        for (std::size_t t = 0; t < count; ++t) params_[from + t] = sd * normal(rng);
    };
    if (variant == InferenceVariant::FullyConnected) {
        const FcLayout L(kernels);
        params_.assign(L.total, 0.0);
        fill(L.w1, L.w2 - L.w1, kFeatureWidth);
        fill(L.w2, L.w3 - L.w2, kHidden);
        fill(L.w3, L.w4 - L.w3, kHidden);
    } else {
        const ConvLayout L(kernels);
        params_.assign(L.total, 0.0);
        // each output channel sees 3x3 taps of every input channel
        fill(L.k[0], L.k[1] - L.k[0], 9 * 9);
        fill(L.k[1], L.k[2] - L.k[1], 9 * 7);
        fill(L.k[2], L.dense - L.k[2], 9 * 5);
    }
}

void KernelInferenceNet::set_parameters(std::span<const double> p) {
    if (p.size() != params_.size()) throw ContractError("KernelInferenceNet::set_parameters: size mismatch");
    for (double v : p)
        if (!std::isfinite(v)) throw NumericError("KernelInferenceNet::set_parameters: non-finite parameter");
    params_.assign(p.begin(), p.end());
}

void KernelInferenceNet::forward(const double* x, double* out, Workspace& ws) const {
    const double* P = params_.data();
    if (variant_ == InferenceVariant::FullyConnected) {
        const FcLayout L(kernels_);
        ws.act.assign(3 * kHidden, 0.0);
        double a[kHidden];
        double* z1 = ws.act.data();
        double* z2 = z1 + kHidden;
        double* z3 = z2 + kHidden;
        matvec(P + L.w1, kHidden, kFeatureWidth, x, z1);
        for (int t = 0; t < kHidden; ++t) a[t] = leaky(z1[t], slope_);
        matvec(P + L.w2, kHidden, kHidden, a, z2);
        for (int t = 0; t < kHidden; ++t) a[t] = leaky(z2[t], slope_);
        matvec(P + L.w3, kHidden, kHidden, a, z3);
        for (int t = 0; t < kHidden; ++t) a[t] = leaky(z3[t], slope_);
        matvec(P + L.w4, L.out, kHidden, a, out);
        return;
    }
    const ConvLayout L(kernels_);
    ws.act.assign(9 * (kConvChannels[0] + kConvChannels[1] + kConvChannels[2]), 0.0);
    double s[9] = {};
    for (int c = 0; c < 9; ++c)
        for (int t = 0; t < 9; ++t) s[t] += x[c * 9 + t];
    double* z = ws.act.data();
    double a[27];
    for (int layer = 0; layer < 3; ++layer) {
        const int ch = kConvChannels[layer];
        for (int o = 0; o < ch; ++o) conv3(P + L.k[layer] + 9 * o, s, z + 9 * o);
        for (int t = 0; t < 9; ++t) s[t] = 0.0;
        for (int o = 0; o < ch; ++o)
            for (int t = 0; t < 9; ++t) {
                const double v = leaky(z[9 * o + t], slope_);
                s[t] += v;
                if (layer == 2) a[9 * o + t] = v;
            }
        z += 9 * ch;
    }
    matvec(P + L.dense, L.out, 27, a, out);
}

void KernelInferenceNet::backward(const double* x, const double* gout, const Workspace& ws, double* gp) const {
    const double* P = params_.data();
    if (variant_ == InferenceVariant::FullyConnected) {
        const FcLayout L(kernels_);
        const double* z1 = ws.act.data();
        const double* z2 = z1 + kHidden;
        const double* z3 = z2 + kHidden;
        double a1[kHidden], a2[kHidden], a3[kHidden], g[kHidden], gz[kHidden];
        for (int t = 0; t < kHidden; ++t) {
            a1[t] = leaky(z1[t], slope_);
            a2[t] = leaky(z2[t], slope_);
            a3[t] = leaky(z3[t], slope_);
        }
        matvec_back(P + L.w4, L.out, kHidden, a3, gout, gp + L.w4, g);
        for (int t = 0; t < kHidden; ++t) gz[t] = g[t] * leaky_d(z3[t], slope_);
        matvec_back(P + L.w3, kHidden, kHidden, a2, gz, gp + L.w3, g);
        for (int t = 0; t < kHidden; ++t) gz[t] = g[t] * leaky_d(z2[t], slope_);
        matvec_back(P + L.w2, kHidden, kHidden, a1, gz, gp + L.w2, g);
        for (int t = 0; t < kHidden; ++t) gz[t] = g[t] * leaky_d(z1[t], slope_);
        matvec_back(P + L.w1, kHidden, kFeatureWidth, x, gz, gp + L.w1, nullptr);
        return;
    }
    const ConvLayout L(kernels_);
    // Rebuild the summed inputs of every layer.
    const double* z[3];
    z[0] = ws.act.data();
    z[1] = z[0] + 9 * kConvChannels[0];
    z[2] = z[1] + 9 * kConvChannels[1];
    double s[3][9] = {};
    for (int c = 0; c < 9; ++c)
        for (int t = 0; t < 9; ++t) s[0][t] += x[c * 9 + t];
    for (int layer = 1; layer < 3; ++layer)
        for (int o = 0; o < kConvChannels[layer - 1]; ++o)
            for (int t = 0; t < 9; ++t) s[layer][t] += leaky(z[layer - 1][9 * o + t], slope_);
    double a3[27];
    for (int t = 0; t < 27; ++t) a3[t] = leaky(z[2][t], slope_);
    double ga[9 * 7];
    matvec_back(P + L.dense, L.out, 27, a3, gout, gp + L.dense, ga);
    // ga holds d/d(activation) of the current layer, per channel.
    for (int layer = 2; layer >= 0; --layer) {
        const int ch = kConvChannels[layer];
        double gs[9] = {};
        for (int o = 0; o < ch; ++o) {
            double gz[9];
            for (int t = 0; t < 9; ++t) gz[t] = ga[9 * o + t] * leaky_d(z[layer][9 * o + t], slope_);
            conv3_back(P + L.k[layer] + 9 * o, s[layer], gz, gp + L.k[layer] + 9 * o, gs);
        }
        if (layer == 0) break;
        // s[layer] is the sum of the previous layer's activations.
        for (int o = 0; o < kConvChannels[layer - 1]; ++o)
            for (int t = 0; t < 9; ++t) ga[9 * o + t] = gs[t];
    }
}

// ---------------------------------------------------------------------------

InferredSmoother::InferredSmoother(SpecPtr spec, std::vector<std::vector<double>> kernels, double scale,
                                   std::vector<double> skip, double slope)
    : spec_(std::move(spec)), kernels_(std::move(kernels)), scale_(scale), skip_(std::move(skip)), slope_(slope) {
    if (!spec_) throw ContractError("InferredSmoother: null spec");
    if (kernels_.empty()) throw ContractError("InferredSmoother: at least one kernel stage required");
    for (const auto& k : kernels_)
        if (k.size() != spec_->size() * 9) throw ContractError("InferredSmoother: kernel array size mismatch");
    if (!skip_.empty() && skip_.size() != spec_->size()) throw ContractError("InferredSmoother: skip size mismatch");
}

GridFunction InferredSmoother::apply(const GridFunction& r) const {
    Tape tape;
    const Tape::Id out = record(tape, tape.constant(r));
    return tape.value(out);
}

Tape::Id InferredSmoother::record_impl(Tape& tape, Tape::Id r, std::vector<std::vector<double>>* grads) const {
    auto g = [&](std::size_t k) { return grads ? &(*grads)[k] : nullptr; };
    Tape::Id x = tape.per_point(kernels_.front(), r, g(0));
    for (std::size_t k = 1; k < kernels_.size(); ++k) x = tape.per_point(kernels_[k], tape.leaky_relu(x, slope_), g(k));
    x = tape.scale(x, scale_);
    if (!skip_.empty()) x = tape.add(x, tape.pointwise(skip_, r));
    return x;
}

Tape::Id InferredSmoother::record(Tape& tape, Tape::Id r) const { return record_impl(tape, r, nullptr); }

Tape::Id InferredSmoother::record_trainable(Tape& tape, Tape::Id r, std::vector<std::vector<double>>& grads) const {
    if (grads.size() != kernels_.size()) throw ContractError("InferredSmoother::record_trainable: one buffer per stage");
    return record_impl(tape, r, &grads);
}

std::shared_ptr<InferredSmoother> infer_kernels(const KernelInferenceNet& net, const StencilField& a, bool jacobi_skip,
                                                double omega) {
    const double s = smoother_scale(a);
    const std::vector<double> feat = build_feature_map(a, s);
    const GridSpec& g = a.spec();
    const int k = net.kernels();
    std::vector<std::vector<double>> kernels(static_cast<std::size_t>(k), std::vector<double>(g.size() * 9, 0.0));
    const auto& pts = g.active_points();
    const int n = static_cast<int>(pts.size());
#pragma omp parallel for schedule(static) if (n >= 256)
    for (int t = 0; t < n; ++t) {
        const std::size_t p = static_cast<std::size_t>(pts[static_cast<std::size_t>(t)]);
        KernelInferenceNet::Workspace ws;
        std::vector<double> out(static_cast<std::size_t>(9 * k));
        net.forward(feat.data() + p * kFeatureWidth, out.data(), ws);
        for (int st = 0; st < k; ++st)
            for (int q = 0; q < 9; ++q)
                kernels[static_cast<std::size_t>(st)][p * 9 + static_cast<std::size_t>(q)] =
                    out[static_cast<std::size_t>(9 * st + q)];
    }
    std::vector<double> skip;
    if (jacobi_skip) {
        skip.assign(g.size(), 0.0);
        for (std::int32_t p : pts) skip[static_cast<std::size_t>(p)] = omega / a.center(static_cast<std::size_t>(p));
    }
    return std::make_shared<InferredSmoother>(a.spec_ptr(), std::move(kernels), s, std::move(skip), net.slope());
}

} // namespace nmg
