#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nmg/hierarchy.hpp"
#include "nmg/inference.hpp"
#include "nmg/problems.hpp"
#include "nmg/smoothers.hpp"
#include "nmg/tape.hpp"

namespace nmg {

struct TrainConfig {
    int q = 50;                // samples per level
    int b = 4;                 // k ~ U{1..b}
    int batch_size = 10;
    double learning_rate = 1e-3;
    int epochs = 500;
    std::uint64_t seed = 20240601;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

class AdamState {
public:
    AdamState(std::size_t n, const TrainConfig& cfg);
    void step(std::span<double> params, std::span<const double> grad);
    long steps() const noexcept { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

struct LossRecord {
    std::vector<double> epoch_loss;  // mean training loss per epoch
    std::vector<int> epoch_level;    // stage (level) of each entry
    double initial_eval = 0.0;       // deterministic evaluation loss before training
    double final_eval = 0.0;         // and after
    void append(const LossRecord& other);
};

enum class LossMode { Multigrid, RelaxationOnly };

/// Parameterized smoother for one level, shared by one or more operators (tasks).
class LevelModel {
public:
    virtual ~LevelModel() = default;
    virtual std::vector<double> parameters() const = 0;
    virtual void set_parameters(std::span<const double> p) = 0;
    /// Rebuilds per-task smoothers from the current parameters.
    virtual void prepare(std::span<const StencilField* const> ops) = 0;
    /// One gradient buffer per trainable array of a task's smoother.
    virtual std::vector<std::vector<double>> make_buffers(int task) const = 0;
    virtual Tape::Id record(Tape& tape, Tape::Id r, int task, std::vector<std::vector<double>>& buffers) const = 0;
    /// grad += d(loss)/d(params) given buffers summed over a task's samples.
    virtual void accumulate(int task, const std::vector<std::vector<double>>& buffers, std::span<double> grad) const = 0;
    /// Smoother for task t with the current parameters (valid after prepare()).
    virtual SmootherPtr smoother(int task) const = 0;
};

/// Conv smoother shared across tasks; each task rescales by its own operator.
class ConvLevelModel final : public LevelModel {
public:
    explicit ConvLevelModel(ConvSmootherWeights init) : w_(std::move(init)) {}
    std::vector<double> parameters() const override { return w_.flatten(); }
    void set_parameters(std::span<const double> p) override { w_.assign(p); }
    void prepare(std::span<const StencilField* const> ops) override;
    std::vector<std::vector<double>> make_buffers(int task) const override;
    Tape::Id record(Tape& tape, Tape::Id r, int task, std::vector<std::vector<double>>& buffers) const override;
    void accumulate(int task, const std::vector<std::vector<double>>& buffers, std::span<double> grad) const override;
    SmootherPtr smoother(int task) const override;
    const ConvSmootherWeights& weights() const noexcept { return w_; }

private:
    ConvSmootherWeights w_;
    std::vector<std::shared_ptr<const ConvSmoother>> bound_;
};

/// Kernel-inference net; per-point kernels are re-inferred on every prepare().
class InferenceLevelModel final : public LevelModel {
public:
    InferenceLevelModel(KernelInferenceNet net, bool jacobi_skip = true, double omega = kDefaultOmega)
        : net_(std::move(net)), jacobi_skip_(jacobi_skip), omega_(omega) {}
    std::vector<double> parameters() const override { return net_.parameters(); }
    void set_parameters(std::span<const double> p) override { net_.set_parameters(p); }
    void prepare(std::span<const StencilField* const> ops) override;
    std::vector<std::vector<double>> make_buffers(int task) const override;
    Tape::Id record(Tape& tape, Tape::Id r, int task, std::vector<std::vector<double>>& buffers) const override;
    void accumulate(int task, const std::vector<std::vector<double>>& buffers, std::span<double> grad) const override;
    SmootherPtr smoother(int task) const override;
    const KernelInferenceNet& net() const noexcept { return net_; }

private:
    KernelInferenceNet net_;
    bool jacobi_skip_;
    double omega_;
    std::vector<std::vector<double>> features_;
    std::vector<std::shared_ptr<const InferredSmoother>> bound_;
};

/// One operator plus its training samples at the level being trained.
struct TrainingTask {
    const MultigridHierarchy* hierarchy = nullptr;  // levels l+1.. must carry frozen smoothers
    const StencilField* op = nullptr;               // level-l operator (defaults to hierarchy level l)
    std::vector<TrainingSample> data;
};

/// Phi_k(u0, f) recorded on the tape with the model's smoother at level l.
/// Multigrid: u <- u + V-cycle correction of f - A u; RelaxationOnly: u <- u + H(f - A u).
Tape::Id record_iterate(Tape& tape, const TrainingTask& task, int level, const LevelModel& model, int task_index,
                        std::vector<std::vector<double>>& buffers, const TrainingSample& sample, int k, LossMode mode);

/// ||Phi_k - u*||_2 for one sample; gradient added to grad (sized like parameters()).
double forward_loss(const TrainingTask& task, int level, LevelModel& model, const TrainingSample& sample, int k,
                    LossMode mode, std::vector<double>* grad = nullptr);

/// Mean over samples and k = 1..b of ||Phi_k - u*||.
double evaluation_loss(std::span<const TrainingTask> tasks, int level, LevelModel& model, int b, LossMode mode);

struct GradCheckResult {
    double max_relative_error = 0.0;
    int checked = 0;
};

/// Central differences with the given step on at most max_params random coordinates.
/// Relative error per coordinate, measured against at least 1e-3 * max|grad| so that
/// near-zero entries are not judged by roundoff alone.
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss, std::span<const double> params,
                           std::span<const double> grad, int max_params = 200, double step = 1e-5,
                           std::uint64_t seed = 3);

/// Adam on the mean sample loss; parameters of the model are updated in place.
LossRecord train_level(std::span<const TrainingTask> tasks, int level, LevelModel& model, const TrainConfig& cfg,
                       LossMode mode = LossMode::Multigrid);

using ModelFactory = std::function<std::unique_ptr<LevelModel>(int level)>;
ModelFactory conv_model_factory(ConvArchitecture arch, Activation act = Activation::Linear,
                                double omega = kDefaultOmega);
ModelFactory inference_model_factory(InferenceVariant variant, int kernels, std::uint64_t seed,
                                     bool jacobi_skip = true);

/// Hierarchies (one per operator) that share one trained model per level.
struct TrainedSolver {
    std::vector<MultigridHierarchy> hierarchies;
    std::vector<std::unique_ptr<LevelModel>> models;           // per level 0..L-1
    std::vector<std::vector<std::vector<TrainingSample>>> data; // [level][task]
    std::vector<LossRecord> losses;                             // per level
    TrainConfig config;

    int levels() const noexcept { return hierarchies.front().size(); }
    LossRecord combined_losses() const;
};

/// Adaptive coarse-to-fine training: levels L-1 .. 0, each with coarser levels frozen.
/// Several operators train one shared smoother per level (mixture training).
TrainedSolver train_adaptive(std::span<const StencilField> ops, int levels, Coarsening scheme, const TrainConfig& cfg,
                             const ModelFactory& factory);
TrainedSolver train_adaptive(const StencilField& a, int levels, Coarsening scheme, const TrainConfig& cfg,
                             const ModelFactory& factory);

/// Single-level training with the relaxation-only loss (no coarse-grid term).
std::unique_ptr<LevelModel> train_independent(const StencilField& a, const TrainConfig& cfg,
                                              const ModelFactory& factory, LossRecord* record = nullptr);

/// Residual chain of the probe: r^(0) = -A u_k with u_k = Phi^(0)(u0, f = 0, k_probe),
/// r^(l) = P^T r^(l-1).
std::vector<GridFunction> injected_residuals(const MultigridHierarchy& h, const GridFunction& u0, int k_probe);

/// Adds injected samples (f = r^(l), u* = A^-1 r^(l), u0 = 0, unit ||u*||) to every
/// level and retrains levels L-1 .. 0 from the current weights.
void retrain_with_injection(TrainedSolver& solver, const TrainConfig& cfg, int k_probe, int probes = 10);

/// Seeds per level and task are derived from cfg.seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

} // namespace nmg
