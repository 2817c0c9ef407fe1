#include "nmg/training.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <string>

#include "nmg/errors.hpp"
#include "nmg/materialize.hpp"

namespace nmg {

void TrainConfig::validate() const {
    if (q < 1) throw ConfigError("training: q must be >= 1");
    if (b < 1) throw ConfigError("training: b must be >= 1");
    if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("training: learning_rate must be positive");
    if (epochs < 0) throw ConfigError("training: epochs must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0))
        throw ConfigError("training: invalid Adam hyperparameters");
}

AdamState::AdamState(std::size_t n, const TrainConfig& cfg)
    : lr_(cfg.learning_rate), b1_(cfg.beta1), b2_(cfg.beta2), eps_(cfg.epsilon), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ContractError("AdamState::step: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
        v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

void LossRecord::append(const LossRecord& other) {
    epoch_loss.insert(epoch_loss.end(), other.epoch_loss.begin(), other.epoch_loss.end());
    epoch_level.insert(epoch_level.end(), other.epoch_level.begin(), other.epoch_level.end());
    final_eval = other.final_eval;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

// ---------------------------------------------------------------------------

void ConvLevelModel::prepare(std::span<const StencilField* const> ops) {
    bound_.clear();
    for (const StencilField* op : ops) bound_.push_back(std::make_shared<const ConvSmoother>(w_, *op));
}

std::vector<std::vector<double>> ConvLevelModel::make_buffers(int) const {
    std::vector<std::vector<double>> b;
    for (const auto& k : w_.layers) b.emplace_back(k.weights().size(), 0.0);
    if (w_.skip) b.emplace_back(w_.skip->weights().size(), 0.0);
    return b;
}

Tape::Id ConvLevelModel::record(Tape& tape, Tape::Id r, int task, std::vector<std::vector<double>>& buffers) const {
    return bound_.at(static_cast<std::size_t>(task))->record_trainable(tape, r, buffers);
}

void ConvLevelModel::accumulate(int, const std::vector<std::vector<double>>& buffers, std::span<double> grad) const {
    std::size_t off = 0;
    for (const auto& b : buffers)
        for (double v : b) grad[off++] += v;
    if (off != grad.size()) throw ContractError("ConvLevelModel::accumulate: buffer layout mismatch");
}

SmootherPtr ConvLevelModel::smoother(int task) const { return bound_.at(static_cast<std::size_t>(task)); }

void InferenceLevelModel::prepare(std::span<const StencilField* const> ops) {
    features_.clear();
    bound_.clear();
    for (const StencilField* op : ops) {
        features_.push_back(build_feature_map(*op, smoother_scale(*op)));
        bound_.push_back(infer_kernels(net_, *op, jacobi_skip_, omega_));
    }
}

std::vector<std::vector<double>> InferenceLevelModel::make_buffers(int task) const {
    const std::size_t n = bound_.at(static_cast<std::size_t>(task))->spec_ptr()->size() * 9;
    return std::vector<std::vector<double>>(static_cast<std::size_t>(net_.kernels()), std::vector<double>(n, 0.0));
}

Tape::Id InferenceLevelModel::record(Tape& tape, Tape::Id r, int task,
                                     std::vector<std::vector<double>>& buffers) const {
    return bound_.at(static_cast<std::size_t>(task))->record_trainable(tape, r, buffers);
}

void InferenceLevelModel::accumulate(int task, const std::vector<std::vector<double>>& buffers,
                                     std::span<double> grad) const {
    const auto& feat = features_.at(static_cast<std::size_t>(task));
    const auto& pts = bound_.at(static_cast<std::size_t>(task))->spec_ptr()->active_points();
    const int k = net_.kernels();
    const std::size_t np = grad.size();
    // Fixed chunking keeps the summation order independent of the thread count.
    constexpr int kChunks = 16;
    std::vector<double> partial(kChunks * np, 0.0);
    const int n = static_cast<int>(pts.size());
#pragma omp parallel for schedule(static) if (n >= 256)
    for (int c = 0; c < kChunks; ++c) {
        KernelInferenceNet::Workspace ws;
        std::vector<double> out(static_cast<std::size_t>(9 * k)), gout(static_cast<std::size_t>(9 * k));
        double* gp = partial.data() + static_cast<std::size_t>(c) * np;
        for (int t = c * n / kChunks; t < (c + 1) * n / kChunks; ++t) {
            const std::size_t p = static_cast<std::size_t>(pts[static_cast<std::size_t>(t)]);
            bool any = false;
            for (int s = 0; s < k; ++s)
                for (int q = 0; q < 9; ++q) {
                    const double g = buffers[static_cast<std::size_t>(s)][p * 9 + static_cast<std::size_t>(q)];
                    gout[static_cast<std::size_t>(9 * s + q)] = g;
                    any = any || g != 0.0;
                }
            if (!any) continue;
            const double* x = feat.data() + p * kFeatureWidth;
            net_.forward(x, out.data(), ws);
            net_.backward(x, gout.data(), ws, gp);
        }
    }
    for (int c = 0; c < kChunks; ++c)
        for (std::size_t i = 0; i < np; ++i) grad[i] += partial[static_cast<std::size_t>(c) * np + i];
}

SmootherPtr InferenceLevelModel::smoother(int task) const { return bound_.at(static_cast<std::size_t>(task)); }

// ---------------------------------------------------------------------------

namespace {

struct Recorder {
    Tape& tape;
    const TrainingTask& task;
    int level;
    const LevelModel& model;
    int index;
    std::vector<std::vector<double>>& buffers;

    const StencilField& op() const { return task.op ? *task.op : task.hierarchy->level(level).op; }

    Tape::Id smooth(int l, Tape::Id r) const {
        if (l == level) return model.record(tape, r, index, buffers);
        const Level& lv = task.hierarchy->level(l);
        if (!lv.smoother) throw ConfigError("training: level " + std::to_string(l) + " has no trained smoother");
        return lv.smoother->record(tape, r);
    }

    Tape::Id cycle(int l, Tape::Id r) const {
        const MultigridHierarchy& h = *task.hierarchy;
        const StencilField& a = l == level ? op() : h.level(l).op;
        const TransferPair& tp = *h.level(l).transfer;
        const Tape::Id t1 = smooth(l, r);
        const Tape::Id rc = tape.restrict_to_coarse(tp, tape.sub(r, tape.stencil(a, t1)));
        const Tape::Id ec = l + 1 == h.coarsest() ? tape.dense_solve(h.coarse_factorization(), rc) : cycle(l + 1, rc);
        const Tape::Id t = tape.add(t1, tape.prolong_to_fine(tp, ec));
        return tape.add(t, smooth(l, tape.sub(r, tape.stencil(a, t))));
    }

    std::vector<Tape::Id> iterates(const TrainingSample& s, int k, LossMode mode) const {
        if (mode == LossMode::Multigrid) {
            if (!task.hierarchy) throw ContractError("training: multigrid loss needs a hierarchy");
            if (level < 0 || level >= task.hierarchy->coarsest()) throw ContractError("training: level out of range");
        }
        const Tape::Id f = tape.constant(s.f);
        Tape::Id u = tape.constant(s.u0);
        std::vector<Tape::Id> out;
        for (int i = 0; i < k; ++i) {
            const Tape::Id r = tape.sub(f, tape.stencil(op(), u));
            u = tape.add(u, mode == LossMode::Multigrid ? cycle(level, r) : smooth(level, r));
            out.push_back(u);
        }
        return out;
    }
};

std::vector<const StencilField*> task_ops(std::span<const TrainingTask> tasks, int level) {
    std::vector<const StencilField*> ops;
    for (const auto& t : tasks) {
        if (!t.op && !t.hierarchy) throw ContractError("training: task without operator");
        ops.push_back(t.op ? t.op : &t.hierarchy->level(level).op);
    }
    return ops;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

Tape::Id record_iterate(Tape& tape, const TrainingTask& task, int level, const LevelModel& model, int task_index,
                        std::vector<std::vector<double>>& buffers, const TrainingSample& sample, int k, LossMode mode) {
    if (k < 1) throw ContractError("record_iterate: k must be >= 1");
    const Recorder rec{tape, task, level, model, task_index, buffers};
    return rec.iterates(sample, k, mode).back();
}

double forward_loss(const TrainingTask& task, int level, LevelModel& model, const TrainingSample& sample, int k,
                    LossMode mode, std::vector<double>* grad) {
    const std::span<const TrainingTask> one(&task, 1);
    model.prepare(task_ops(one, level));
    Tape tape;
    auto buffers = model.make_buffers(0);
    const Tape::Id u = record_iterate(tape, task, level, model, 0, buffers, sample, k, mode);
    const Tape::Id e = tape.sub(u, tape.constant(sample.u_star));
    const double loss = tape.backward_norm(e);
    if (grad) {
        grad->assign(model.parameters().size(), 0.0);
        model.accumulate(0, buffers, *grad);
    }
    return loss;
}

double evaluation_loss(std::span<const TrainingTask> tasks, int level, LevelModel& model, int b, LossMode mode) {
    model.prepare(task_ops(tasks, level));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (const auto& s : tasks[t].data) {
            Tape tape;
            auto buffers = model.make_buffers(static_cast<int>(t));
            const Recorder rec{tape, tasks[t], level, model, static_cast<int>(t), buffers};
            for (Tape::Id u : rec.iterates(s, b, mode)) {
                sum += norm2(tape.value(u) - s.u_star);
                ++count;
            }
        }
    return count ? sum / static_cast<double>(count) : 0.0;
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss, std::span<const double> params,
                           std::span<const double> grad, int max_params, double step, std::uint64_t seed) {
    if (grad.size() != params.size()) throw ContractError("grad_check: size mismatch");
    std::vector<std::size_t> idx(params.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (static_cast<int>(idx.size()) > max_params) {
        std::mt19937_64 rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(max_params));
    }
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    GradCheckResult res;
    std::vector<double> p(params.begin(), params.end());
    for (std::size_t i : idx) {
        const double orig = p[i];
        p[i] = orig + step;
        const double up = loss(p);
        p[i] = orig - step;
        const double dn = loss(p);
        p[i] = orig;
        const double fd = (up - dn) / (2.0 * step);
        const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-3 * gmax, 1e-300});
        res.max_relative_error = std::max(res.max_relative_error, std::abs(fd - grad[i]) / denom);
        ++res.checked;
    }
    return res;
}

LossRecord train_level(std::span<const TrainingTask> tasks, int level, LevelModel& model, const TrainConfig& cfg,
                       LossMode mode) {
    cfg.validate();
    if (tasks.empty()) throw ContractError("train_level: no tasks");
    const auto ops = task_ops(tasks, level);
    LossRecord record;
    record.initial_eval = evaluation_loss(tasks, level, model, cfg.b, mode);
    record.final_eval = record.initial_eval;
    if (cfg.epochs == 0) return record;

    std::vector<std::pair<int, int>> order;  // (task, sample)
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (std::size_t s = 0; s < tasks[t].data.size(); ++s) order.emplace_back(static_cast<int>(t), static_cast<int>(s));
    if (order.empty()) throw ContractError("train_level: empty dataset");

    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(level), 1));
    std::uniform_int_distribution<int> pick_k(1, cfg.b);
    std::vector<double> params = model.parameters();
    AdamState adam(params.size(), cfg);
    model.prepare(ops);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const int nb = static_cast<int>(std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size)));
            std::vector<int> ks(static_cast<std::size_t>(nb));
            for (int& k : ks) k = pick_k(rng);
            std::vector<double> losses(static_cast<std::size_t>(nb), 0.0);
            std::vector<std::vector<std::vector<double>>> bufs(static_cast<std::size_t>(nb));
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nb));
#pragma omp parallel for schedule(static)
            for (int i = 0; i < nb; ++i) {
                const auto [t, s] = order[start + static_cast<std::size_t>(i)];
                try {
                    const TrainingTask& task = tasks[static_cast<std::size_t>(t)];
                    const TrainingSample& smp = task.data[static_cast<std::size_t>(s)];
                    auto& b = bufs[static_cast<std::size_t>(i)];
                    b = model.make_buffers(t);
                    Tape tape;
                    const Tape::Id u = record_iterate(tape, task, level, model, t, b, smp, ks[static_cast<std::size_t>(i)], mode);
                    const Tape::Id e = tape.sub(u, tape.constant(smp.u_star));
                    losses[static_cast<std::size_t>(i)] = tape.backward_norm(e, 1.0 / nb);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
            for (const auto& e : errors)
                if (e) std::rethrow_exception(e);
            if (!all_finite(losses)) throw TrainingError("training loss is not finite", epoch);

            // Sum per task in batch order, then map to parameter gradients.
            std::vector<double> grad(params.size(), 0.0);
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                std::vector<std::vector<double>> sum;
                for (int i = 0; i < nb; ++i) {
                    if (order[start + static_cast<std::size_t>(i)].first != static_cast<int>(t)) continue;
                    const auto& b = bufs[static_cast<std::size_t>(i)];
                    if (sum.empty()) {
                        sum = b;
                        continue;
                    }
                    for (std::size_t a = 0; a < b.size(); ++a)
                        for (std::size_t c = 0; c < b[a].size(); ++c) sum[a][c] += b[a][c];
                }
                if (!sum.empty()) model.accumulate(static_cast<int>(t), sum, grad);
            }
            if (!all_finite(grad)) throw TrainingError("training gradient is not finite", epoch);
            adam.step(params, grad);
            if (!all_finite(params)) throw TrainingError("training weights are not finite", epoch);
            model.set_parameters(params);
            model.prepare(ops);
            for (double l : losses) epoch_sum += l;
        }
        record.epoch_loss.push_back(epoch_sum / static_cast<double>(order.size()));
        record.epoch_level.push_back(level);
    }
    record.final_eval = evaluation_loss(tasks, level, model, cfg.b, mode);
    if (!std::isfinite(record.final_eval)) throw TrainingError("evaluation loss is not finite", cfg.epochs);
    return record;
}

// ---------------------------------------------------------------------------

ModelFactory conv_model_factory(ConvArchitecture arch, Activation act, double omega) {
    return [=](int) { return std::make_unique<ConvLevelModel>(ConvSmootherWeights::jacobi_initialized(arch, omega, act)); };
}

ModelFactory inference_model_factory(InferenceVariant variant, int kernels, std::uint64_t seed, bool jacobi_skip) {
    return [=](int level) {
        return std::make_unique<InferenceLevelModel>(
            KernelInferenceNet(variant, kernels, derive_seed(seed, static_cast<std::uint64_t>(level), 5)), jacobi_skip);
    };
}

LossRecord TrainedSolver::combined_losses() const {
    LossRecord out;
    if (losses.empty()) return out;
    out.initial_eval = losses.back().initial_eval;
    for (auto it = losses.rbegin(); it != losses.rend(); ++it) out.append(*it);
    return out;
}

namespace {

std::vector<TrainingTask> level_tasks(const TrainedSolver& s, int l) {
    std::vector<TrainingTask> tasks;
    for (std::size_t t = 0; t < s.hierarchies.size(); ++t)
        tasks.push_back({&s.hierarchies[t], &s.hierarchies[t].level(l).op, s.data[static_cast<std::size_t>(l)][t]});
    return tasks;
}

void install(TrainedSolver& s, int l) {
    std::vector<const StencilField*> ops;
    for (const auto& h : s.hierarchies) ops.push_back(&h.level(l).op);
    auto& m = *s.models[static_cast<std::size_t>(l)];
    m.prepare(ops);
    for (std::size_t t = 0; t < s.hierarchies.size(); ++t) s.hierarchies[t].set_smoother(l, m.smoother(static_cast<int>(t)));
}

} // namespace

TrainedSolver train_adaptive(std::span<const StencilField> ops, int levels, Coarsening scheme, const TrainConfig& cfg,
                             const ModelFactory& factory) {
    cfg.validate();
    if (ops.empty()) throw ContractError("train_adaptive: no operators");
    TrainedSolver s;
    s.config = cfg;
    for (const auto& a : ops) s.hierarchies.push_back(MultigridHierarchy::build(a, levels, scheme));
    const int lc = s.hierarchies.front().coarsest();
    s.models.resize(static_cast<std::size_t>(lc));
    s.losses.resize(static_cast<std::size_t>(lc));
    s.data.resize(static_cast<std::size_t>(lc));
    for (int l = lc - 1; l >= 0; --l) {
        auto& data = s.data[static_cast<std::size_t>(l)];
        for (std::size_t t = 0; t < s.hierarchies.size(); ++t)
            data.push_back(make_dataset(s.hierarchies[t].level(l).op, cfg.q,
                                        derive_seed(cfg.seed, static_cast<std::uint64_t>(l), 100 + t)));
        s.models[static_cast<std::size_t>(l)] = factory(l);
        const auto tasks = level_tasks(s, l);
        s.losses[static_cast<std::size_t>(l)] = train_level(tasks, l, *s.models[static_cast<std::size_t>(l)], cfg);
        install(s, l);
    }
    return s;
}

TrainedSolver train_adaptive(const StencilField& a, int levels, Coarsening scheme, const TrainConfig& cfg,
                             const ModelFactory& factory) {
    return train_adaptive(std::span<const StencilField>(&a, 1), levels, scheme, cfg, factory);
}

std::unique_ptr<LevelModel> train_independent(const StencilField& a, const TrainConfig& cfg,
                                              const ModelFactory& factory, LossRecord* record) {
    auto model = factory(0);
    const TrainingTask task{nullptr, &a, make_dataset(a, cfg.q, derive_seed(cfg.seed, 0, 99))};
    LossRecord rec = train_level(std::span<const TrainingTask>(&task, 1), 0, *model, cfg, LossMode::RelaxationOnly);
    const StencilField* op = &a;
    model->prepare(std::span<const StencilField* const>(&op, 1));
    if (record) *record = std::move(rec);
    return model;
}

std::vector<GridFunction> injected_residuals(const MultigridHierarchy& h, const GridFunction& u0, int k_probe) {
    if (k_probe < 0) throw ContractError("injected_residuals: k_probe must be >= 0");
    const GridFunction zero(u0.spec_ptr());
    GridFunction u = u0;
    for (int k = 0; k < k_probe; ++k) u = v_cycle(h, 0, zero, u);
    std::vector<GridFunction> r;
    r.push_back(-1.0 * apply_stencil(h.level(0).op, u));
    for (int l = 1; l < h.coarsest(); ++l) {
        const TransferPair& tp = *h.level(l - 1).transfer;
        r.push_back(tp.duality_factor() * tp.restrict_to_coarse(r.back()));
    }
    return r;
}

void retrain_with_injection(TrainedSolver& s, const TrainConfig& cfg, int k_probe, int probes) {
    cfg.validate();
    const int lc = s.hierarchies.front().coarsest();
    bool injected = false;
    for (std::size_t t = 0; t < s.hierarchies.size(); ++t) {
        const MultigridHierarchy& h = s.hierarchies[t];
        std::vector<std::unique_ptr<LuFactorization>> lus(static_cast<std::size_t>(lc));
        for (int p = 0; p < probes; ++p) {
            const GridFunction u0 =
                random_unit_field(h.level(0).op.spec_ptr(), derive_seed(cfg.seed, 7, t * 1000 + static_cast<std::size_t>(p)));
            const auto rs = injected_residuals(h, u0, k_probe);
            // An annihilated probe carries no information; normalizing it would inject noise.
            if (norm2(rs.front()) <= 1e-10 * norm2(apply_stencil(h.level(0).op, u0))) continue;
            for (int l = 0; l < lc; ++l) {
                auto& lu = lus[static_cast<std::size_t>(l)];
                if (!lu) lu = std::make_unique<LuFactorization>(materialize(h.level(l).op));
                const GridFunction& r = rs[static_cast<std::size_t>(l)];
                GridFunction u = GridFunction::from_active(r.spec_ptr(), lu->solve(r.active_values()));
                const double nu = norm2(u);
                if (!(nu > 0.0)) continue;
                const double inv = 1.0 / nu;
                s.data[static_cast<std::size_t>(l)][t].push_back({inv * r, GridFunction(r.spec_ptr()), inv * u});
                injected = true;
            }
        }
    }
    if (!injected) return;
    for (int l = lc - 1; l >= 0; --l) {
        const auto tasks = level_tasks(s, l);
        s.losses[static_cast<std::size_t>(l)].append(train_level(tasks, l, *s.models[static_cast<std::size_t>(l)], cfg));
        install(s, l);
    }
}

} // namespace nmg
