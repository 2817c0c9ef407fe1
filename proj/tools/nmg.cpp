// Command-line front end: train, solve, analyze, bench.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmg/analysis.hpp"
#include "nmg/config.hpp"
#include "nmg/errors.hpp"
#include "nmg/experiments.hpp"
#include "nmg/model_io.hpp"
#include "nmg/training.hpp"

using namespace nmg;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNumeric = 2, kNotConverged = 3 };

const ConfigMap kProblemDefaults = {
    {"family", "rotated"}, {"theta", "0"}, {"xi", "100"},  {"kappa", "1"},          {"offset", "1.1"},
    {"n", "16"},           {"geometry", "square"},        {"scheme", "full"},       {"seed", "20240601"},
};

const std::map<std::string, ConfigMap> kDefaults = {
    {"train",
     {{"levels", "2"}, {"arch", "auto"}, {"activation", "linear"}, {"variant", "fc"}, {"kernels", "1"},
      {"epochs", "500"}, {"q", "50"}, {"b", "4"}, {"batch", "10"}, {"lr", "0.001"}, {"strategy", "adaptive"},
      {"inject", "0"}, {"probes", "10"}, {"mixture", ""}, {"model", "model.json"}, {"loss_csv", "loss.csv"},
      {"manifest", "manifest.json"}}},
    {"solve",
     {{"levels", "5"}, {"smoother", "jacobi"}, {"model", ""}, {"omega", "0.6666666666666666"}, {"steps", "1"},
      {"tol", "1e-6"}, {"max_iter", "500"}, {"krylov", "none"}, {"rhs", "random"}, {"trials", "1"},
      {"csv", "solve.csv"}}},
    {"analyze",
     {{"levels", "2"}, {"smoother", "jacobi"}, {"model", ""}, {"omega", "0.6666666666666666"}, {"steps", "1"},
      {"csv", "analysis.csv"}, {"profile_csv", ""}, {"kernel_json", ""}}},
    {"bench",
     {{"levels", "5"}, {"thetas", "pi/12,pi/6,pi/4,pi/3,5pi/12"}, {"kappas", "0.1,1,10,100"},
      {"smoothers", "jacobi"}, {"ns", "63"}, {"schemes", "full"}, {"matched_cost", "false"},
      {"omega", "0.6666666666666666"}, {"tol", "1e-6"}, {"max_iter", "500"}, {"krylov", "none"},
      {"rhs", "random"}, {"trials", "1"}, {"csv", "bench.csv"}}},
};

struct Command {
    std::string name;
    CLI::App* app = nullptr;
    std::string config_file;
    ConfigMap cli;  // flags given on the command line

    ConfigMap resolve() const {
        ConfigMap cfg = kProblemDefaults;
        for (const auto& [k, v] : kDefaults.at(name)) cfg[k] = v;
        std::set<std::string> allowed;
        for (const auto& kv : cfg) allowed.insert(kv.first);
        if (!config_file.empty())
            for (const auto& [k, v] : read_config_file(config_file, allowed)) cfg[k] = v;
        if (const auto s = seed_from_environment()) cfg["seed"] = std::to_string(*s);
        for (const auto& [k, v] : cli) cfg[k] = v;
        return cfg;
    }
};

void add_options(Command& c) {
    c.app->add_option("--config", c.config_file, "key = value file; flags override it");
    ConfigMap keys = kProblemDefaults;
    for (const auto& kv : kDefaults.at(c.name)) keys.insert(kv);
    for (const auto& [k, def] : keys) {
        std::string flag = "--" + k;
        for (char& ch : flag)
            if (ch == '_') ch = '-';
        c.app->add_option_function<std::string>(flag, [&c, key = k](const std::string& v) { c.cli[key] = v; },
                                                "default: " + (def.empty() ? std::string("(none)") : def));
    }
}

// Typed access with key-path diagnostics.
struct Reader {
    const ConfigMap& cfg;
    const std::string& str(const std::string& k) const { return cfg.at(k); }
    double num(const std::string& k) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(cfg.at(k), &used);
            if (used == cfg.at(k).size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError("key '" + k + "': expected a number, got '" + cfg.at(k) + "'");
    }
    int integer(const std::string& k) const {
        const double v = num(k);
        if (v != static_cast<double>(static_cast<int>(v))) throw ConfigError("key '" + k + "': expected an integer");
        return static_cast<int>(v);
    }
    std::uint64_t seed() const {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(cfg.at("seed"), &used);
            if (used == cfg.at("seed").size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError("key 'seed': expected an unsigned integer");
    }
    bool flag(const std::string& k) const {
        const auto& v = cfg.at(k);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("key '" + k + "': expected true or false");
    }
    double angle(const std::string& k) const {
        try {
            return parse_angle(cfg.at(k));
        } catch (const ConfigError& e) {
            throw ConfigError("key '" + k + "': " + e.what());
        }
    }
    ProblemSpec problem() const {
        ProblemSpec p;
        p.family = family_from_string(str("family"));
        p.theta = angle("theta");
        p.xi = num("xi");
        p.kappa = num("kappa");
        p.offset = num("offset");
        p.n = integer("n");
        p.geometry = geometry_from_string(str("geometry"));
        try {
            p.validate();
        } catch (const ContractError& e) {
            throw ConfigError(e.what());
        }
        return p;
    }
};

std::shared_ptr<const SavedModel> load_shared(const std::string& path) {
    if (path.empty()) throw ConfigError("key 'model': a model file is required for smoother=model");
    return std::make_shared<const SavedModel>(load_model(path));
}

SmootherChoice smoother_choice(const Reader& r, const std::string& kind, const std::string& model_path) {
    SmootherChoice s;
    s.omega = r.num("omega");
    if (r.cfg.count("steps")) s.steps = r.integer("steps");
    if (kind == "jacobi")
        s.kind = SmootherKind::Jacobi;
    else if (kind == "gs" || kind == "gauss-seidel")
        s.kind = SmootherKind::GaussSeidel;
    else if (kind == "model") {
        s.kind = SmootherKind::Model;
        s.model = load_shared(model_path);
    } else
        throw ConfigError("key 'smoother': unknown smoother '" + kind + "' (expected jacobi, gs or model)");
    return s;
}

void write_json(const std::filesystem::path& p, const json& j) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os.precision(17);
    return os;
}

// ---------------------------------------------------------------------------

int cmd_train(const ConfigMap& cfg) {
    const Reader r{cfg};
    const ProblemSpec p = r.problem();
    const Coarsening scheme = coarsening_from_string(r.str("scheme"));
    const int levels = r.integer("levels");
    TrainConfig tc;
    tc.q = r.integer("q");
    tc.b = r.integer("b");
    tc.batch_size = r.integer("batch");
    tc.learning_rate = r.num("lr");
    tc.epochs = r.integer("epochs");
    tc.seed = r.seed();
    tc.validate();

    std::vector<StencilField> ops;
    if (!r.str("mixture").empty()) {
        if (p.family != Family::RotatedLaplacian) throw ConfigError("key 'mixture': only for the rotated family");
        for (const auto& t : split_list(r.str("mixture"))) {
            ProblemSpec q = p;
            q.theta = parse_angle(t);
            q.validate();
            ops.push_back(assemble(q));
        }
    } else {
        ops.push_back(assemble(p));
    }

    ModelFactory factory;
    if (p.family == Family::VariableDiffusion) {
        factory = inference_model_factory(inference_variant_from_string(r.str("variant")), r.integer("kernels"), tc.seed);
    } else {
        const std::string arch = r.str("arch");
        const ConvArchitecture a = arch == "auto" ? (scheme == Coarsening::Full ? ConvArchitecture::FullCoarsening
                                                                                : ConvArchitecture::RedBlack)
                                                  : architecture_from_string(arch);
        factory = conv_model_factory(a, activation_from_string(r.str("activation")));
    }

    const auto t0 = std::chrono::steady_clock::now();
    TrainedSolver solver;
    const std::string strategy = r.str("strategy");
    if (strategy == "adaptive") {
        solver = train_adaptive(ops, levels, scheme, tc, factory);
        if (const int k_probe = r.integer("inject"); k_probe > 0) retrain_with_injection(solver, tc, k_probe, r.integer("probes"));
    } else if (strategy == "independent") {
        if (ops.size() != 1) throw ConfigError("key 'strategy': independent training takes a single problem");
        solver.config = tc;
        solver.hierarchies.push_back(MultigridHierarchy::build(ops.front(), levels, scheme));
        auto& h = solver.hierarchies.front();
        for (int l = 0; l < h.coarsest(); ++l) {
            LossRecord rec;
            solver.models.push_back(train_independent(h.level(l).op, tc, factory, &rec));
            for (int& e : rec.epoch_level) e = l;
            solver.losses.push_back(rec);
        }
    } else {
        throw ConfigError("key 'strategy': expected adaptive or independent");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const SavedModel model = snapshot(solver, p, scheme);
    save_model(model, r.str("model"));
    const std::string hash = config_hash(cfg);
    {
        auto os = open_csv(r.str("loss_csv"));
        os << "config_hash,seed,level,epoch,loss\n";
        for (const auto& rec : solver.losses) {
            for (std::size_t e = 0; e < rec.epoch_loss.size(); ++e)
                os << hash << ',' << tc.seed << ',' << rec.epoch_level[e] << ',' << e << ',' << rec.epoch_loss[e] << '\n';
        }
    }
    json stages = json::array();
    for (std::size_t l = 0; l < solver.losses.size(); ++l)
        stages.push_back({{"level", l},
                          {"initial_eval_loss", solver.losses[l].initial_eval},
                          {"final_eval_loss", solver.losses[l].final_eval},
                          {"epochs_run", solver.losses[l].epoch_loss.size()}});
    json manifest = {{"command", "train"},
                     {"config", cfg},
                     {"config_hash", hash},
                     {"seed", tc.seed},
                     {"model", r.str("model")},
                     {"loss_csv", r.str("loss_csv")},
                     {"parameter_count", model.parameter_count()},
                     {"parameters_per_smoother", model.parameter_count() / static_cast<std::size_t>(model.smoothed_levels())},
                     {"smoothed_levels", model.smoothed_levels()},
                     {"epochs", tc.epochs},
                     {"stages", stages},
                     {"wall_time_s", wall}};
    write_json(r.str("manifest"), manifest);
    std::cout << "trained " << model.smoothed_levels() << " level(s), " << model.parameter_count()
              << " parameters, " << wall << " s -> " << r.str("model") << '\n';
    return kOk;
}

const char* kSolveHeader =
    "config_hash,seed,family,theta,xi,kappa,n,geometry,levels,scheme,smoother,krylov,trial,iterations,"
    "final_residual,converged,wall_time\n";

struct SolveCell {
    ProblemSpec problem;
    int levels;
    Coarsening scheme;
    SmootherChoice smoother;
    KrylovMode krylov;
    std::string rhs;
    int trials;
    double tol;
    int max_iter;
};

struct CellResult {
    std::vector<SolveSummary> trials;
    std::string error;
    int code = kOk;
};

CellResult run_cell(const SolveCell& c, std::uint64_t seed) {
    CellResult out;
    const StencilField a = assemble(c.problem);
    const MultigridHierarchy h = build_solver(a, c.levels, c.scheme, c.smoother);
    for (int t = 0; t < c.trials; ++t) {
        const GridFunction f = make_rhs(a.spec_ptr(), c.rhs, derive_seed(seed, 11, static_cast<std::uint64_t>(t)));
        out.trials.push_back(run_solve(h, f, c.krylov, c.tol, c.max_iter));
    }
    return out;
}

void write_rows(std::ostream& os, const std::string& hash, std::uint64_t seed, const SolveCell& c, const CellResult& r) {
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
        const auto& s = r.trials[t];
        os << hash << ',' << seed << ',' << to_string(c.problem.family) << ',' << c.problem.theta << ',' << c.problem.xi
           << ',' << c.problem.kappa << ',' << c.problem.n << ',' << to_string(c.problem.geometry) << ',' << c.levels << ','
           << to_string(c.scheme) << ',' << c.smoother.tag() << ',' << (c.krylov == KrylovMode::Fgmres ? "fgmres" : "none")
           << ',' << t << ',' << s.iterations << ',' << s.final_residual << ',' << (s.converged ? 1 : 0) << ','
           << s.wall_time << '\n';
    }
}

int cmd_solve(const ConfigMap& cfg) {
    const Reader r{cfg};
    SolveCell c{r.problem(),
                r.integer("levels"),
                coarsening_from_string(r.str("scheme")),
                smoother_choice(r, r.str("smoother"), r.str("model")),
                krylov_mode_from_string(r.str("krylov")),
                r.str("rhs"),
                r.integer("trials"),
                r.num("tol"),
                r.integer("max_iter")};
    if (c.trials < 1) throw ConfigError("key 'trials': must be >= 1");
    const CellResult res = run_cell(c, r.seed());
    auto os = open_csv(r.str("csv"));
    os << kSolveHeader;
    write_rows(os, config_hash(cfg), r.seed(), c, res);
    bool all = true;
    double mean = 0.0;
    for (const auto& s : res.trials) {
        all = all && s.converged;
        mean += s.iterations;
    }
    mean /= static_cast<double>(res.trials.size());
    std::cout << c.smoother.tag() << ": mean iterations " << mean << (all ? "" : " (NOT converged)") << " -> "
              << r.str("csv") << '\n';
    return all ? kOk : kNotConverged;
}

int cmd_analyze(const ConfigMap& cfg) {
    const Reader r{cfg};
    const ProblemSpec p = r.problem();
    const Coarsening scheme = coarsening_from_string(r.str("scheme"));
    const int levels = r.integer("levels");
    const SmootherChoice s = smoother_choice(r, r.str("smoother"), r.str("model"));
    if (p.n > kMaxDenseAnalysisN)
        throw ConfigError("key 'n': dense analysis is limited to N <= " + std::to_string(kMaxDenseAnalysisN));
    const StencilField a = assemble(p);
    const AnalysisSummary sum = analyze_smoother(a, levels, scheme, s);
    std::vector<MetricRow> rows;
    const std::string prob = p.describe();
    rows.push_back({prob, s.tag(), "rho_smoother", sum.rho_smoother});
    rows.push_back({prob, s.tag(), "norm_A", sum.a_norm});
    if (sum.beta_star) rows.push_back({prob, s.tag(), "beta_star", *sum.beta_star});
    if (sum.margin) rows.push_back({prob, s.tag(), "convergence_margin", *sum.margin});
    rows.push_back({prob, s.tag(), "rho_two_grid_cycle", sum.rho_two_grid});
    rows.push_back({prob, s.tag(), "rho_cycle_" + std::to_string(levels) + "_level", sum.rho_cycle});
    auto os = open_csv(r.str("csv"));
    write_metrics_csv(os, rows, config_hash(cfg), r.seed());
    if (!sum.note.empty()) std::cerr << "note: " << sum.note << '\n';

    const MultigridHierarchy h = build_solver(a, levels, scheme, s);
    if (!r.str("profile_csv").empty()) {
        const SmoothingProfile prof = smoothing_profile(a, *h.level(0).smoother);
        auto ps = open_csv(r.str("profile_csv"));
        ps << "config_hash,seed,index,eigenvalue,factor\n";
        for (std::size_t k = 0; k < prof.eigenvalues.size(); ++k)
            ps << config_hash(cfg) << ',' << r.seed() << ',' << k << ',' << prof.eigenvalues[k] << ',' << prof.factors[k] << '\n';
    }
    if (!r.str("kernel_json").empty()) {
        const auto* conv = dynamic_cast<const ConvSmoother*>(h.level(0).smoother.get());
        if (!conv) throw UnsupportedOperation("effective kernel dump needs a convolutional model smoother");
        const ConvKernel k = effective_kernel(*conv);
        write_json(r.str("kernel_json"), {{"size", k.size()},
                                          {"config_hash", config_hash(cfg)},
                                          {"weights", std::vector<double>(k.weights().begin(), k.weights().end())}});
    }
    for (const auto& row : rows) std::cout << row.metric << " = " << row.value << '\n';
    return kOk;
}

int cmd_bench(const ConfigMap& cfg) {
    const Reader r{cfg};
    const ProblemSpec base = r.problem();
    std::vector<SolveCell> cells;
    const bool variable = base.family == Family::VariableDiffusion;
    const auto params = split_list(variable ? r.str("kappas") : r.str("thetas"));
    const bool matched = r.flag("matched_cost");
    for (const auto& par : params)
        for (const auto& sm : split_list(r.str("smoothers")))
            for (const auto& n : split_list(r.str("ns")))
                for (const auto& sc : split_list(r.str("schemes"))) {
                    SolveCell c;
                    c.problem = base;
                    if (variable)
                        c.problem.kappa = std::stod(par);
                    else
                        c.problem.theta = parse_angle(par);
                    c.problem.n = std::stoi(n);
                    c.problem.validate();
                    c.levels = r.integer("levels");
                    c.scheme = coarsening_from_string(sc);
                    const std::size_t colon = sm.find(':');
                    const std::string kind = sm.substr(0, colon);
                    c.smoother = smoother_choice(r, kind, colon == std::string::npos ? "" : sm.substr(colon + 1));
                    if (matched && c.smoother.kind == SmootherKind::Jacobi) c.smoother.steps = matched_cost_steps(c.scheme);
                    if (c.smoother.kind == SmootherKind::Model) c.smoother.label = "model:" + sm.substr(colon + 1);
                    c.krylov = krylov_mode_from_string(r.str("krylov"));
                    c.rhs = r.str("rhs");
                    c.trials = r.integer("trials");
                    c.tol = r.num("tol");
                    c.max_iter = r.integer("max_iter");
                    cells.push_back(c);
                }
    std::vector<CellResult> results(cells.size());
    const int nc = static_cast<int>(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < nc; ++i) {
        try {
            results[static_cast<std::size_t>(i)] = run_cell(cells[static_cast<std::size_t>(i)], r.seed());
        } catch (const DivergenceError& e) {
            results[static_cast<std::size_t>(i)].error = e.what();
            results[static_cast<std::size_t>(i)].code = kNumeric;
        } catch (const std::exception& e) {
            results[static_cast<std::size_t>(i)].error = e.what();
            results[static_cast<std::size_t>(i)].code = kUsage;
        }
    }
    auto os = open_csv(r.str("csv"));
    os << kSolveHeader;
    int code = kOk;
    const std::string hash = config_hash(cfg);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!results[i].error.empty()) {
            std::cerr << "cell " << i << ": " << results[i].error << '\n';
            code = std::max(code, results[i].code);
            continue;
        }
        write_rows(os, hash, r.seed(), cells[i], results[i]);
        for (const auto& s : results[i].trials)
            if (!s.converged && code == kOk) code = kNotConverged;
    }
    std::cout << cells.size() << " cells -> " << r.str("csv") << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multigrid with learned convolutional smoothers"};
    app.require_subcommand(1);
    std::vector<std::unique_ptr<Command>> cmds;
    for (const char* name : {"train", "solve", "analyze", "bench"}) {
        auto c = std::make_unique<Command>();
        c->name = name;
        c->app = app.add_subcommand(name);
        add_options(*c);
        cmds.push_back(std::move(c));
    }
    cmds[0]->app->description("Train smoothers; writes model JSON, loss CSV and manifest");
    cmds[1]->app->description("Solve with multigrid or FGMRES; writes a CSV row per trial");
    cmds[2]->app->description("Dense spectral analysis of a smoother (N <= 64)");
    cmds[3]->app->description("Parameter sweep; one CSV row per cell and trial");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    try {
        for (const auto& c : cmds) {
            if (!c->app->parsed()) continue;
            const ConfigMap cfg = c->resolve();
            if (c->name == "train") return cmd_train(cfg);
            if (c->name == "solve") return cmd_solve(cfg);
            if (c->name == "analyze") return cmd_analyze(cfg);
            return cmd_bench(cfg);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const UnsupportedOperation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    }
    return kUsage;
}
