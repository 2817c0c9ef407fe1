#include "nmg/model_io.hpp"

#include <fstream>

#include "nmg/errors.hpp"

namespace nmg {

using nlohmann::json;

const char* to_string(SavedModel::Kind k) noexcept { return k == SavedModel::Kind::Conv ? "conv" : "inference"; }

int SavedModel::smoothed_levels() const noexcept {
    return static_cast<int>(kind == Kind::Conv ? conv.size() : nets.size());
}

std::size_t SavedModel::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& w : conv) n += w.parameter_count();
    for (const auto& net : nets) n += net.parameter_count();
    return n;
}

SmootherPtr SavedModel::smoother_for(int level, const StencilField& a) const {
    const int count = smoothed_levels();
    if (count == 0) throw ConfigError("model has no smoothers");
    const std::size_t l = static_cast<std::size_t>(std::min(level, count - 1));
    if (kind == Kind::Conv) return std::make_shared<ConvSmoother>(conv[l], a);
    return infer_kernels(nets[l], a, jacobi_skip, omega);
}

void SavedModel::install(MultigridHierarchy& h) const {
    if (h.scheme() != scheme)
        throw ConfigError(std::string("model was trained with ") + to_string(scheme) + " coarsening, hierarchy uses " +
                          to_string(h.scheme()));
    for (int l = 0; l < h.coarsest(); ++l) h.set_smoother(l, smoother_for(l, h.level(l).op));
}

SavedModel snapshot(const TrainedSolver& s, const ProblemSpec& problem, Coarsening scheme) {
    SavedModel m;
    m.scheme = scheme;
    m.levels = s.levels();
    m.problem = problem;
    m.training = s.config;
    for (const auto& model : s.models) {
        if (const auto* c = dynamic_cast<const ConvLevelModel*>(model.get())) {
            m.kind = SavedModel::Kind::Conv;
            m.conv.push_back(c->weights());
        } else if (const auto* i = dynamic_cast<const InferenceLevelModel*>(model.get())) {
            m.kind = SavedModel::Kind::Inference;
            m.nets.push_back(i->net());
        } else {
            throw UnsupportedOperation("snapshot: unknown level model type");
        }
    }
    if (!m.conv.empty() && !m.nets.empty()) throw UnsupportedOperation("snapshot: mixed level model types");
    return m;
}

// ---------------------------------------------------------------------------

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError("model: missing key '" + path + key + "'");
    return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("model: wrong type for key '" + path + key + "'");
    }
}

json kernel_json(const ConvKernel& k) {
    return {{"size", k.size()}, {"weights", std::vector<double>(k.weights().begin(), k.weights().end())}};
}

ConvKernel kernel_from(const json& j, const std::string& path) {
    const int size = get<int>(j, "size", path);
    try {
        return ConvKernel(size, get<std::vector<double>>(j, "weights", path));
    } catch (const ContractError& e) {
        throw ConfigError("model: invalid kernel at '" + path + "': " + e.what());
    }
}

} // namespace

json to_json(const ProblemSpec& p) {
    return {{"family", to_string(p.family)}, {"theta", p.theta},   {"xi", p.xi},
            {"kappa", p.kappa},              {"offset", p.offset}, {"n", p.n},
            {"geometry", to_string(p.geometry)}};
}

ProblemSpec problem_from_json(const json& j) {
    ProblemSpec p;
    const std::string path = "problem.";
    try {
        p.family = family_from_string(get<std::string>(j, "family", path));
        p.geometry = geometry_from_string(get<std::string>(j, "geometry", path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    p.theta = get<double>(j, "theta", path);
    p.xi = get<double>(j, "xi", path);
    p.kappa = get<double>(j, "kappa", path);
    p.offset = get<double>(j, "offset", path);
    p.n = get<int>(j, "n", path);
    return p;
}

json to_json(const TrainConfig& c) {
    return {{"q", c.q},
            {"b", c.b},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon}};
}

namespace {

TrainConfig train_from_json(const json& j) {
    const std::string path = "training.";
    TrainConfig c;
    c.q = get<int>(j, "q", path);
    c.b = get<int>(j, "b", path);
    c.batch_size = get<int>(j, "batch_size", path);
    c.learning_rate = get<double>(j, "learning_rate", path);
    c.epochs = get<int>(j, "epochs", path);
    c.seed = get<std::uint64_t>(j, "seed", path);
    c.beta1 = get<double>(j, "beta1", path);
    c.beta2 = get<double>(j, "beta2", path);
    c.epsilon = get<double>(j, "epsilon", path);
    return c;
}

} // namespace

json to_json(const SavedModel& m) {
    json smoothers = json::array();
    for (const auto& w : m.conv) {
        json layers = json::array();
        for (const auto& k : w.layers) layers.push_back(kernel_json(k));
        json s = {{"architecture", to_string(w.architecture)},
                  {"activation", to_string(w.activation)},
                  {"slope", w.slope},
                  {"layers", layers}};
        s["skip"] = w.skip ? kernel_json(*w.skip) : json(nullptr);
        smoothers.push_back(s);
    }
    for (const auto& net : m.nets)
        smoothers.push_back({{"variant", to_string(net.variant())},
                             {"kernels", net.kernels()},
                             {"slope", net.slope()},
                             {"parameters", net.parameters()}});
    return {{"format_version", kModelFormatVersion},
            {"kind", to_string(m.kind)},
            {"scheme", to_string(m.scheme)},
            {"levels", m.levels},
            {"parameter_count", m.parameter_count()},
            {"jacobi_skip", m.jacobi_skip},
            {"omega", m.omega},
            {"problem", to_json(m.problem)},
            {"training", to_json(m.training)},
            {"smoothers", smoothers}};
}

SavedModel model_from_json(const json& j) {
    const int version = get<int>(j, "format_version", "");
    if (version != kModelFormatVersion)
        throw ConfigError("model: unsupported format_version " + std::to_string(version));
    SavedModel m;
    const std::string kind = get<std::string>(j, "kind", "");
    if (kind == "conv")
        m.kind = SavedModel::Kind::Conv;
    else if (kind == "inference")
        m.kind = SavedModel::Kind::Inference;
    else
        throw ConfigError("model: unknown kind '" + kind + "'");
    m.scheme = coarsening_from_string(get<std::string>(j, "scheme", ""));
    m.levels = get<int>(j, "levels", "");
    m.jacobi_skip = get<bool>(j, "jacobi_skip", "");
    m.omega = get<double>(j, "omega", "");
    m.problem = problem_from_json(field(j, "problem", ""));
    m.training = train_from_json(field(j, "training", ""));
    const json& smoothers = field(j, "smoothers", "");
    if (!smoothers.is_array()) throw ConfigError("model: 'smoothers' must be an array");
    for (std::size_t i = 0; i < smoothers.size(); ++i) {
        const json& s = smoothers[i];
        const std::string path = "smoothers[" + std::to_string(i) + "].";
        if (m.kind == SavedModel::Kind::Conv) {
            ConvSmootherWeights w;
            w.architecture = architecture_from_string(get<std::string>(s, "architecture", path));
            w.activation = activation_from_string(get<std::string>(s, "activation", path));
            w.slope = get<double>(s, "slope", path);
            const json& layers = field(s, "layers", path);
            for (std::size_t k = 0; k < layers.size(); ++k)
                w.layers.push_back(kernel_from(layers[k], path + "layers[" + std::to_string(k) + "]."));
            if (w.layers.empty()) throw ConfigError("model: '" + path + "layers' is empty");
            const json& skip = field(s, "skip", path);
            if (!skip.is_null()) w.skip = kernel_from(skip, path + "skip.");
            m.conv.push_back(std::move(w));
        } else {
            KernelInferenceNet net(inference_variant_from_string(get<std::string>(s, "variant", path)),
                                   get<int>(s, "kernels", path), 0, get<double>(s, "slope", path));
            const auto p = get<std::vector<double>>(s, "parameters", path);
            if (p.size() != net.parameter_count())
                throw ConfigError("model: '" + path + "parameters' has " + std::to_string(p.size()) + " entries, expected " +
                                  std::to_string(net.parameter_count()));
            net.set_parameters(p);
            m.nets.push_back(std::move(net));
        }
    }
    if (m.smoothed_levels() == 0) throw ConfigError("model: no smoothers");
    return m;
}

void save_model(const SavedModel& m, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write model file " + path.string());
    os << to_json(m).dump(1) << '\n';
    if (!os) throw ConfigError("failed writing model file " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read model file " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

} // namespace nmg
