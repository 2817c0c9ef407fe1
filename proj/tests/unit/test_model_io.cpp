#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "nmg/errors.hpp"
#include "nmg/model_io.hpp"

using namespace nmg;

namespace {

SavedModel trained(bool inference) {
    ProblemSpec p;
    p.n = 15;
    p.theta = std::numbers::pi / 12;
    const StencilField a = assemble(p);
    TrainConfig cfg;
    cfg.q = 4;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    cfg.learning_rate = 0.05;
    const auto factory = inference ? inference_model_factory(InferenceVariant::FullyConnected, 1, 3)
                                   : conv_model_factory(ConvArchitecture::FullCoarsening, Activation::LeakyRelu);
    return snapshot(train_adaptive(a, 3, Coarsening::Full, cfg, factory), p, Coarsening::Full);
}

std::string error_of(const nlohmann::json& j) {
    try {
        model_from_json(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("saved models round-trip bit-exactly") {
    for (bool inference : {false, true}) {
        const SavedModel m = trained(inference);
        const auto path = std::filesystem::temp_directory_path() / ("nmg_model_" + std::to_string(inference) + ".json");
        save_model(m, path);
        const SavedModel back = load_model(path);
        std::filesystem::remove(path);
        CHECK(back.kind == m.kind);
        CHECK(back.levels == 3);
        CHECK(back.smoothed_levels() == 2);
        CHECK(back.parameter_count() == m.parameter_count());
        CHECK(back.problem.theta == m.problem.theta);
        CHECK(back.training.seed == m.training.seed);
        for (int l = 0; l < 2; ++l) {
            const auto i = static_cast<std::size_t>(l);
            if (inference)
                CHECK(testing::bitwise_equal(back.nets[i].parameters(), m.nets[i].parameters()));
            else
                CHECK(testing::bitwise_equal(back.conv[i].flatten(), m.conv[i].flatten()));
        }
        // identical smoothers after installing on a new hierarchy
        const StencilField a = assemble(m.problem);
        MultigridHierarchy h1 = MultigridHierarchy::build(a, 4, Coarsening::Full), h2 = h1;
        m.install(h1);
        back.install(h2);
        CHECK(h2.complete());
        const GridFunction r = testing::random_field(a.spec_ptr(), 1);
        CHECK(testing::bitwise_equal(h1.level(0).smoother->apply(r).values(), h2.level(0).smoother->apply(r).values()));
        CHECK(to_json(back) == to_json(m));
    }
}

TEST_CASE("malformed model files name the offending key") {
    const nlohmann::json good = to_json(trained(false));
    nlohmann::json j = good;
    j.erase("scheme");
    CHECK(error_of(j).find("scheme") != std::string::npos);
    j = good;
    j["smoothers"][0].erase("layers");
    CHECK(error_of(j).find("smoothers[0].layers") != std::string::npos);
    j = good;
    j["smoothers"][1]["layers"][0]["weights"] = "oops";
    CHECK(error_of(j).find("smoothers[1].layers[0].weights") != std::string::npos);
    j = good;
    j["format_version"] = kModelFormatVersion + 1;
    CHECK(error_of(j).find("format_version") != std::string::npos);
    j = good;
    j["kind"] = "tree";
    CHECK(error_of(j).find("tree") != std::string::npos);
    CHECK(error_of(good).empty());
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ConfigError);
}

TEST_CASE("a model only installs on its coarsening scheme") {
    const SavedModel m = trained(false);
    const StencilField a = assemble(m.problem);
    MultigridHierarchy h = MultigridHierarchy::build(a, 3, Coarsening::RedBlack);
    CHECK_THROWS_AS(m.install(h), ConfigError);
}

TEST_CASE("problem specs round-trip") {
    ProblemSpec p;
    p.family = Family::VariableDiffusion;
    p.kappa = 10.0;
    p.n = 31;
    p.geometry = Geometry::Cylinder;
    const ProblemSpec q = problem_from_json(to_json(p));
    CHECK(q.family == p.family);
    CHECK(q.kappa == p.kappa);
    CHECK(q.n == p.n);
    CHECK(q.geometry == p.geometry);
}
