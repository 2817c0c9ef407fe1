#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmg/hierarchy.hpp"
#include "nmg/inference.hpp"
#include "nmg/problems.hpp"
#include "nmg/smoothers.hpp"
#include "nmg/training.hpp"

namespace nmg {

inline constexpr int kModelFormatVersion = 1;

/// Trained smoothers of one solver, detached from any operator.
struct SavedModel {
    enum class Kind { Conv, Inference };
    Kind kind = Kind::Conv;
    Coarsening scheme = Coarsening::Full;
    int levels = 2;  // hierarchy depth used in training (smoothed levels = levels - 1)
    ProblemSpec problem;
    TrainConfig training;
    std::vector<ConvSmootherWeights> conv;   // Kind::Conv, one per smoothed level
    std::vector<KernelInferenceNet> nets;    // Kind::Inference
    bool jacobi_skip = true;
    double omega = kDefaultOmega;

    int smoothed_levels() const noexcept;
    std::size_t parameter_count() const noexcept;
    /// Binds level l's smoother to h's level-l operator. Levels deeper than the
    /// trained ones reuse the coarsest trained smoother.
    void install(MultigridHierarchy& h) const;
    SmootherPtr smoother_for(int level, const StencilField& a) const;
};

const char* to_string(SavedModel::Kind k) noexcept;

/// Requires every level model to be a ConvLevelModel or every one an InferenceLevelModel.
SavedModel snapshot(const TrainedSolver& s, const ProblemSpec& problem, Coarsening scheme);

nlohmann::json to_json(const SavedModel& m);
/// Throws ConfigError naming the offending key path.
SavedModel model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProblemSpec& p);
ProblemSpec problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);

void save_model(const SavedModel& m, const std::filesystem::path& path);
SavedModel load_model(const std::filesystem::path& path);

} // namespace nmg
