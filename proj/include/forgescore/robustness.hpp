#pragma once

#include <vector>

#include <json.hpp>

#include "forgescore/dataset.hpp"
#include "forgescore/fusion.hpp"
#include "forgescore/metrics.hpp"
#include "forgescore/perturb.hpp"

namespace forgescore {

struct Predictions {
    std::vector<std::string> video_ids;
    std::vector<int> labels;
    std::vector<int> preds;
    std::vector<ProbRow> probabilities;
};

Predictions predict_all(const std::vector<FusionSample>& samples, const FusionParams& params);
EvalReport evaluate(const Predictions& p);

struct RobustnessReport {
    Perturbation perturbation;
    EvalReport clean;
    EvalReport perturbed;
    double clean_motion_score = 0.0;      // mean motion anomaly score over the evaluated videos
    double perturbed_motion_score = 0.0;
    double clean_appearance_score = 0.0;
    double perturbed_appearance_score = 0.0;
};

// Evaluates the model on clean inputs and on perturbed frames (tokens and embeddings re-derived through the
// fixture response model; motion/appearance anomaly scores recomputed). Requires frames for every video.
RobustnessReport robustness_eval(const std::vector<VideoManifest>& cohort, const std::vector<SampleRequest>& requests,
                                 const FusionParams& params, const Perturbation& perturbation, std::size_t workers = 1);

nlohmann::json to_json(const RobustnessReport& r);

}  // namespace forgescore
