#pragma once

#include <map>
#include <string>
#include <vector>

#include "forgescore/fusion.hpp"
#include "forgescore/labels.hpp"
#include "forgescore/manifest.hpp"
#include "forgescore/perturb.hpp"

namespace forgescore {

struct SampleRequest {
    std::string video_id;
    int label = 0;
    double weight = 1.0;
};

// Loads tokens and pooled depth features for each request. With a non-identity perturbation the frames are
// perturbed and the tokens re-derived through the fixture response model (requires the frames artifact).
std::vector<FusionSample> build_samples(const std::vector<VideoManifest>& cohort, const std::vector<SampleRequest>& requests,
                                        const Perturbation& perturbation = {});

// Train/val requests from a finalized split. Train weights come from the labeled cohort's confidence weights
// (real videos 1); val samples carry weight 1.
struct SplitRequests {
    std::vector<SampleRequest> train;
    std::vector<SampleRequest> val;
};
SplitRequests split_requests(const SplitManifest& split, const std::vector<LabeledVideo>& labeled);

}  // namespace forgescore
