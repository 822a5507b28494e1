#pragma once

#include <functional>
#include <string>
#include <vector>

#include "forgescore/consistency.hpp"
#include "forgescore/labels.hpp"
#include "forgescore/manifest.hpp"
#include "forgescore/perturb.hpp"

namespace forgescore {

struct ScoringOptions {
    ConsistencyOptions consistency;
    std::size_t border = 0;  // pixels excluded on each side of the warping-error mean
    Perturbation perturbation;  // applied to RGB frames before motion scoring (robustness runs)
};

double motion_anomaly_score(const VideoManifest& v, const ScoringOptions& opts = {});
double spatial_anomaly_score(const VideoManifest& v, const ScoringOptions& opts = {});
// Falls back to the single available stream and appends a note to `warnings` when one stream is absent.
double appearance_anomaly_score(const VideoManifest& v, const ScoringOptions& opts = {},
                                std::vector<std::string>* warnings = nullptr);

struct CohortScores {
    std::vector<ScoredVideo> videos;  // sorted by video_id
    std::vector<std::string> warnings;
};

// Validates artifact availability for the whole cohort up front (one error listing every offending video),
// then scores videos on `workers` threads. Results are merged in video_id order.
CohortScores score_cohort(const std::vector<VideoManifest>& cohort, const ScoringOptions& opts = {},
                          std::size_t workers = 1);

// Runs fn(i) for i in [0, n) on a small pool; the first exception (lowest index) is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace forgescore
