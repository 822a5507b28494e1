#include "forgescore/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <thread>

#include "forgescore/error.hpp"
#include "forgescore/warp.hpp"

namespace forgescore {

double motion_anomaly_score(const VideoManifest& v, const ScoringOptions& opts)
{
    auto frames = load_frames(v);
    auto flow = load_flow(v, Artifact::frame_flow);
    if (!opts.perturbation.is_identity()) frames = apply(opts.perturbation, frames);
    try {
        return warping_error(frames, flow, opts.border).total;
    } catch (const Error& e) {
        throw data_error("video " + v.video_id + ": motion score: " + e.what());
    }
}

double spatial_anomaly_score(const VideoManifest& v, const ScoringOptions& opts)
{
    auto depth = load_depth(v);
    auto flow = load_flow(v, Artifact::depth_flow);
    try {
        return warping_error(depth, flow, opts.border).total;
    } catch (const Error& e) {
        throw data_error("video " + v.video_id + ": spatial score: " + e.what());
    }
}

double appearance_anomaly_score(const VideoManifest& v, const ScoringOptions& opts, std::vector<std::string>* warnings)
{
    bool clip = v.has(Artifact::clip_emb);
    bool dino = v.has(Artifact::dino_emb);
    if (clip && dino) {
        return appearance_anomaly_score(load_embeddings(v, Artifact::clip_emb), load_embeddings(v, Artifact::dino_emb),
                                        opts.consistency);
    }
    if (!clip && !dino) throw data_error("video " + v.video_id + ": no embedding stream (clip_emb/dino_emb)");
    if (warnings) {
        warnings->push_back("video " + v.video_id + ": only the " + (clip ? "clip" : "dino") +
                            " stream is present; appearance score uses it alone");
    }
    return appearance_anomaly_score(load_embeddings(v, clip ? Artifact::clip_emb : Artifact::dino_emb), opts.consistency);
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

CohortScores score_cohort(const std::vector<VideoManifest>& cohort, const ScoringOptions& opts, std::size_t workers)
{
    std::map<std::string, std::vector<std::string>> missing;  // requirement -> video ids
    for (const auto& v : cohort) {
        if (!v.has(Artifact::frames)) missing["frames"].push_back(v.video_id);
        if (!v.has(Artifact::frame_flow)) missing["frame_flow"].push_back(v.video_id);
        if (!v.has(Artifact::depth)) missing["depth"].push_back(v.video_id);
        if (!v.has(Artifact::depth_flow)) missing["depth_flow"].push_back(v.video_id);
        if (!v.has(Artifact::clip_emb) && !v.has(Artifact::dino_emb)) missing["clip_emb/dino_emb"].push_back(v.video_id);
    }
    if (!missing.empty()) {
        std::string msg = "cohort is missing scoring artifacts:";
        for (const auto& [what, ids] : missing) {
            msg += "\n  videos lacking " + what + ":";
            for (const auto& id : ids) msg += " " + id;
        }
        throw data_error(msg);
    }

    CohortScores out;
    out.videos.resize(cohort.size());
    std::vector<std::vector<std::string>> notes(cohort.size());
    parallel_for(cohort.size(), workers, [&](std::size_t i) {
        const auto& v = cohort[i];
        ScoredVideo s;
        s.video_id = v.video_id;
        s.is_real = v.is_real;
        s.planted_label = v.planted_label;
        s.scores.spatial = spatial_anomaly_score(v, opts);
        s.scores.appearance = appearance_anomaly_score(v, opts, &notes[i]);
        s.scores.motion = motion_anomaly_score(v, opts);
        out.videos[i] = std::move(s);
    });
    for (auto& n : notes) out.warnings.insert(out.warnings.end(), n.begin(), n.end());
    std::sort(out.videos.begin(), out.videos.end(),
              [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
    return out;
}

}  // namespace forgescore
