#include "forgescore/dataset.hpp"

#include <algorithm>

#include "forgescore/error.hpp"
#include "forgescore/synth.hpp"

namespace forgescore {

std::vector<FusionSample> build_samples(const std::vector<VideoManifest>& cohort, const std::vector<SampleRequest>& requests,
                                        const Perturbation& perturbation)
{
    std::map<std::string, const VideoManifest*> by_id;
    for (const auto& m : cohort) by_id[m.video_id] = &m;

    std::vector<FusionSample> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
        auto it = by_id.find(r.video_id);
        if (it == by_id.end()) throw data_error("video " + r.video_id + " is not in the cohort");
        const auto& m = *it->second;
        auto tokens = load_tokens(m).tensor();
        if (!perturbation.is_identity()) {
            if (!m.has(Artifact::frames)) throw data_error("video " + m.video_id + ": perturbation needs the frames artifact");
            auto clean = load_frames(m);
            tokens = rederive_tokens(tokens, clean, apply(perturbation, clean));
        }
        FusionSample s{r.video_id, TokenFeatures(std::move(tokens)), depth_pool(load_depth_features(m)), r.label, r.weight};
        out.push_back(std::move(s));
    }
    return out;
}

SplitRequests split_requests(const SplitManifest& split, const std::vector<LabeledVideo>& labeled)
{
    std::map<std::string, const LabeledVideo*> by_id;
    for (const auto& v : labeled) by_id[v.video_id] = &v;
    auto label_of = [&](const std::string& id) {
        auto it = split.labels.find(id);
        if (it == split.labels.end()) throw data_error("split manifest has no label for video " + id);
        return code(it->second);
    };
    SplitRequests out;
    for (const auto& id : split.train) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw data_error("video " + id + " is in the split but not in the labeled cohort");
        out.train.push_back({id, label_of(id), it->second->is_real ? 1.0 : it->second->alpha});
    }
    for (const auto& id : split.val) out.val.push_back({id, label_of(id), 1.0});
    return out;
}

}  // namespace forgescore
