#include "forgescore/robustness.hpp"

#include <cmath>
#include <map>

#include "forgescore/consistency.hpp"
#include "forgescore/error.hpp"
#include "forgescore/scoring.hpp"
#include "forgescore/synth.hpp"
#include "forgescore/warp.hpp"

namespace forgescore {

Predictions predict_all(const std::vector<FusionSample>& samples, const FusionParams& params)
{
    Predictions p;
    for (const auto& s : samples) {
        std::vector<double> probs;
        int pred = predict(s, params, &probs);
        p.video_ids.push_back(s.video_id);
        p.labels.push_back(s.label);
        p.preds.push_back(pred);
        p.probabilities.push_back({probs[0], probs[1], probs[2], probs[3]});
    }
    return p;
}

EvalReport evaluate(const Predictions& p) { return evaluate(p.preds, p.labels, p.probabilities); }

RobustnessReport robustness_eval(const std::vector<VideoManifest>& cohort, const std::vector<SampleRequest>& requests,
                                 const FusionParams& params, const Perturbation& perturbation, std::size_t workers)
{
    std::map<std::string, const VideoManifest*> by_id;
    for (const auto& m : cohort) by_id[m.video_id] = &m;
    std::vector<std::string> missing;
    for (const auto& r : requests) {
        auto it = by_id.find(r.video_id);
        if (it == by_id.end() || !it->second->has(Artifact::frames)) missing.push_back(r.video_id);
    }
    if (!missing.empty()) {
        std::string msg = "robustness evaluation needs frames; missing for:";
        for (const auto& id : missing) msg += " " + id;
        throw data_error(msg);
    }

    RobustnessReport r;
    r.perturbation = perturbation;
    r.clean = evaluate(predict_all(build_samples(cohort, requests), params));
    r.perturbed = evaluate(predict_all(build_samples(cohort, requests, perturbation), params));

    const std::size_t n = requests.size();
    std::vector<double> motion_clean(n), motion_pert(n), app_clean(n), app_pert(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto& m = *by_id.at(requests[i].video_id);
        auto frames = load_frames(m);
        auto pert = apply(perturbation, frames);
        if (m.has(Artifact::frame_flow)) {
            auto flow = load_flow(m, Artifact::frame_flow);
            motion_clean[i] = warping_error(frames, flow).total;
            motion_pert[i] = warping_error(pert, flow).total;
        }
        std::vector<EmbeddingSequence> clean_streams, pert_streams;
        for (auto a : {Artifact::clip_emb, Artifact::dino_emb}) {
            if (!m.has(a)) continue;
            auto e = load_embeddings(m, a);
            pert_streams.emplace_back(rederive_embeddings(e.tensor(), frames, pert));
            clean_streams.push_back(std::move(e));
        }
        auto score = [](const std::vector<EmbeddingSequence>& s) {
            if (s.empty()) return 0.0;
            return s.size() == 2 ? appearance_anomaly_score(s[0], s[1]) : appearance_anomaly_score(s[0]);
        };
        app_clean[i] = score(clean_streams);
        app_pert[i] = score(pert_streams);
    });
    auto mean = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return n ? s / static_cast<double>(n) : 0.0;
    };
    r.clean_motion_score = mean(motion_clean);
    r.perturbed_motion_score = mean(motion_pert);
    r.clean_appearance_score = mean(app_clean);
    r.perturbed_appearance_score = mean(app_pert);
    return r;
}

nlohmann::json to_json(const RobustnessReport& r)
{
    auto clean = to_json(r.clean);
    auto pert = to_json(r.perturbed);
    nlohmann::json deltas = {{"acc", r.perturbed.acc - r.clean.acc},
                             {"macro_ovr_auc", r.perturbed.macro_ovr_auc - r.clean.macro_ovr_auc},
                             {"binary_acc", r.perturbed.binary_acc - r.clean.binary_acc},
                             {"binary_auc", r.perturbed.binary_auc - r.clean.binary_auc}};
    nlohmann::json f1 = nlohmann::json::array();
    for (std::size_t c = 0; c < kClassCount; ++c) f1.push_back(r.perturbed.f1_per_class[c] - r.clean.f1_per_class[c]);
    deltas["f1_per_class"] = f1;
    for (auto& [k, v] : deltas.items()) {
        if (v.is_number_float() && !std::isfinite(v.get<double>())) v = nullptr;
    }
    return {{"perturbation", r.perturbation.describe()},
            {"clean", clean},
            {"perturbed", pert},
            {"deltas", deltas},
            {"anomaly_scores",
             {{"motion", {{"clean", r.clean_motion_score}, {"perturbed", r.perturbed_motion_score}}},
              {"appearance", {{"clean", r.clean_appearance_score}, {"perturbed", r.perturbed_appearance_score}}}}}};
}

}  // namespace forgescore
