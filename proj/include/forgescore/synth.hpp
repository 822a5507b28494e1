#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgescore/manifest.hpp"
#include "forgescore/tensor.hpp"

namespace forgescore {

// Generator settings. Strength units: spatial = depth burst height (fraction of the clean depth range),
// appearance = embedding drift rate (radians per frame), motion = flow corruption magnitude (pixels).
// Token/depth-feature class means are shifted by the class strength along a fixed per-cohort direction.
// Per-video anomaly intensity is strength * U(0.5, 1.5).
struct SynthSpec {
    std::uint64_t seed = 7;
    std::array<std::size_t, 4> counts = {20, 20, 20, 20};  // spatial, appearance, motion, real
    std::size_t frames = 8;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t channels = 3;
    std::size_t emb_dim = 32;
    std::size_t token_dim = 16;
    std::size_t token_count = 5;
    Shape depth_feat_shape = {2, 32, 4, 4};
    std::array<double, 3> strengths = {1.0, 0.5, 3.0};
    std::string cohort_id = "synth";

    void validate() const;
};

nlohmann::json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j, SynthSpec base = {});

// Writes <out>/cohort.json and <out>/videos/<id>/{manifest.json, *.fvt}. Returns the manifests (sorted).
std::vector<VideoManifest> generate(const SynthSpec& spec, const std::filesystem::path& out);

// Response model of the fixture's stand-in encoder: token (t, l) channel c is the mean of
// (gray - 0.5) * basis_c over the token's region, scaled by kTokenGain. Token 0 covers the whole frame,
// tokens 1..L-1 are horizontal strips. basis_c is cos (even c) or sin (odd c) of a low spatial frequency,
// so blur attenuates the higher-frequency channels predictably.
inline constexpr double kTokenGain = 2.0;
Tensor encoder_response(const FrameSequence& frames, std::size_t token_count, std::size_t token_dim);

// Same response folded into the first min(D, C) embedding coordinates with kEmbeddingGain.
inline constexpr double kEmbeddingGain = 0.05;

// Re-derives token features for perturbed frames: tokens - response(clean) + response(perturbed).
Tensor rederive_tokens(const Tensor& tokens, const FrameSequence& clean, const FrameSequence& perturbed);
Tensor rederive_embeddings(const Tensor& embeddings, const FrameSequence& clean, const FrameSequence& perturbed);

}  // namespace forgescore
