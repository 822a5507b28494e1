#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forgescore/tensor.hpp"

namespace forgescore {

enum class Artifact { frames, depth, frame_flow, depth_flow, clip_emb, dino_emb, tokens, depth_feat };

const char* artifact_key(Artifact a);
const std::vector<Artifact>& all_artifacts();

struct VideoManifest {
    std::string video_id;
    std::string cohort_id;
    bool is_real = false;
    std::map<Artifact, std::filesystem::path> artifacts;  // absolute or manifest-relative, resolved at load
    std::optional<int> planted_label;
    std::filesystem::path source;  // manifest file it was loaded from

    bool has(Artifact a) const { return artifacts.count(a) != 0; }
    const std::filesystem::path& path(Artifact a) const;
};

// Parses and validates one manifest; relative artifact paths resolve against the manifest's directory.
VideoManifest load_manifest(const std::filesystem::path& path);

// Loads every "manifest.json" under dir (recursively), sorted by video_id.
std::vector<VideoManifest> load_cohort(const std::filesystem::path& dir);

// Writes the manifest JSON with artifact paths relative to the manifest's directory.
void save_manifest(const VideoManifest& m, const std::filesystem::path& path);

// Artifact loaders; errors carry the video_id.
FrameSequence load_frames(const VideoManifest& m);
DepthSequence load_depth(const VideoManifest& m);
FlowField load_flow(const VideoManifest& m, Artifact which);
EmbeddingSequence load_embeddings(const VideoManifest& m, Artifact which);
TokenFeatures load_tokens(const VideoManifest& m);
Tensor load_depth_features(const VideoManifest& m);

}  // namespace forgescore
