#include "forgescore/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "forgescore/error.hpp"
#include "forgescore/tensor_io.hpp"

namespace forgescore {

namespace fs = std::filesystem;
using nlohmann::json;

const char* artifact_key(Artifact a)
{
    switch (a) {
    case Artifact::frames: return "frames";
    case Artifact::depth: return "depth";
    case Artifact::frame_flow: return "frame_flow";
    case Artifact::depth_flow: return "depth_flow";
    case Artifact::clip_emb: return "clip_emb";
    case Artifact::dino_emb: return "dino_emb";
    case Artifact::tokens: return "tokens";
    case Artifact::depth_feat: return "depth_feat";
    }
    return "?";
}

const std::vector<Artifact>& all_artifacts()
{
    static const std::vector<Artifact> all = {Artifact::frames,     Artifact::depth,    Artifact::frame_flow,
                                              Artifact::depth_flow, Artifact::clip_emb, Artifact::dino_emb,
                                              Artifact::tokens,     Artifact::depth_feat};
    return all;
}

const fs::path& VideoManifest::path(Artifact a) const
{
    auto it = artifacts.find(a);
    if (it == artifacts.end()) {
        throw data_error("video " + video_id + ": missing artifact '" + artifact_key(a) + "'");
    }
    return it->second;
}

namespace {

[[noreturn]] void schema_error(const fs::path& path, const std::string& what)
{
    throw data_error("manifest " + path.string() + ": " + what);
}

}  // namespace

VideoManifest load_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) schema_error(path, "cannot open");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        schema_error(path, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) schema_error(path, "top level must be an object");

    VideoManifest m;
    m.source = path;
    auto require_string = [&](const char* key) {
        if (!doc.contains(key) || !doc[key].is_string()) schema_error(path, std::string("field '") + key + "' must be a string");
        return doc[key].get<std::string>();
    };
    m.video_id = require_string("video_id");
    m.cohort_id = require_string("cohort_id");
    if (m.video_id.empty()) schema_error(path, "field 'video_id' must be non-empty");
    if (!doc.contains("is_real") || !doc["is_real"].is_boolean()) schema_error(path, "field 'is_real' must be a boolean");
    m.is_real = doc["is_real"].get<bool>();

    if (doc.contains("planted_label") && !doc["planted_label"].is_null()) {
        if (!doc["planted_label"].is_number_integer()) schema_error(path, "field 'planted_label' must be an integer");
        int label = doc["planted_label"].get<int>();
        if (label < 0 || label > 3) schema_error(path, "field 'planted_label' must be in 0..3");
        m.planted_label = label;
    }

    if (!doc.contains("artifacts") || !doc["artifacts"].is_object()) schema_error(path, "field 'artifacts' must be an object");
    const auto& arts = doc["artifacts"];
    std::set<std::string> known;
    for (auto a : all_artifacts()) known.insert(artifact_key(a));
    for (auto it = arts.begin(); it != arts.end(); ++it) {
        if (!known.count(it.key())) schema_error(path, "unknown artifact '" + it.key() + "'");
    }
    for (auto a : all_artifacts()) {
        const char* key = artifact_key(a);
        if (!arts.contains(key) || arts[key].is_null()) continue;
        if (!arts[key].is_string()) schema_error(path, std::string("artifact '") + key + "' must be a path string");
        fs::path p = arts[key].get<std::string>();
        if (p.is_relative()) p = path.parent_path() / p;
        if (!fs::exists(p)) {
            throw data_error("video " + m.video_id + ": artifact '" + key + "' points to missing file " + p.string());
        }
        m.artifacts[a] = p;
    }
    if (!m.is_real && !m.has(Artifact::frames)) {
        throw data_error("video " + m.video_id + ": manifest " + path.string() +
                         " is missing required field 'artifacts.frames'");
    }
    return m;
}

std::vector<VideoManifest> load_cohort(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw data_error("cohort directory not found: " + dir.string());
    std::vector<VideoManifest> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json") {
            out.push_back(load_manifest(entry.path()));
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].video_id == out[i - 1].video_id) {
            throw data_error("duplicate video_id '" + out[i].video_id + "' in cohort " + dir.string() + " (" +
                             out[i - 1].source.string() + ", " + out[i].source.string() + ")");
        }
    }
    return out;
}

void save_manifest(const VideoManifest& m, const fs::path& path)
{
    json arts = json::object();
    for (const auto& [a, p] : m.artifacts) {
        arts[artifact_key(a)] = fs::relative(p, path.parent_path()).generic_string();
    }
    json doc = {{"video_id", m.video_id}, {"cohort_id", m.cohort_id}, {"is_real", m.is_real}, {"artifacts", arts}};
    if (m.planted_label) doc["planted_label"] = *m.planted_label;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot write manifest " + path.string());
    out << doc.dump(2) << "\n";
}

namespace {

template <class T>
T load_typed(const VideoManifest& m, Artifact a)
{
    try {
        return T(read_tensor(m.path(a)));
    } catch (const Error& e) {
        throw data_error("video " + m.video_id + ": artifact '" + artifact_key(a) + "': " + e.what());
    }
}

}  // namespace

FrameSequence load_frames(const VideoManifest& m) { return load_typed<FrameSequence>(m, Artifact::frames); }
DepthSequence load_depth(const VideoManifest& m) { return load_typed<DepthSequence>(m, Artifact::depth); }
FlowField load_flow(const VideoManifest& m, Artifact which) { return load_typed<FlowField>(m, which); }
EmbeddingSequence load_embeddings(const VideoManifest& m, Artifact which) { return load_typed<EmbeddingSequence>(m, which); }
TokenFeatures load_tokens(const VideoManifest& m) { return load_typed<TokenFeatures>(m, Artifact::tokens); }
Tensor load_depth_features(const VideoManifest& m) { return load_typed<Tensor>(m, Artifact::depth_feat); }

}  // namespace forgescore
