#include "forgescore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "forgescore/error.hpp"
#include "forgescore/rng.hpp"
#include "forgescore/tensor_io.hpp"

namespace forgescore {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFrameNoise = 0.005;
constexpr double kDepthNoise = 0.002;
constexpr double kEmbeddingNoise = 0.01;
constexpr double kBaseRotation = 0.02;     // radians per frame, clean embedding drift
constexpr double kCorruptFraction = 0.2;   // share of flow vectors replaced in motion fakes
constexpr double kTokenNoise = 0.3;
constexpr double kVideoNoise = 0.05;
constexpr double kDepthFeatNoise = 0.3;

struct Wave {
    int kx = 0, ky = 0;
    double amplitude = 0.0, phase = 0.0;
    std::array<double, 3> channel_gain{};
};

std::vector<double> unit_vector(std::size_t dim, Rng& rng)
{
    std::vector<double> v(dim);
    double ss = 0.0;
    while (ss == 0.0) {
        ss = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            ss += x * x;
        }
    }
    double inv = 1.0 / std::sqrt(ss);
    for (auto& x : v) x *= inv;
    return v;
}

// Orthonormal frame of `count` vectors (Gram-Schmidt on gaussian draws).
std::vector<std::vector<double>> orthonormal(std::size_t count, std::size_t dim, Rng& rng)
{
    std::vector<std::vector<double>> basis;
    while (basis.size() < count) {
        auto v = unit_vector(dim, rng);
        for (const auto& b : basis) {
            double d = 0.0;
            for (std::size_t i = 0; i < dim; ++i) d += v[i] * b[i];
            for (std::size_t i = 0; i < dim; ++i) v[i] -= d * b[i];
        }
        double ss = 0.0;
        for (double x : v) ss += x * x;
        if (ss < 1e-12) continue;
        double inv = 1.0 / std::sqrt(ss);
        for (auto& x : v) x *= inv;
        basis.push_back(std::move(v));
    }
    return basis;
}

double basis_value(std::size_t c, double x, double y, std::size_t w, std::size_t h)
{
    const auto k = c / 2;
    const double fx = static_cast<double>(k % 4);
    const double fy = static_cast<double>((k / 4) % 4);
    const double arg = kTwoPi * (fx * x / static_cast<double>(w) + fy * y / static_cast<double>(h));
    return c % 2 == 0 ? std::cos(arg) : std::sin(arg);
}

void write_artifact(VideoManifest& m, Artifact a, const Tensor& t, const fs::path& dir)
{
    auto path = dir / (std::string(artifact_key(a)) + ".fvt");
    write_tensor(t, path);
    m.artifacts[a] = path;
}

}  // namespace

void SynthSpec::validate() const
{
    std::size_t total = counts[0] + counts[1] + counts[2] + counts[3];
    if (total == 0) throw usage_error("synth: zero total videos");
    if (frames < 2) throw usage_error("synth: frames must be >= 2");
    if (height < 4 || width < 4) throw usage_error("synth: frames must be at least 4x4");
    if (channels != 1 && channels != 3) throw usage_error("synth: channels must be 1 or 3");
    if (emb_dim < 3) throw usage_error("synth: emb_dim must be >= 3");
    if (token_count < 2 || token_dim < 1) throw usage_error("synth: token_count >= 2 and token_dim >= 1 required");
    if (depth_feat_shape.size() < 2) throw usage_error("synth: depth_feat_shape needs rank >= 2");
    for (double s : strengths) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw usage_error("synth: strengths must be finite and >= 0");
    }
}

json to_json(const SynthSpec& s)
{
    return {{"seed", s.seed},
            {"counts", {{"spatial", s.counts[0]}, {"appearance", s.counts[1]}, {"motion", s.counts[2]}, {"real", s.counts[3]}}},
            {"frames", s.frames},
            {"height", s.height},
            {"width", s.width},
            {"channels", s.channels},
            {"emb_dim", s.emb_dim},
            {"token_dim", s.token_dim},
            {"token_count", s.token_count},
            {"depth_feat_shape", s.depth_feat_shape},
            {"strengths", {{"spatial", s.strengths[0]}, {"appearance", s.strengths[1]}, {"motion", s.strengths[2]}}},
            {"cohort_id", s.cohort_id}};
}

SynthSpec synth_spec_from_json(const json& j, SynthSpec s)
{
    try {
        s.seed = j.value("seed", s.seed);
        if (j.contains("counts")) {
            const auto& c = j["counts"];
            s.counts = {c.value("spatial", s.counts[0]), c.value("appearance", s.counts[1]), c.value("motion", s.counts[2]),
                        c.value("real", s.counts[3])};
        }
        s.frames = j.value("frames", s.frames);
        s.height = j.value("height", s.height);
        s.width = j.value("width", s.width);
        s.channels = j.value("channels", s.channels);
        s.emb_dim = j.value("emb_dim", s.emb_dim);
        s.token_dim = j.value("token_dim", s.token_dim);
        s.token_count = j.value("token_count", s.token_count);
        s.depth_feat_shape = j.value("depth_feat_shape", s.depth_feat_shape);
        if (j.contains("strengths")) {
            const auto& st = j["strengths"];
            s.strengths = {st.value("spatial", s.strengths[0]), st.value("appearance", s.strengths[1]),
                           st.value("motion", s.strengths[2])};
        }
        s.cohort_id = j.value("cohort_id", s.cohort_id);
    } catch (const json::exception& e) {
        throw usage_error(std::string("synth spec: ") + e.what());
    }
    return s;
}

Tensor encoder_response(const FrameSequence& frames, std::size_t token_count, std::size_t token_dim)
{
    const std::size_t T = frames.frames(), H = frames.height(), W = frames.width(), C = frames.channels();
    const std::size_t strips = token_count - 1;
    Tensor out = Tensor::zeros({T, token_count, token_dim});
    std::vector<double> gray(H * W);
    for (std::size_t t = 0; t < T; ++t) {
        auto f = frames.frame(t);
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                double s = 0.0;
                for (std::size_t c = 0; c < C; ++c) s += f.at(y, x, c);
                gray[y * W + x] = s / static_cast<double>(C) - 0.5;
            }
        }
        for (std::size_t l = 0; l < token_count; ++l) {
            std::size_t y0 = 0, y1 = H;
            if (l > 0) {
                y0 = (l - 1) * H / strips;
                y1 = std::max(y0 + 1, l * H / strips);
            }
            const double area = static_cast<double>((y1 - y0) * W);
            for (std::size_t c = 0; c < token_dim; ++c) {
                double acc = 0.0;
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = 0; x < W; ++x) {
                        acc += gray[y * W + x] * basis_value(c, static_cast<double>(x), static_cast<double>(y), W, H);
                    }
                }
                out[(t * token_count + l) * token_dim + c] = kTokenGain * acc / area;
            }
        }
    }
    return out;
}

Tensor rederive_tokens(const Tensor& tokens, const FrameSequence& clean, const FrameSequence& perturbed)
{
    auto before = encoder_response(clean, tokens.dim(1), tokens.dim(2));
    auto after = encoder_response(perturbed, tokens.dim(1), tokens.dim(2));
    Tensor out = tokens;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += after[i] - before[i];
    return out;
}

Tensor rederive_embeddings(const Tensor& embeddings, const FrameSequence& clean, const FrameSequence& perturbed)
{
    const std::size_t T = embeddings.dim(0), D = embeddings.dim(1);
    const std::size_t n = std::min<std::size_t>(D, 16);
    auto before = encoder_response(clean, 2, n);
    auto after = encoder_response(perturbed, 2, n);
    Tensor out = embeddings;
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < n; ++c) {
            // CLS response is token 0 of each frame in the [T, 2, n] response tensor.
            double delta = after[(t * 2) * n + c] - before[(t * 2) * n + c];
            out[t * D + c] += kEmbeddingGain / kTokenGain * delta;
        }
    }
    return out;
}

std::vector<VideoManifest> generate(const SynthSpec& spec, const fs::path& out)
{
    spec.validate();
    const std::size_t T = spec.frames, H = spec.height, W = spec.width, CH = spec.channels;
    const std::size_t total = spec.counts[0] + spec.counts[1] + spec.counts[2] + spec.counts[3];

    // Class assignment is shuffled over neutral ids so nothing about the label leaks through id order.
    std::vector<int> classes;
    for (int c = 0; c < 4; ++c) classes.insert(classes.end(), spec.counts[static_cast<std::size_t>(c)], c);
    Rng assign(spec.seed, "synth/assign");
    assign.shuffle(classes);

    Rng dirs(spec.seed, "synth/class-directions");
    const std::size_t feat_channels = spec.depth_feat_shape[1];
    std::array<std::vector<double>, 3> token_dir, feat_dir;
    for (std::size_t c = 0; c < 3; ++c) {
        token_dir[c] = unit_vector(spec.token_dim, dirs);
        feat_dir[c] = unit_vector(feat_channels, dirs);
    }

    fs::create_directories(out / "videos");
    {
        std::ofstream meta(out / "cohort.json", std::ios::trunc);
        meta << json{{"cohort_id", spec.cohort_id}, {"generator", to_json(spec)}}.dump(2) << "\n";
    }

    std::vector<VideoManifest> manifests;
    for (std::size_t i = 0; i < total; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "vid_%04zu", i);
        const std::string id = buf;
        const int cls = classes[i];
        const bool is_real = cls == 3;
        const double strength = is_real ? 0.0 : spec.strengths[static_cast<std::size_t>(cls)];
        Rng rng(spec.seed, "synth/video/" + id);
        // Every draw below happens regardless of class so that strength only scales planted effects.
        const double intensity = strength * rng.uniform(0.5, 1.5);
        const double vx = rng.uniform(-1.0, 1.0);
        const double vy = rng.uniform(-1.0, 1.0);

        std::vector<Wave> waves(4);
        for (auto& wv : waves) {
            do {
                wv.kx = static_cast<int>(rng.below(7)) - 3;
                wv.ky = static_cast<int>(rng.below(4));
            } while (wv.kx == 0 && wv.ky == 0);
            wv.amplitude = rng.uniform(0.05, 0.1);
            wv.phase = rng.uniform(0.0, kTwoPi);
            for (auto& g : wv.channel_gain) g = rng.uniform(0.5, 1.0);
        }
        std::array<double, 3> gain_sum{};
        for (const auto& wv : waves) {
            for (std::size_t c = 0; c < 3; ++c) gain_sum[c] += wv.amplitude * wv.channel_gain[c];
        }

        // Frames: translating band-limited pattern, I_{t+1}(p) = I_t(p - v).
        Tensor frames = Tensor::zeros({T, H, W, CH});
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    const double xs = static_cast<double>(x) - vx * static_cast<double>(t);
                    const double ys = static_cast<double>(y) - vy * static_cast<double>(t);
                    for (std::size_t c = 0; c < CH; ++c) {
                        double v = 0.5;
                        const double norm = 0.45 / std::max(gain_sum[c], 0.45);
                        for (const auto& wv : waves) {
                            v += norm * wv.amplitude * wv.channel_gain[c] *
                                 std::sin(kTwoPi * (wv.kx * xs / static_cast<double>(W) + wv.ky * ys / static_cast<double>(H)) +
                                          wv.phase);
                        }
                        v += kFrameNoise * rng.normal();
                        frames[((t * H + y) * W + x) * CH + c] = std::clamp(v, 0.0, 1.0);
                    }
                }
            }
        }

        Tensor flow = Tensor::zeros({T - 1, H, W, 2});
        for (std::size_t k = 0; k < flow.size(); k += 2) {
            flow[k] = -vx;
            flow[k + 1] = -vy;
        }
        Tensor depth_flow = flow;
        // Motion anomaly: a fixed fraction of flow vectors displaced by `intensity` pixels.
        for (std::size_t k = 0; k < flow.size(); k += 2) {
            const bool corrupt = rng.uniform() < kCorruptFraction;
            const double angle = rng.uniform(0.0, kTwoPi);
            if (cls == 2 && corrupt) {
                flow[k] += intensity * std::cos(angle);
                flow[k + 1] += intensity * std::sin(angle);
            }
        }

        // Depth: smooth surface moving with the same velocity.
        const double psi1 = rng.uniform(0.0, kTwoPi), psi2 = rng.uniform(0.0, kTwoPi);
        Tensor depth = Tensor::zeros({T, H, W});
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t y = 0; y < H; ++y) {
                for (std::size_t x = 0; x < W; ++x) {
                    const double xs = static_cast<double>(x) - vx * static_cast<double>(t);
                    const double ys = static_cast<double>(y) - vy * static_cast<double>(t);
                    depth[(t * H + y) * W + x] = 0.5 + 0.2 * std::sin(kTwoPi * xs / static_cast<double>(W) + psi1) +
                                                 0.15 * std::cos(kTwoPi * ys / static_cast<double>(H) + psi2) +
                                                 kDepthNoise * rng.normal();
                }
            }
        }
        // Spatial anomaly: rectangular depth discontinuities in about half of the frames (at least one).
        const std::size_t bh = std::max<std::size_t>(1, H / 4), bw = std::max<std::size_t>(1, W / 4);
        bool any_burst = false;
        for (std::size_t t = 0; t < T; ++t) {
            bool burst = rng.uniform() < 0.5 || (t == T - 1 && !any_burst);
            const std::size_t by = rng.below(H - bh + 1), bx = rng.below(W - bw + 1);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            if (!burst) continue;
            any_burst = true;
            if (cls != 0) continue;
            for (std::size_t y = by; y < by + bh; ++y) {
                for (std::size_t x = bx; x < bx + bw; ++x) depth[(t * H + y) * W + x] += sign * 0.7 * intensity;
            }
        }
        {
            auto [lo, hi] = std::minmax_element(depth.data().begin(), depth.data().end());
            const double mn = *lo, range = *hi - *lo;
            for (auto& v : depth.data()) v = (v - mn) / range;
        }

        FrameSequence frame_seq(frames);
        auto response = encoder_response(frame_seq, spec.token_count, spec.token_dim);
        auto cls_response = encoder_response(frame_seq, 2, std::min<std::size_t>(spec.emb_dim, 16));

        // Embedding streams: slow rotation, plus drift toward an orthogonal direction for appearance fakes.
        auto make_stream = [&](void) {
            auto basis = orthonormal(3, spec.emb_dim, rng);
            Tensor emb = Tensor::zeros({T, spec.emb_dim});
            const std::size_t n = std::min<std::size_t>(spec.emb_dim, 16);
            for (std::size_t t = 0; t < T; ++t) {
                const double base = kBaseRotation * static_cast<double>(t);
                const double drift = cls == 1 ? intensity * static_cast<double>(t) : 0.0;
                for (std::size_t d = 0; d < spec.emb_dim; ++d) {
                    double clean = std::cos(base) * basis[0][d] + std::sin(base) * basis[1][d];
                    double v = std::cos(drift) * clean + std::sin(drift) * basis[2][d] + kEmbeddingNoise * rng.normal();
                    if (d < n) v += kEmbeddingGain / kTokenGain * cls_response[(t * 2) * n + d];
                    emb[t * spec.emb_dim + d] = v;
                }
            }
            return emb;
        };
        Tensor clip = make_stream();
        Tensor dino = make_stream();

        // Tokens and depth features: class-conditional mean shift + per-video and per-element noise.
        std::vector<double> video_tok(spec.token_dim), video_feat(feat_channels);
        for (auto& v : video_tok) v = kVideoNoise * rng.normal();
        for (auto& v : video_feat) v = kVideoNoise * rng.normal();
        Tensor tokens = Tensor::zeros({T, spec.token_count, spec.token_dim});
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t l = 0; l < spec.token_count; ++l) {
                for (std::size_t c = 0; c < spec.token_dim; ++c) {
                    const std::size_t k = (t * spec.token_count + l) * spec.token_dim + c;
                    double shift = is_real ? 0.0 : strength * token_dir[static_cast<std::size_t>(cls)][c];
                    tokens[k] = response[k] + shift + video_tok[c] + kTokenNoise * rng.normal();
                }
            }
        }
        Tensor depth_feat = Tensor::zeros(spec.depth_feat_shape);
        const std::size_t inner = depth_feat.size() / (spec.depth_feat_shape[0] * feat_channels);
        for (std::size_t k = 0; k < depth_feat.size(); ++k) {
            const std::size_t c = (k / inner) % feat_channels;
            double shift = is_real ? 0.0 : strength * feat_dir[static_cast<std::size_t>(cls)][c];
            depth_feat[k] = shift + video_feat[c] + kDepthFeatNoise * rng.normal();
        }

        VideoManifest m;
        m.video_id = id;
        m.cohort_id = spec.cohort_id;
        m.is_real = is_real;
        m.planted_label = cls;
        const fs::path dir = out / "videos" / id;
        fs::create_directories(dir);
        write_artifact(m, Artifact::frames, frame_seq.tensor(), dir);
        write_artifact(m, Artifact::depth, depth, dir);
        write_artifact(m, Artifact::frame_flow, flow, dir);
        write_artifact(m, Artifact::depth_flow, depth_flow, dir);
        write_artifact(m, Artifact::clip_emb, clip, dir);
        write_artifact(m, Artifact::dino_emb, dino, dir);
        write_artifact(m, Artifact::tokens, tokens, dir);
        write_artifact(m, Artifact::depth_feat, depth_feat, dir);
        m.source = dir / "manifest.json";
        save_manifest(m, m.source);
        manifests.push_back(std::move(m));
    }
    return manifests;
}

}  // namespace forgescore
