#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgescore/tensor.hpp"

namespace forgescore {

struct FusionConfig {
    std::size_t token_dim = 16;    // C_tok
    std::size_t token_count = 5;   // L, including CLS
    std::size_t frames = 4;        // T
    std::size_t fused_dim = 32;    // D_f; must equal the depth feature channel count
    Shape depth_feat_shape = {2, 32, 4, 4};
    std::size_t class_count = 4;
    double lr = 1e-2;
    std::size_t epochs = 200;
    std::size_t batch = 16;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    // Full-size defaults: 1408-d tokens (f_x = 2816), 1024-d depth features, 8 frames, lr 2e-5, 100 epochs.
    static FusionConfig paper_scale();
    void validate() const;
};

nlohmann::json to_json(const FusionConfig& c);
FusionConfig fusion_config_from_json(const nlohmann::json& j, FusionConfig base = {});

// All learnable weights of the fusion head. Matrices are [rows, cols] tensors.
struct FusionParams {
    Tensor wq, wk, wv;  // [C, C]
    Tensor proj;        // [D_f, 2C]
    Tensor proj_bias;   // [D_f]
    Tensor alpha_raw;   // [1]; fusion weight = sigmoid(alpha_raw)
    Tensor head;        // [K, D_f]
    Tensor head_bias;   // [K]

    static FusionParams zeros(const FusionConfig& c);
    static FusionParams init(const FusionConfig& c, std::uint64_t seed);

    double alpha() const;
    std::size_t count() const;

    // Visits (name, tensor) in a fixed order; used by the optimizer, gradcheck and checkpoints.
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    friend bool operator==(const FusionParams&, const FusionParams&) = default;
};

struct FusionOutput {
    std::vector<double> f_avg, f_attn, f_x, x_proj, f_y, f_hfr;
    std::vector<double> logits, probabilities;
    double alpha = 0.0;

    // Attention internals kept for the backward pass.
    std::vector<double> token_mean, query, attn_weights, attended_tokens;
    std::vector<double> keys;  // [N, C]
};

// Mean over every non-CLS token (token 0 of each frame is excluded).
std::vector<double> pool_tokens(const TokenFeatures& tokens);

// Single-head scaled dot-product attention with a mean-pooled query over all T*L tokens.
std::vector<double> attention_pool(const TokenFeatures& tokens, const FusionParams& p, FusionOutput* internals = nullptr);

// Mean over every axis except axis 1 (channels).
std::vector<double> depth_pool(const Tensor& features);

FusionOutput forward(const TokenFeatures& tokens, std::span<const double> f_y, const FusionParams& p);
FusionOutput forward(const TokenFeatures& tokens, const Tensor& depth_features, const FusionParams& p);

std::vector<double> softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> logits);

struct LossReport {
    std::vector<double> per_sample;  // L_i = -log p_i[label]
    std::vector<double> weights;     // alpha_i
    std::vector<double> weighted;    // alpha_i * L_i
    double total = 0.0;              // mean(weighted)
};

LossReport rank_weighted_loss(const std::vector<std::vector<double>>& logits, std::span<const int> labels,
                              std::span<const double> weights);

struct FusionSample {
    std::string video_id;
    TokenFeatures tokens;
    std::vector<double> f_y;  // depth_pool of the depth features
    int label = 0;
    double weight = 1.0;
};

// L_total over the batch; accumulates dL_total/dparam into *grad when given (grad must be shaped like p).
double loss_and_gradient(const FusionParams& p, std::span<const FusionSample> batch, FusionParams* grad);

struct GradcheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central differences (step h) on every parameter element vs. the analytic gradient.
// Relative error = |ga - gn| / max(1e-8, |ga| + |gn|).
GradcheckResult gradcheck(const FusionParams& p, std::span<const FusionSample> batch, double h = 1e-5);

class AdamW {
public:
    AdamW(const FusionConfig& c, const FusionParams& shape_like);
    void step(FusionParams& p, const FusionParams& grad);
    std::size_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_, decay_;
    std::size_t t_ = 0;
    FusionParams m_, v_;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainResult {
    FusionParams params;  // best validation accuracy (ties: lower val loss, then earlier epoch)
    std::vector<EpochStats> curve;
    std::size_t best_epoch = 0;
    double best_val_acc = 0.0;
};

// Mini-batch AdamW; batches drawn from a seeded shuffle each epoch. When `val` is empty the final
// parameters are returned. Throws a numeric Error on a non-finite loss.
TrainResult train(std::span<const FusionSample> train_set, std::span<const FusionSample> val,
                  const FusionConfig& config);

int predict(const FusionSample& s, const FusionParams& p, std::vector<double>* probabilities = nullptr);

void save_checkpoint(const std::filesystem::path& dir, const FusionParams& p, const FusionConfig& c,
                     const nlohmann::json& meta);
FusionParams load_checkpoint(const std::filesystem::path& dir, FusionConfig* config = nullptr);

}  // namespace forgescore
