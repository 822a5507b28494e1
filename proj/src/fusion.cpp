#include "forgescore/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "forgescore/error.hpp"
#include "forgescore/rng.hpp"
#include "forgescore/tensor_io.hpp"

namespace forgescore {

using nlohmann::json;

FusionConfig FusionConfig::paper_scale()
{
    FusionConfig c;
    c.token_dim = 1408;
    c.token_count = 257;
    c.frames = 8;
    c.fused_dim = 1024;
    c.depth_feat_shape = {2, 1024, 48, 48};
    c.lr = 2e-5;
    c.epochs = 100;
    return c;
}

void FusionConfig::validate() const
{
    if (token_dim < 1 || fused_dim < 1) throw usage_error("fusion config: token_dim and fused_dim must be >= 1");
    if (token_count < 2) throw usage_error("fusion config: token_count must be >= 2 (CLS + patch)");
    if (class_count != 4) throw usage_error("fusion config: class_count is fixed at 4");
    if (depth_feat_shape.size() < 2 || depth_feat_shape[1] != fused_dim) {
        throw usage_error("fusion config: depth feature channel axis (axis 1) must equal fused_dim");
    }
    if (batch < 1) throw usage_error("fusion config: batch must be >= 1");
    if (!(lr >= 0.0) || !(eps > 0.0)) throw usage_error("fusion config: lr must be >= 0 and eps > 0");
}

json to_json(const FusionConfig& c)
{
    return {{"token_dim", c.token_dim},   {"token_count", c.token_count}, {"frames", c.frames},
            {"fused_dim", c.fused_dim},   {"depth_feat_shape", c.depth_feat_shape},
            {"class_count", c.class_count}, {"lr", c.lr},                 {"epochs", c.epochs},
            {"batch", c.batch},           {"seed", c.seed},               {"beta1", c.beta1},
            {"beta2", c.beta2},           {"eps", c.eps},                 {"weight_decay", c.weight_decay}};
}

FusionConfig fusion_config_from_json(const json& j, FusionConfig c)
{
    try {
        c.token_dim = j.value("token_dim", c.token_dim);
        c.token_count = j.value("token_count", c.token_count);
        c.frames = j.value("frames", c.frames);
        c.fused_dim = j.value("fused_dim", c.fused_dim);
        c.depth_feat_shape = j.value("depth_feat_shape", c.depth_feat_shape);
        c.class_count = j.value("class_count", c.class_count);
        c.lr = j.value("lr", c.lr);
        c.epochs = j.value("epochs", c.epochs);
        c.batch = j.value("batch", c.batch);
        c.seed = j.value("seed", c.seed);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.eps = j.value("eps", c.eps);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
    } catch (const json::exception& e) {
        throw usage_error(std::string("fusion config: ") + e.what());
    }
    return c;
}

namespace {

double sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> matvec(const Tensor& m, std::span<const double> x)
{
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    if (x.size() != cols) throw data_error("matvec: dimension mismatch");
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += m[r * cols + c] * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> matvec_t(const Tensor& m, std::span<const double> g)
{
    const std::size_t rows = m.dim(0), cols = m.dim(1);
    std::vector<double> y(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) y[c] += m[r * cols + c] * g[r];
    }
    return y;
}

void add_outer(Tensor& m, std::span<const double> a, std::span<const double> b)
{
    const std::size_t cols = m.dim(1);
    for (std::size_t r = 0; r < a.size(); ++r) {
        for (std::size_t c = 0; c < b.size(); ++c) m[r * cols + c] += a[r] * b[c];
    }
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

Tensor gaussian_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng)
{
    Tensor t = Tensor::zeros({rows, cols});
    for (auto& v : t.data()) v = scale * rng.normal();
    return t;
}

}  // namespace

FusionParams FusionParams::zeros(const FusionConfig& c)
{
    const std::size_t C = c.token_dim, D = c.fused_dim, K = c.class_count;
    return {Tensor::zeros({C, C}), Tensor::zeros({C, C}), Tensor::zeros({C, C}), Tensor::zeros({D, 2 * C}),
            Tensor::zeros({D}),    Tensor::zeros({1}),    Tensor::zeros({K, D}), Tensor::zeros({K})};
}

FusionParams FusionParams::init(const FusionConfig& c, std::uint64_t seed)
{
    const std::size_t C = c.token_dim, D = c.fused_dim, K = c.class_count;
    Rng rng(seed, "init");
    auto p = zeros(c);
    const double s_tok = 1.0 / std::sqrt(static_cast<double>(C));
    p.wq = gaussian_matrix(C, C, s_tok, rng);
    p.wk = gaussian_matrix(C, C, s_tok, rng);
    p.wv = gaussian_matrix(C, C, s_tok, rng);
    p.proj = gaussian_matrix(D, 2 * C, 1.0 / std::sqrt(static_cast<double>(2 * C)), rng);
    p.head = gaussian_matrix(K, D, 1.0 / std::sqrt(static_cast<double>(D)), rng);
    return p;
}

double FusionParams::alpha() const { return sigmoid(alpha_raw[0]); }

std::size_t FusionParams::count() const
{
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

void FusionParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn)
{
    fn("wq", wq);
    fn("wk", wk);
    fn("wv", wv);
    fn("proj", proj);
    fn("proj_bias", proj_bias);
    fn("alpha_raw", alpha_raw);
    fn("head", head);
    fn("head_bias", head_bias);
}

void FusionParams::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const
{
    const_cast<FusionParams*>(this)->for_each([&](const std::string& name, Tensor& t) { fn(name, t); });
}

std::vector<double> pool_tokens(const TokenFeatures& tokens)
{
    const std::size_t C = tokens.channels();
    std::vector<double> mean(C, 0.0);
    for (std::size_t t = 0; t < tokens.frames(); ++t) {
        for (std::size_t l = 1; l < tokens.tokens(); ++l) {
            auto tok = tokens.token(t, l);
            for (std::size_t c = 0; c < C; ++c) mean[c] += tok[c];
        }
    }
    const auto n = static_cast<double>(tokens.frames() * (tokens.tokens() - 1));
    for (auto& v : mean) v /= n;
    return mean;
}

std::vector<double> softmax(std::span<const double> logits)
{
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double log_sum_exp(std::span<const double> logits)
{
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    return mx + std::log(sum);
}

std::vector<double> attention_pool(const TokenFeatures& tokens, const FusionParams& p, FusionOutput* internals)
{
    const std::size_t C = tokens.channels();
    if (p.wq.dim(0) != C || p.wq.dim(1) != C || p.wk.dim(1) != C || p.wv.dim(1) != C) {
        throw data_error("attention_pool: token dim " + std::to_string(C) + " does not match parameters");
    }
    const std::size_t N = tokens.frames() * tokens.tokens();
    std::vector<double> mean(C, 0.0);
    for (std::size_t j = 0; j < N; ++j) {
        auto tok = tokens.tensor().data().subspan(j * C, C);
        for (std::size_t c = 0; c < C; ++c) mean[c] += tok[c];
    }
    for (auto& v : mean) v /= static_cast<double>(N);

    auto q = matvec(p.wq, mean);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(C));
    std::vector<double> keys(N * C), scores(N);
    for (std::size_t j = 0; j < N; ++j) {
        auto k = matvec(p.wk, tokens.tensor().data().subspan(j * C, C));
        std::copy(k.begin(), k.end(), keys.begin() + static_cast<std::ptrdiff_t>(j * C));
        scores[j] = dot(q, k) * inv_sqrt;
    }
    auto w = softmax(scores);
    // sum_j w_j Wv t_j == Wv (sum_j w_j t_j)
    std::vector<double> attended(C, 0.0);
    for (std::size_t j = 0; j < N; ++j) {
        auto tok = tokens.tensor().data().subspan(j * C, C);
        for (std::size_t c = 0; c < C; ++c) attended[c] += w[j] * tok[c];
    }
    auto out = matvec(p.wv, attended);
    if (internals) {
        internals->token_mean = std::move(mean);
        internals->query = std::move(q);
        internals->keys = std::move(keys);
        internals->attn_weights = std::move(w);
        internals->attended_tokens = std::move(attended);
    }
    return out;
}

std::vector<double> depth_pool(const Tensor& f)
{
    if (f.empty()) throw data_error("depth_pool: empty tensor");
    if (f.rank() < 2) throw data_error("depth_pool: tensor rank must be >= 2 (channel axis is axis 1)");
    const std::size_t outer = f.dim(0), channels = f.dim(1);
    const std::size_t inner = f.size() / (outer * channels);
    std::vector<double> out(channels, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double* base = f.data().data() + (o * channels + c) * inner;
            double acc = 0.0;
            for (std::size_t i = 0; i < inner; ++i) acc += base[i];
            out[c] += acc;
        }
    }
    for (auto& v : out) v /= static_cast<double>(outer * inner);
    return out;
}

FusionOutput forward(const TokenFeatures& tokens, std::span<const double> f_y, const FusionParams& p)
{
    const std::size_t D = p.proj.dim(0);
    if (f_y.size() != D) {
        throw data_error("forward: depth feature dim " + std::to_string(f_y.size()) + " != fused dim " + std::to_string(D));
    }
    FusionOutput out;
    out.f_avg = pool_tokens(tokens);
    out.f_attn = attention_pool(tokens, p, &out);
    out.f_x = out.f_avg;
    out.f_x.insert(out.f_x.end(), out.f_attn.begin(), out.f_attn.end());
    out.x_proj = matvec(p.proj, out.f_x);
    for (std::size_t i = 0; i < D; ++i) out.x_proj[i] += p.proj_bias[i];
    out.f_y.assign(f_y.begin(), f_y.end());
    out.alpha = p.alpha();
    out.f_hfr.resize(D);
    for (std::size_t i = 0; i < D; ++i) out.f_hfr[i] = out.alpha * out.x_proj[i] + (1.0 - out.alpha) * out.f_y[i];
    out.logits = matvec(p.head, out.f_hfr);
    for (std::size_t k = 0; k < out.logits.size(); ++k) out.logits[k] += p.head_bias[k];
    out.probabilities = softmax(out.logits);
    return out;
}

FusionOutput forward(const TokenFeatures& tokens, const Tensor& depth_features, const FusionParams& p)
{
    return forward(tokens, depth_pool(depth_features), p);
}

LossReport rank_weighted_loss(const std::vector<std::vector<double>>& logits, std::span<const int> labels,
                              std::span<const double> weights)
{
    if (logits.empty()) throw data_error("rank_weighted_loss: empty batch");
    if (logits.size() != labels.size() || labels.size() != weights.size()) {
        throw data_error("rank_weighted_loss: batch size mismatch");
    }
    LossReport r;
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& z = logits[i];
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= z.size()) throw data_error("label out of range");
        double li = std::max(0.0, log_sum_exp(z) - z[static_cast<std::size_t>(labels[i])]);
        r.per_sample.push_back(li);
        r.weights.push_back(weights[i]);
        r.weighted.push_back(weights[i] * li);
        sum += weights[i] * li;
    }
    r.total = sum / static_cast<double>(logits.size());
    return r;
}

double loss_and_gradient(const FusionParams& p, std::span<const FusionSample> batch, FusionParams* grad)
{
    if (batch.empty()) throw data_error("loss_and_gradient: empty batch");
    const std::size_t C = p.wq.dim(0), D = p.proj.dim(0);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(C));
    double total = 0.0;
    for (const auto& s : batch) {
        auto out = forward(s.tokens, s.f_y, p);
        const auto y = static_cast<std::size_t>(s.label);
        total += s.weight * (log_sum_exp(out.logits) - out.logits[y]);
        if (!grad) continue;

        std::vector<double> dz = out.probabilities;
        dz[y] -= 1.0;
        for (auto& v : dz) v *= s.weight * inv_n;
        add_outer(grad->head, dz, out.f_hfr);
        for (std::size_t k = 0; k < dz.size(); ++k) grad->head_bias[k] += dz[k];

        auto dh = matvec_t(p.head, dz);
        const double a = out.alpha;
        std::vector<double> dx(D);
        double dalpha = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            dx[i] = a * dh[i];
            dalpha += dh[i] * (out.x_proj[i] - out.f_y[i]);
        }
        grad->alpha_raw[0] += dalpha * a * (1.0 - a);
        add_outer(grad->proj, dx, out.f_x);
        for (std::size_t i = 0; i < D; ++i) grad->proj_bias[i] += dx[i];

        auto dfx = matvec_t(p.proj, dx);
        std::span<const double> dattn(dfx.data() + C, C);
        add_outer(grad->wv, dattn, out.attended_tokens);
        auto dattended = matvec_t(p.wv, dattn);

        const std::size_t N = out.attn_weights.size();
        const auto& w = out.attn_weights;
        std::vector<double> da(N);
        double mean_da = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            da[j] = dot(dattended, s.tokens.tensor().data().subspan(j * C, C));
            mean_da += w[j] * da[j];
        }
        std::vector<double> dq(C, 0.0), key_side(C, 0.0);
        for (std::size_t j = 0; j < N; ++j) {
            double ds = w[j] * (da[j] - mean_da) * inv_sqrt;
            auto tok = s.tokens.tensor().data().subspan(j * C, C);
            for (std::size_t c = 0; c < C; ++c) {
                dq[c] += ds * out.keys[j * C + c];
                key_side[c] += ds * tok[c];
            }
        }
        add_outer(grad->wk, out.query, key_side);
        add_outer(grad->wq, dq, out.token_mean);
    }
    return total * inv_n;
}

GradcheckResult gradcheck(const FusionParams& p, std::span<const FusionSample> batch, double h)
{
    FusionParams grad = p;
    grad.for_each([](const std::string&, Tensor& t) { std::fill(t.data().begin(), t.data().end(), 0.0); });
    loss_and_gradient(p, batch, &grad);

    GradcheckResult result;
    FusionParams probe = p;
    std::vector<std::pair<std::string, Tensor*>> probe_tensors;
    probe.for_each([&](const std::string& name, Tensor& t) { probe_tensors.emplace_back(name, &t); });
    std::vector<const Tensor*> grad_tensors;
    grad.for_each([&](const std::string&, const Tensor& t) { grad_tensors.push_back(&t); });

    for (std::size_t b = 0; b < probe_tensors.size(); ++b) {
        auto& [name, tensor] = probe_tensors[b];
        for (std::size_t i = 0; i < tensor->size(); ++i) {
            const double saved = (*tensor)[i];
            (*tensor)[i] = saved + h;
            double up = loss_and_gradient(probe, batch, nullptr);
            (*tensor)[i] = saved - h;
            double down = loss_and_gradient(probe, batch, nullptr);
            (*tensor)[i] = saved;
            double numeric = (up - down) / (2.0 * h);
            double analytic = (*grad_tensors[b])[i];
            double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            if (rel > result.max_rel_error || result.worst_param.empty()) {
                result = {rel, name, i, analytic, numeric};
            }
        }
    }
    return result;
}

AdamW::AdamW(const FusionConfig& c, const FusionParams& shape_like)
    : lr_(c.lr), beta1_(c.beta1), beta2_(c.beta2), eps_(c.eps), decay_(c.weight_decay), m_(shape_like), v_(shape_like)
{
    auto zero = [](const std::string&, Tensor& t) { std::fill(t.data().begin(), t.data().end(), 0.0); };
    m_.for_each(zero);
    v_.for_each(zero);
}

void AdamW::step(FusionParams& p, const FusionParams& grad)
{
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<Tensor*> params, ms, vs;
    std::vector<const Tensor*> gs;
    p.for_each([&](const std::string&, Tensor& t) { params.push_back(&t); });
    m_.for_each([&](const std::string&, Tensor& t) { ms.push_back(&t); });
    v_.for_each([&](const std::string&, Tensor& t) { vs.push_back(&t); });
    grad.for_each([&](const std::string&, const Tensor& t) { gs.push_back(&t); });
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& theta = *params[b];
        auto& m = *ms[b];
        auto& v = *vs[b];
        const auto& g = *gs[b];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_) + decay_ * theta[i];
            theta[i] -= lr_ * update;
        }
    }
}

int predict(const FusionSample& s, const FusionParams& p, std::vector<double>* probabilities)
{
    auto out = forward(s.tokens, s.f_y, p);
    if (probabilities) *probabilities = out.probabilities;
    return static_cast<int>(std::max_element(out.logits.begin(), out.logits.end()) - out.logits.begin());
}

namespace {

void validate_sample(const FusionSample& s, const FusionConfig& c)
{
    if (s.tokens.channels() != c.token_dim) {
        throw data_error("video " + s.video_id + ": token dim " + std::to_string(s.tokens.channels()) +
                         " != config token_dim " + std::to_string(c.token_dim));
    }
    if (s.f_y.size() != c.fused_dim) {
        throw data_error("video " + s.video_id + ": depth feature dim " + std::to_string(s.f_y.size()) +
                         " != config fused_dim " + std::to_string(c.fused_dim));
    }
    if (s.label < 0 || s.label > 3) throw data_error("video " + s.video_id + ": label out of range");
}

double accuracy_of(const FusionParams& p, std::span<const FusionSample> set)
{
    std::size_t correct = 0;
    for (const auto& s : set) correct += predict(s, p) == s.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(set.size());
}

}  // namespace

TrainResult train(std::span<const FusionSample> train_set, std::span<const FusionSample> val, const FusionConfig& config)
{
    config.validate();
    if (train_set.empty()) throw data_error("train: empty training set");
    for (const auto& s : train_set) validate_sample(s, config);
    for (const auto& s : val) validate_sample(s, config);

    TrainResult result;
    auto params = FusionParams::init(config, config.seed);
    AdamW opt(config, params);
    Rng shuffler(config.seed, "shuffle");
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto zero_grad = params;
    zero_grad.for_each([](const std::string&, Tensor& t) { std::fill(t.data().begin(), t.data().end(), 0.0); });

    bool have_best = false;
    double best_val_loss = 0.0;
    result.params = params;
    std::vector<FusionSample> batch;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffler.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + config.batch); ++i) batch.push_back(train_set[order[i]]);
            auto grad = zero_grad;
            double loss = loss_and_gradient(params, batch, &grad);
            if (!std::isfinite(loss)) {
                throw numeric_error("non-finite training loss at epoch " + std::to_string(epoch) + ", optimizer step " +
                                    std::to_string(opt.steps() + 1) + " (lr " + std::to_string(config.lr) + ")");
            }
            opt.step(params, grad);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_and_gradient(params, train_set, nullptr);
        if (!std::isfinite(stats.train_loss)) {
            throw numeric_error("non-finite training loss after epoch " + std::to_string(epoch) + ", optimizer step " +
                                std::to_string(opt.steps()) + " (lr " + std::to_string(config.lr) + ")");
        }
        if (!val.empty()) {
            stats.val_loss = loss_and_gradient(params, val, nullptr);
            stats.val_acc = accuracy_of(params, val);
            bool better = !have_best || stats.val_acc > result.best_val_acc ||
                          (stats.val_acc == result.best_val_acc && stats.val_loss < best_val_loss);
            if (better) {
                have_best = true;
                result.best_val_acc = stats.val_acc;
                best_val_loss = stats.val_loss;
                result.best_epoch = epoch;
                result.params = params;
            }
        }
        result.curve.push_back(stats);
    }
    if (val.empty()) {
        result.params = params;
        result.best_epoch = config.epochs;
    }
    return result;
}

void save_checkpoint(const std::filesystem::path& dir, const FusionParams& p, const FusionConfig& c, const json& meta)
{
    std::filesystem::create_directories(dir);
    json names = json::array();
    p.for_each([&](const std::string& name, const Tensor& t) {
        write_tensor(t, dir / (name + ".fvt"));
        names.push_back(name);
    });
    json header = {{"format", "FVT1"}, {"config", to_json(c)}, {"params", names}, {"meta", meta}};
    std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
    if (!out) throw data_error("cannot write checkpoint header in " + dir.string());
    out << header.dump(2) << "\n";
}

FusionParams load_checkpoint(const std::filesystem::path& dir, FusionConfig* config)
{
    std::ifstream in(dir / "checkpoint.json");
    if (!in) throw data_error("checkpoint header not found in " + dir.string());
    json header;
    try {
        header = json::parse(in);
    } catch (const json::exception& e) {
        throw data_error("checkpoint header " + (dir / "checkpoint.json").string() + ": " + e.what());
    }
    auto c = fusion_config_from_json(header.at("config"));
    auto p = FusionParams::zeros(c);
    p.for_each([&](const std::string& name, Tensor& t) {
        auto loaded = read_tensor(dir / (name + ".fvt"));
        if (loaded.shape() != t.shape()) throw data_error("checkpoint tensor " + name + " has unexpected shape");
        t = std::move(loaded);
    });
    if (config) *config = c;
    return p;
}

}  // namespace forgescore
