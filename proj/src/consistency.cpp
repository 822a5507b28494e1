#include "forgescore/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "forgescore/error.hpp"

namespace forgescore {

double cosine_sim(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw data_error("cosine_sim: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw data_error("cosine_sim: zero-norm vector");
    // sqrt(na * nb) rather than sqrt(na) * sqrt(nb): identical vectors then give exactly 1.
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

ConsistencyReport appearance_consistency(const EmbeddingSequence& seq, const ConsistencyOptions& opts)
{
    if (opts.window < 2) throw usage_error("consistency window must be >= 2");
    const std::size_t frames = seq.frames();

    std::vector<double> pair_cos(frames - 1);
    for (std::size_t t = 1; t < frames; ++t) pair_cos[t - 1] = cosine_sim(seq.row(t - 1), seq.row(t));

    ConsistencyReport r;
    double sum = 0.0;
    for (double c : pair_cos) sum += c;
    r.consecutive_term = sum / static_cast<double>(frames - 1);

    double window_sum = 0.0;
    for (std::size_t start = 0; start < frames; start += opts.window) {
        std::size_t len = std::min(opts.window, frames - start);
        if (len < 2) break;
        double s = 0.0;
        for (std::size_t j = start + 1; j < start + len; ++j) s += pair_cos[j - 1];
        window_sum += s / static_cast<double>(len - 1);
        ++r.windows;
    }
    r.window_term = window_sum / static_cast<double>(r.windows);
    r.s_score = opts.alpha * r.consecutive_term + opts.beta * r.window_term;
    return r;
}

double appearance_anomaly_score(const EmbeddingSequence& clip, const EmbeddingSequence& dino,
                                const ConsistencyOptions& opts)
{
    double a = appearance_consistency(clip, opts).s_score;
    double b = appearance_consistency(dino, opts).s_score;
    return 1.0 - 0.5 * (a + b);
}

double appearance_anomaly_score(const EmbeddingSequence& single, const ConsistencyOptions& opts)
{
    return 1.0 - appearance_consistency(single, opts).s_score;
}

}  // namespace forgescore
