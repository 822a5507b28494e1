#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "forgescore/tensor.hpp"

namespace forgescore {

// a.b / (|a||b|), clamped to [-1, 1]. Throws on zero norm or dimension mismatch.
double cosine_sim(std::span<const double> a, std::span<const double> b);

struct ConsistencyOptions {
    std::size_t window = 5;
    double alpha = 0.5;  // weight of the consecutive-pair term
    double beta = 0.5;   // weight of the windowed term
};

struct ConsistencyReport {
    double consecutive_term = 0.0;
    double window_term = 0.0;
    double s_score = 0.0;
    std::size_t windows = 0;
    std::map<std::string, double> per_stream;
};

// Windows are consecutive non-overlapping blocks of `window` frames; a trailing partial block is kept only
// when it has at least two frames.
ConsistencyReport appearance_consistency(const EmbeddingSequence& seq, const ConsistencyOptions& opts = {});

// 1 - mean(s_score(clip), s_score(dino)). Higher means less consistent.
double appearance_anomaly_score(const EmbeddingSequence& clip, const EmbeddingSequence& dino,
                                const ConsistencyOptions& opts = {});
double appearance_anomaly_score(const EmbeddingSequence& single, const ConsistencyOptions& opts = {});

}  // namespace forgescore
