#pragma once

#include <cstddef>
#include <vector>

#include "forgescore/tensor.hpp"

namespace forgescore {

// Bilinear interpolation with clamp-to-edge: (x, y) is clamped to [0, W-1] x [0, H-1] first.
double bilinear_sample(const ImageView& field, double x, double y, std::size_t channel = 0);
std::vector<double> bilinear_sample_all(const ImageView& field, double x, double y);

// Backward warp: out(p) = source(p + flow(p)). flow is [H, W, 2] holding (dx, dy).
Image warp(const ImageView& source, const ImageView& flow);
Tensor warp(const Tensor& source, const Tensor& flow);

struct WarpErrorReport {
    std::vector<double> per_pair;  // E_t, mean squared difference per consecutive pair
    double total = 0.0;            // E_warp = mean(per_pair)
};

// E_t = mean over pixels and channels of (warp(I_t, F_t) - I_{t+1})^2. border > 0 excludes that many
// pixels on every side from the mean (the warp itself still uses the full frame).
WarpErrorReport warping_error(const std::vector<ImageView>& frames, const FlowField& flows, std::size_t border = 0);
WarpErrorReport warping_error(const FrameSequence& seq, const FlowField& flows, std::size_t border = 0);
WarpErrorReport warping_error(const DepthSequence& seq, const FlowField& flows, std::size_t border = 0);

}  // namespace forgescore
