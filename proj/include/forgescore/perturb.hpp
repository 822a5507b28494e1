#pragma once

#include <string>
#include <vector>

#include "forgescore/tensor.hpp"

namespace forgescore {

// Separable Gaussian, radius ceil(3*sigma), normalized to sum 1, edge-clamped.
std::vector<double> gaussian_kernel(double sigma);
Image gaussian_blur(const ImageView& frame, double sigma);

// Bilinear downscale to floor(ratio*H) x floor(ratio*W) and back up to H x W.
Image resize(const ImageView& frame, double ratio);

// Bilinear resample to an arbitrary size (pixel-center aligned, edge-clamped).
Image resample(const ImageView& frame, std::size_t out_h, std::size_t out_w);

struct Perturbation {
    enum class Kind { none, blur, resize, mixed };
    Kind kind = Kind::none;
    double sigma = 3.0;
    double ratio = 0.7;

    // "blur:3", "resize:0.7", "mixed", "none"
    static Perturbation parse(const std::string& text);
    std::string describe() const;
    bool is_identity() const;
};

Image apply(const Perturbation& p, const ImageView& frame);
FrameSequence apply(const Perturbation& p, const FrameSequence& seq);

}  // namespace forgescore
