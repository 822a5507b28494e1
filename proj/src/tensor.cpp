#include "forgescore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "forgescore/error.hpp"

namespace forgescore {

namespace {

std::string shape_string(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

void require_rank(const Tensor& t, std::size_t rank, const char* what)
{
    if (t.rank() != rank) {
        throw data_error(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         shape_string(t.shape()));
    }
}

}  // namespace

std::size_t shape_volume(const Shape& shape)
{
    std::size_t n = 1;
    for (auto d : shape) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) {
            throw data_error("tensor shape overflows: " + shape_string(shape));
        }
        n *= d;
    }
    return n;
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_.empty()) throw data_error("tensor shape must be non-empty");
    for (auto d : shape_) {
        if (d == 0) throw data_error("tensor dims must be >= 1, got " + shape_string(shape_));
    }
    if (shape_volume(shape_) != data_.size()) {
        throw data_error("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
    }
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value)
{
    auto n = shape_volume(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageView image_view(const Tensor& t)
{
    if (t.rank() == 2) return {t.data(), t.dim(0), t.dim(1), 1};
    if (t.rank() == 3) return {t.data(), t.dim(0), t.dim(1), t.dim(2)};
    throw data_error("image tensor must be [H,W] or [H,W,C], got " + shape_string(t.shape()));
}

Tensor to_tensor(const Image& img, bool squeeze_single_channel)
{
    if (squeeze_single_channel && img.channels == 1) return Tensor({img.height, img.width}, img.data);
    return Tensor({img.height, img.width, img.channels}, img.data);
}

FrameSequence::FrameSequence(Tensor t) : t_(std::move(t))
{
    require_rank(t_, 4, "frame sequence");
    if (t_.dim(0) < 2) throw data_error("frame sequence needs T >= 2");
    if (t_.dim(3) != 1 && t_.dim(3) != 3) throw data_error("frame sequence channels must be 1 or 3");
    if (!t_.all_finite()) throw data_error("frame sequence contains non-finite values");
    for (auto& v : t_.data()) v = std::clamp(v, 0.0, 1.0);
}

ImageView FrameSequence::frame(std::size_t t) const
{
    std::size_t plane = height() * width() * channels();
    return {t_.data().subspan(t * plane, plane), height(), width(), channels()};
}

DepthSequence::DepthSequence(Tensor t) : t_(std::move(t))
{
    require_rank(t_, 3, "depth sequence");
    if (t_.dim(0) < 2) throw data_error("depth sequence needs T >= 2");
    if (!t_.all_finite()) throw data_error("depth sequence contains non-finite values");
    auto [lo, hi] = std::minmax_element(t_.data().begin(), t_.data().end());
    double mn = *lo;
    double range = *hi - *lo;
    for (auto& v : t_.data()) v = range > 0.0 ? (v - mn) / range : 0.0;
}

ImageView DepthSequence::frame(std::size_t t) const
{
    std::size_t plane = height() * width();
    return {t_.data().subspan(t * plane, plane), height(), width(), 1};
}

FlowField::FlowField(Tensor t) : t_(std::move(t))
{
    require_rank(t_, 4, "flow field");
    if (t_.dim(3) != 2) throw data_error("flow field last axis must be 2 (dx, dy)");
    if (!t_.all_finite()) throw data_error("flow field contains non-finite values");
}

ImageView FlowField::pair(std::size_t t) const
{
    std::size_t plane = height() * width() * 2;
    return {t_.data().subspan(t * plane, plane), height(), width(), 2};
}

EmbeddingSequence::EmbeddingSequence(Tensor t) : t_(std::move(t))
{
    require_rank(t_, 2, "embedding sequence");
    if (t_.dim(0) < 2) throw data_error("embedding sequence needs T >= 2");
    if (!t_.all_finite()) throw data_error("embedding sequence contains non-finite values");
    for (std::size_t i = 0; i < frames(); ++i) {
        double ss = 0.0;
        for (double v : row(i)) ss += v * v;
        if (ss == 0.0) throw data_error("embedding row " + std::to_string(i) + " has zero norm");
    }
}

TokenFeatures::TokenFeatures(Tensor t) : t_(std::move(t))
{
    require_rank(t_, 3, "token features");
    if (t_.dim(1) < 2) throw data_error("token features need L >= 2 (CLS + one patch token)");
    if (!t_.all_finite()) throw data_error("token features contain non-finite values");
}

}  // namespace forgescore
