#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace forgescore {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);

// Dense row-major f64 tensor. Value type; immutable once shared.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Read-only view of one image plane set [H, W, C] (C = 1 for depth/grayscale).
struct ImageView {
    std::span<const double> data;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;

    double at(std::size_t y, std::size_t x, std::size_t c = 0) const
    {
        return data[(y * width + x) * channels + c];
    }
};

// Mutable owning image [H, W, C].
struct Image {
    std::vector<double> data;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;

    Image() = default;
    Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : data(h * w * c, fill), height(h), width(w), channels(c)
    {
    }

    ImageView view() const { return {data, height, width, channels}; }
    double& at(std::size_t y, std::size_t x, std::size_t c = 0) { return data[(y * width + x) * channels + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c = 0) const { return data[(y * width + x) * channels + c]; }
};

// Accepts [H, W] or [H, W, C].
ImageView image_view(const Tensor& t);
Tensor to_tensor(const Image& img, bool squeeze_single_channel);

// Typed artifact wrappers. Constructors validate the documented invariants and throw on violation.

class FrameSequence {
public:
    explicit FrameSequence(Tensor t);  // [T, H, W, C], C in {1, 3}, T >= 2, values clamped to [0, 1]
    const Tensor& tensor() const noexcept { return t_; }
    std::size_t frames() const { return t_.dim(0); }
    std::size_t height() const { return t_.dim(1); }
    std::size_t width() const { return t_.dim(2); }
    std::size_t channels() const { return t_.dim(3); }
    ImageView frame(std::size_t t) const;

private:
    Tensor t_;
};

class DepthSequence {
public:
    explicit DepthSequence(Tensor t);  // [T, H, W], T >= 2, linearly normalized per video to [0, 1]
    const Tensor& tensor() const noexcept { return t_; }
    std::size_t frames() const { return t_.dim(0); }
    std::size_t height() const { return t_.dim(1); }
    std::size_t width() const { return t_.dim(2); }
    ImageView frame(std::size_t t) const;

private:
    Tensor t_;
};

class FlowField {
public:
    explicit FlowField(Tensor t);  // [T-1, H, W, 2], (dx, dy) backward correspondence on the target grid
    const Tensor& tensor() const noexcept { return t_; }
    std::size_t pairs() const { return t_.dim(0); }
    std::size_t height() const { return t_.dim(1); }
    std::size_t width() const { return t_.dim(2); }
    ImageView pair(std::size_t t) const;

private:
    Tensor t_;
};

class EmbeddingSequence {
public:
    explicit EmbeddingSequence(Tensor t);  // [T, D], T >= 2, nonzero rows
    const Tensor& tensor() const noexcept { return t_; }
    std::size_t frames() const { return t_.dim(0); }
    std::size_t dim() const { return t_.dim(1); }
    std::span<const double> row(std::size_t t) const { return t_.data().subspan(t * dim(), dim()); }

private:
    Tensor t_;
};

class TokenFeatures {
public:
    explicit TokenFeatures(Tensor t);  // [T, L, C], L >= 2, token 0 of each frame is CLS
    const Tensor& tensor() const noexcept { return t_; }
    std::size_t frames() const { return t_.dim(0); }
    std::size_t tokens() const { return t_.dim(1); }
    std::size_t channels() const { return t_.dim(2); }
    std::span<const double> token(std::size_t t, std::size_t l) const
    {
        return t_.data().subspan((t * tokens() + l) * channels(), channels());
    }

private:
    Tensor t_;
};

}  // namespace forgescore
