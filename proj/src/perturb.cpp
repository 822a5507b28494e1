#include "forgescore/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "forgescore/error.hpp"
#include "forgescore/warp.hpp"

namespace forgescore {

std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0.0)) throw usage_error("blur sigma must be > 0");
    auto radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;
    return k;
}

Image gaussian_blur(const ImageView& frame, double sigma)
{
    auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int h = static_cast<int>(frame.height);
    const int w = static_cast<int>(frame.width);
    Image tmp(frame.height, frame.width, frame.channels);
    Image out(frame.height, frame.width, frame.channels);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < frame.channels; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int xx = std::clamp(x + i, 0, w - 1);
                    acc += k[i + radius] * frame.at(y, xx, c);
                }
                tmp.at(y, x, c) = acc;
            }
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < frame.channels; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int yy = std::clamp(y + i, 0, h - 1);
                    acc += k[i + radius] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    return out;
}

Image resample(const ImageView& frame, std::size_t out_h, std::size_t out_w)
{
    if (out_h < 1 || out_w < 1) throw usage_error("resample: output dims must be >= 1 pixel");
    Image out(out_h, out_w, frame.channels);
    const double sy = static_cast<double>(frame.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(frame.width) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
        for (std::size_t x = 0; x < out_w; ++x) {
            double src_x = (static_cast<double>(x) + 0.5) * sx - 0.5;
            for (std::size_t c = 0; c < frame.channels; ++c) out.at(y, x, c) = bilinear_sample(frame, src_x, src_y, c);
        }
    }
    return out;
}

Image resize(const ImageView& frame, double ratio)
{
    if (!(ratio > 0.0 && ratio <= 1.0)) throw usage_error("resize ratio must be in (0, 1]");
    auto small_h = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(frame.height)));
    auto small_w = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(frame.width)));
    if (small_h < 1 || small_w < 1) throw usage_error("resize ratio produces a degenerate (< 1 pixel) image");
    auto small = resample(frame, small_h, small_w);
    return resample(small.view(), frame.height, frame.width);
}

Perturbation Perturbation::parse(const std::string& text)
{
    Perturbation p;
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto number = [&](double fallback) {
        if (arg.empty()) return fallback;
        try {
            std::size_t used = 0;
            double v = std::stod(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
            return v;
        } catch (const std::exception&) {
            throw usage_error("bad perturbation argument '" + text + "'");
        }
    };
    if (head == "none" || head.empty()) {
        p.kind = Kind::none;
    } else if (head == "blur") {
        p.kind = Kind::blur;
        p.sigma = number(3.0);
        if (!(p.sigma > 0.0)) throw usage_error("blur sigma must be > 0");
    } else if (head == "resize") {
        p.kind = Kind::resize;
        p.ratio = number(0.7);
        if (!(p.ratio > 0.0 && p.ratio <= 1.0)) throw usage_error("resize ratio must be in (0, 1]");
    } else if (head == "mixed") {
        p.kind = Kind::mixed;
    } else {
        throw usage_error("unknown perturbation '" + text + "' (expected blur:S, resize:R, mixed)");
    }
    return p;
}

std::string Perturbation::describe() const
{
    std::ostringstream os;
    switch (kind) {
    case Kind::none: os << "none"; break;
    case Kind::blur: os << "blur:" << sigma; break;
    case Kind::resize: os << "resize:" << ratio; break;
    case Kind::mixed: os << "mixed(blur:" << sigma << ",resize:" << ratio << ")"; break;
    }
    return os.str();
}

bool Perturbation::is_identity() const { return kind == Kind::none || (kind == Kind::resize && ratio == 1.0); }

Image apply(const Perturbation& p, const ImageView& frame)
{
    switch (p.kind) {
    case Perturbation::Kind::none: {
        Image out(frame.height, frame.width, frame.channels);
        std::copy(frame.data.begin(), frame.data.end(), out.data.begin());
        return out;
    }
    case Perturbation::Kind::blur: return gaussian_blur(frame, p.sigma);
    case Perturbation::Kind::resize: return resize(frame, p.ratio);
    case Perturbation::Kind::mixed: {
        auto blurred = gaussian_blur(frame, p.sigma);
        return resize(blurred.view(), p.ratio);
    }
    }
    throw usage_error("unknown perturbation kind");
}

FrameSequence apply(const Perturbation& p, const FrameSequence& seq)
{
    std::vector<double> data;
    data.reserve(seq.tensor().size());
    for (std::size_t t = 0; t < seq.frames(); ++t) {
        auto img = apply(p, seq.frame(t));
        data.insert(data.end(), img.data.begin(), img.data.end());
    }
    return FrameSequence(Tensor(seq.tensor().shape(), std::move(data)));
}

}  // namespace forgescore
