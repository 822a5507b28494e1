#include "forgescore/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forgescore/error.hpp"

namespace forgescore {

namespace {

struct Taps {
    std::size_t x0, x1, y0, y1;
    double fx, fy;
};

Taps taps(const ImageView& f, double x, double y)
{
    x = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
    Taps t{};
    t.x0 = static_cast<std::size_t>(std::floor(x));
    t.y0 = static_cast<std::size_t>(std::floor(y));
    t.x1 = std::min(t.x0 + 1, f.width - 1);
    t.y1 = std::min(t.y0 + 1, f.height - 1);
    t.fx = x - static_cast<double>(t.x0);
    t.fy = y - static_cast<double>(t.y0);
    return t;
}

double interp(const ImageView& f, const Taps& t, std::size_t c)
{
    double top = f.at(t.y0, t.x0, c) * (1.0 - t.fx) + f.at(t.y0, t.x1, c) * t.fx;
    double bottom = f.at(t.y1, t.x0, c) * (1.0 - t.fx) + f.at(t.y1, t.x1, c) * t.fx;
    return top * (1.0 - t.fy) + bottom * t.fy;
}

}  // namespace

double bilinear_sample(const ImageView& field, double x, double y, std::size_t channel)
{
    return interp(field, taps(field, x, y), channel);
}

std::vector<double> bilinear_sample_all(const ImageView& field, double x, double y)
{
    auto t = taps(field, x, y);
    std::vector<double> out(field.channels);
    for (std::size_t c = 0; c < field.channels; ++c) out[c] = interp(field, t, c);
    return out;
}

Image warp(const ImageView& source, const ImageView& flow)
{
    if (flow.channels != 2 || flow.height != source.height || flow.width != source.width) {
        throw data_error("warp: flow shape [" + std::to_string(flow.height) + "," + std::to_string(flow.width) + "," +
                         std::to_string(flow.channels) + "] does not match source [" + std::to_string(source.height) +
                         "," + std::to_string(source.width) + "]");
    }
    Image out(source.height, source.width, source.channels);
    for (std::size_t y = 0; y < source.height; ++y) {
        for (std::size_t x = 0; x < source.width; ++x) {
            auto t = taps(source, static_cast<double>(x) + flow.at(y, x, 0), static_cast<double>(y) + flow.at(y, x, 1));
            for (std::size_t c = 0; c < source.channels; ++c) out.at(y, x, c) = interp(source, t, c);
        }
    }
    return out;
}

Tensor warp(const Tensor& source, const Tensor& flow)
{
    auto out = warp(image_view(source), image_view(flow));
    return to_tensor(out, source.rank() == 2);
}

WarpErrorReport warping_error(const std::vector<ImageView>& frames, const FlowField& flows, std::size_t border)
{
    if (frames.size() < 2) throw data_error("warping error needs T >= 2 frames");
    if (flows.pairs() != frames.size() - 1) {
        throw data_error("warping error: flow has " + std::to_string(flows.pairs()) + " pairs, expected " +
                         std::to_string(frames.size() - 1));
    }
    const auto h = frames[0].height;
    const auto w = frames[0].width;
    if (flows.height() != h || flows.width() != w) throw data_error("warping error: flow spatial dims differ from frames");
    if (2 * border >= h || 2 * border >= w) throw data_error("warping error: border crop leaves no pixels");

    WarpErrorReport report;
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const auto& next = frames[t + 1];
        if (frames[t].height != h || frames[t].width != w || next.height != h || next.width != w ||
            next.channels != frames[t].channels) {
            throw data_error("warping error: frame " + std::to_string(t + 1) + " dims differ");
        }
        auto warped = warp(frames[t], flows.pair(t));
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t y = border; y < h - border; ++y) {
            for (std::size_t x = border; x < w - border; ++x) {
                for (std::size_t c = 0; c < next.channels; ++c) {
                    double d = warped.at(y, x, c) - next.at(y, x, c);
                    sum += d * d;
                    ++count;
                }
            }
        }
        report.per_pair.push_back(sum / static_cast<double>(count));
    }
    double total = 0.0;
    for (double e : report.per_pair) total += e;
    report.total = total / static_cast<double>(report.per_pair.size());
    return report;
}

WarpErrorReport warping_error(const FrameSequence& seq, const FlowField& flows, std::size_t border)
{
    std::vector<ImageView> frames;
    for (std::size_t t = 0; t < seq.frames(); ++t) frames.push_back(seq.frame(t));
    return warping_error(frames, flows, border);
}

WarpErrorReport warping_error(const DepthSequence& seq, const FlowField& flows, std::size_t border)
{
    std::vector<ImageView> frames;
    for (std::size_t t = 0; t < seq.frames(); ++t) frames.push_back(seq.frame(t));
    return warping_error(frames, flows, border);
}

}  // namespace forgescore
