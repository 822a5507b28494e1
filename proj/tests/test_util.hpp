#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "forgescore/error.hpp"
#include "forgescore/fusion.hpp"
#include "forgescore/rng.hpp"

namespace forgescore::testing {

class TempDir {
public:
    TempDir()
    {
        std::string pattern = (std::filesystem::temp_directory_path() / "forgescore-XXXXXX").string();
        if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0)
{
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return Tensor(std::move(shape), std::move(v));
}

// Random batch matching the config's dimensions.
inline std::vector<FusionSample> random_samples(const FusionConfig& c, std::size_t n, Rng& rng)
{
    std::vector<FusionSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        FusionSample s{"v" + std::to_string(i), TokenFeatures(random_tensor(rng, {c.frames, c.token_count, c.token_dim})),
                       {}, static_cast<int>(rng.below(c.class_count)), rng.uniform(1.0, 1.4)};
        s.f_y.resize(c.fused_dim);
        for (auto& x : s.f_y) x = rng.normal();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace forgescore::testing
