#include <cmath>

#include <gtest/gtest.h>

#include "forgescore/perturb.hpp"
#include "test_util.hpp"

using namespace forgescore;

TEST(Perturb, KernelNormalizedAndSymmetric)
{
    auto k = gaussian_kernel(3.0);
    ASSERT_EQ(k.size(), 19u);  // radius ceil(3 sigma) = 9
    double sum = 0.0;
    for (double v : k) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-15);
    for (std::size_t i = 0; i < k.size(); ++i) EXPECT_EQ(k[i], k[k.size() - 1 - i]);
}

TEST(Perturb, BlurOfConstantIsConstant)
{
    Image img(20, 17, 3, 0.42);
    auto out = gaussian_blur(img.view(), 3.0);
    for (double v : out.data) EXPECT_NEAR(v, 0.42, 1e-12);
}

TEST(Perturb, BlurImpulseMatchesDirectKernel)
{
    const double sigma = 3.0;
    const int radius = 9;
    Image img(41, 41, 1);
    img.at(20, 20) = 1.0;
    auto out = gaussian_blur(img.view(), sigma);

    // Independent 2-D kernel: normalized exp(-(dx^2 + dy^2) / 2 sigma^2) over the same square support.
    double norm = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) norm += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            double expected = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) / norm;
            EXPECT_NEAR(out.at(20 + dy, 20 + dx), expected, 1e-15);
        }
    }
    EXPECT_NEAR(out.at(20, 20), 1.0 / norm, 1e-15);
    EXPECT_EQ(out.at(20, 20 + radius + 1), 0.0);
}

TEST(Perturb, ResizeRatioOneIsIdentity)
{
    Rng rng(8);
    Image img(9, 11, 3);
    for (auto& v : img.data) v = rng.uniform();
    auto out = resize(img.view(), 1.0);
    ASSERT_EQ(out.data.size(), img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(out.data[i], img.data[i], 1e-12);
}

TEST(Perturb, ResizeKeepsShapeAndConstants)
{
    Image img(32, 32, 1, 0.3);
    auto out = resize(img.view(), 0.7);
    EXPECT_EQ(out.height, 32u);
    EXPECT_EQ(out.width, 32u);
    for (double v : out.data) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Perturb, ResampleDownUpOfLinearRamp)
{
    Image img(1, 8, 1);
    for (std::size_t x = 0; x < 8; ++x) img.at(0, x) = static_cast<double>(x);
    auto half = resample(img.view(), 1, 4);
    // Pixel-center alignment: output x maps to (x + 0.5) * 2 - 0.5.
    for (std::size_t x = 0; x < 4; ++x) EXPECT_DOUBLE_EQ(half.at(0, x), 2.0 * static_cast<double>(x) + 0.5);
}

TEST(Perturb, Parse)
{
    auto b = Perturbation::parse("blur:3");
    EXPECT_EQ(b.kind, Perturbation::Kind::blur);
    EXPECT_EQ(b.sigma, 3.0);
    auto r = Perturbation::parse("resize:0.7");
    EXPECT_EQ(r.kind, Perturbation::Kind::resize);
    EXPECT_EQ(r.ratio, 0.7);
    EXPECT_EQ(Perturbation::parse("mixed").kind, Perturbation::Kind::mixed);
    EXPECT_TRUE(Perturbation::parse("none").is_identity());
    EXPECT_TRUE(Perturbation::parse("resize:1").is_identity());
    EXPECT_THROW(Perturbation::parse("jpeg:75"), Error);
    EXPECT_THROW(Perturbation::parse("blur:-1"), Error);
    EXPECT_THROW(Perturbation::parse("resize:0"), Error);
}

TEST(Perturb, MixedIsBlurThenResize)
{
    Rng rng(4);
    Image img(16, 16, 1);
    for (auto& v : img.data) v = rng.uniform();
    auto mixed = apply(Perturbation::parse("mixed"), img.view());
    auto manual = resize(gaussian_blur(img.view(), 3.0).view(), 0.7);
    EXPECT_EQ(mixed.data, manual.data);
}
