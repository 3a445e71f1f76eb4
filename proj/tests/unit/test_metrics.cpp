#include <cmath>

#include <gtest/gtest.h>

#include "foveate/errors.hpp"
#include "foveate/metrics.hpp"
#include "foveate/synthetic.hpp"
#include "test_support.hpp"

namespace foveate {
namespace {

// Regression value for (1 - VSI) + MSE of all-zero against all-0.5 images. Flat
// images have equal saliency, no gradients and no chroma, so VSI is 1.
constexpr double kZerosHalvesLoss = 0.25;

TEST(Mse, Examples) {
    const ImageBuffer z = testing::constant_image(8, 6, {0, 0, 0});
    const ImageBuffer o = testing::constant_image(8, 6, {1, 1, 1});
    const ImageBuffer h = testing::constant_image(8, 6, {0.5, 0.5, 0.5});
    EXPECT_DOUBLE_EQ(mse(z, z), 0.0);
    EXPECT_DOUBLE_EQ(mse(z, o), 1.0);
    EXPECT_DOUBLE_EQ(mse(z, h), 0.25);
    EXPECT_THROW((void)mse(z, ImageBuffer(6, 8)), DimensionMismatch);
}

TEST(Mse, SymmetricAndSingleChannel) {
    const ImageBuffer a = testing::noise_image(20, 10, 1);
    const ImageBuffer b = testing::noise_image(20, 10, 2);
    EXPECT_DOUBLE_EQ(mse(a, b), mse(b, a));
    ImageBuffer c = a;
    c.at(3, 4, 1) = a.at(3, 4, 1) > 0.5 ? a.at(3, 4, 1) - 0.3 : a.at(3, 4, 1) + 0.3;
    EXPECT_NEAR(mse(a, c), 0.09 / (20 * 10 * 3), 1e-15);
}

TEST(Psnr, KnownValue) {
    const ImageBuffer z = testing::constant_image(4, 4, {0, 0, 0});
    const ImageBuffer t = testing::constant_image(4, 4, {0.1, 0.1, 0.1});
    EXPECT_NEAR(psnr(z, t), 20.0, 1e-9);
    EXPECT_TRUE(std::isinf(psnr(z, z)));
    CoverageMask m(4, 4, false);
    m.set(1, 1, true);
    ImageBuffer u = t;
    u.set_pixel(0, 0, {1, 1, 1});
    EXPECT_NEAR(psnr(z, u, &m), 20.0, 1e-9);
}

TEST(Saliency, ConstantImagePeaksAtCentre) {
    const SaliencyMap s = sdsp_saliency(testing::constant_image(64, 48, {0.4, 0.4, 0.4}));
    ASSERT_EQ(s.width(), 64);
    double best = -1.0;
    int bx = -1, by = -1;
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (s.at(x, y) > best) {
                best = s.at(x, y);
                bx = x;
                by = y;
            }
        }
    }
    EXPECT_NEAR(bx, 31.5, 1.0);
    EXPECT_NEAR(by, 23.5, 1.0);
    EXPECT_GT(s.at(32, 24), s.at(0, 0));
}

TEST(Saliency, RangeIsUnit) {
    const SaliencyMap s = sdsp_saliency(structured_image(80, 60, 3));
    double lo = 1.0, hi = 0.0;
    for (double v : s.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
    EXPECT_NEAR(hi, 1.0, 1e-12);
}

ImageBuffer red_square(int cx, int cy) {
    ImageBuffer img = testing::constant_image(96, 96, {0.45, 0.45, 0.5});
    for (int y = cy - 8; y < cy + 8; ++y) {
        for (int x = cx - 8; x < cx + 8; ++x) {
            img.set_pixel(x, y, {0.9, 0.1, 0.1});
        }
    }
    return img;
}

TEST(Saliency, RedSquareIsSalient) {
    const SaliencyMap centred = sdsp_saliency(red_square(48, 48));
    EXPECT_GT(centred.at(48, 48), centred.at(10, 85));
    const SaliencyMap corner = sdsp_saliency(red_square(14, 14));
    // The location prior discounts the same object away from the centre.
    EXPECT_LT(corner.at(14, 14) * 1.0, centred.at(48, 48) + 1e-12);
    EXPECT_GT(corner.at(14, 14), corner.at(80, 80));
}

TEST(Vsi, SelfSimilarityIsOne) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const ImageBuffer img = structured_image(72, 56, seed);
        EXPECT_DOUBLE_EQ(vsi(img, img), 1.0);
    }
}

TEST(Vsi, Symmetric) {
    const ImageBuffer a = structured_image(64, 64, 5);
    const ImageBuffer b = testing::add_noise(a, 0.05, 6);
    EXPECT_NEAR(vsi(a, b), vsi(b, a), 1e-9);
}

TEST(Vsi, HeavierBlurScoresLower) {
    const ImageBuffer a = structured_image(96, 80, 7);
    const double v1 = vsi(a, testing::gaussian_blur(a, 1.0));
    const double v4 = vsi(a, testing::gaussian_blur(a, 4.0));
    EXPECT_LT(v4, v1);
    EXPECT_LT(v1, 1.0);
}

TEST(Vsi, NoiseIsMonotone) {
    const ImageBuffer a = structured_image(96, 80, 8);
    double prev = 1.0;
    for (double sigma : {0.01, 0.03, 0.08, 0.2}) {
        const double v = vsi(a, testing::add_noise(a, sigma, 9));
        EXPECT_LT(v, prev) << sigma;
        EXPECT_GT(v, 0.0);
        prev = v;
    }
}

TEST(Vsi, EvaluatorMatchesFreeFunction) {
    const ImageBuffer a = structured_image(64, 48, 10);
    const ImageBuffer b = testing::gaussian_blur(a, 2.0);
    const VsiEvaluator eval(a);
    EXPECT_DOUBLE_EQ(eval.score(b), vsi(a, b));
    EXPECT_THROW((void)eval.score(ImageBuffer(10, 10)), DimensionMismatch);
}

TEST(PerceptualLoss, GammaOnlyIsMse) {
    const ImageBuffer a = testing::noise_image(30, 20, 11);
    const ImageBuffer b = testing::noise_image(30, 20, 12);
    EXPECT_DOUBLE_EQ(perceptual_loss(a, b, {0, 0, 1}), mse(a, b));
}

TEST(PerceptualLoss, PluginIsRequiredWhenWeighted) {
    const ImageBuffer a = testing::noise_image(16, 16, 13);
    EXPECT_THROW((void)perceptual_loss(a, a, {1, 0.5, 1}), MissingPlugin);
    const MetricPlugin plug = [](const ImageBuffer&, const ImageBuffer&) { return 0.3; };
    EXPECT_NEAR(perceptual_loss(a, a, {1, 0.5, 1}, plug), 0.15, 1e-12);
}

TEST(PerceptualLoss, InvalidWeights) {
    const ImageBuffer a = testing::noise_image(8, 8, 14);
    EXPECT_THROW((void)perceptual_loss(a, a, {-1, 0, 1}), InvalidArgument);
    EXPECT_THROW((void)perceptual_loss(a, a, {0, 0, 0}), InvalidArgument);
}

TEST(PerceptualLoss, ZerosAgainstHalves) {
    const ImageBuffer z = testing::constant_image(32, 32, {0, 0, 0});
    const ImageBuffer h = testing::constant_image(32, 32, {0.5, 0.5, 0.5});
    const double l = perceptual_loss(z, h, {1, 0, 1});
    EXPECT_NEAR(l - 0.25, 1.0 - vsi(z, h), 1e-12);
    EXPECT_NEAR(l, kZerosHalvesLoss, 1e-9);
}

TEST(PerceptualLoss, CachedMatchesFree) {
    const ImageBuffer a = structured_image(48, 40, 15);
    const ImageBuffer b = testing::add_noise(a, 0.04, 16);
    const PerceptualLoss loss(a, {1, 0, 1});
    EXPECT_DOUBLE_EQ(loss(b), perceptual_loss(a, b, {1, 0, 1}));
}

}  // namespace
}  // namespace foveate
