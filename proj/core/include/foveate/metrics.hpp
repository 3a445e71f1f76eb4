#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "foveate/image.hpp"

namespace foveate {

/// Weights of the composite perceptual loss: alpha on (1 - VSI), beta_img on the
/// plugin distance, gamma on MSE.
struct LossWeights {
    double alpha = 1.0;
    double beta_img = 0.0;
    double gamma = 1.0;

    void validate() const;
};

/// Saliency priors. Frequencies are expressed at a 256-pixel reference size so the
/// band-pass picks the same structures regardless of image resolution.
struct SaliencyConfig {
    double omega0 = 0.021;         // log-Gabor centre frequency, cycles/pixel at reference size
    double sigma_f = 1.34;         // log-Gabor bandwidth
    double reference_size = 256.0;
    double location_sigma = 0.25;  // fraction of the image diagonal
    double color_gain = 4.0;       // logistic slope on warmth = ((R-G) + ((R+G)/2 - B)) / 2
    double frequency_floor = 0.1;  // keeps flat regions from zeroing the product
};

/// VSI constants (published defaults for 8-bit inputs).
struct VsiConfig {
    double c_saliency = 1.27;
    double c_gradient = 386.0;
    double c_chroma = 130.0;
    double gradient_exponent = 0.40;
    double chroma_exponent = 0.020;
    bool downsample = true;  // average-and-decimate by round(min(H,W)/256)
    SaliencyConfig saliency{};
};

class SaliencyMap {
public:
    SaliencyMap() = default;
    SaliencyMap(int width, int height, std::vector<double> values);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] double at(int x, int y) const noexcept { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Mean squared difference over all pixels and channels. Throws DimensionMismatch.
[[nodiscard]] double mse(const ImageBuffer& a, const ImageBuffer& b);

/// PSNR in dB for unit-range images, optionally restricted to `mask`-ed pixels.
[[nodiscard]] double psnr(const ImageBuffer& a, const ImageBuffer& b, const CoverageMask* mask = nullptr);

/// Frequency x colour x location prior, min-max normalised to [0, 1].
[[nodiscard]] SaliencyMap sdsp_saliency(const ImageBuffer& img, const SaliencyConfig& cfg = {});

/// VSI against a fixed reference; caches the reference-side maps.
class VsiEvaluator {
public:
    explicit VsiEvaluator(const ImageBuffer& reference, const VsiConfig& cfg = {});
    [[nodiscard]] double score(const ImageBuffer& distorted) const;

private:
    struct Channels;
    static std::shared_ptr<const Channels> prepare(const ImageBuffer& img, const VsiConfig& cfg);

    VsiConfig cfg_;
    int width_;
    int height_;
    std::shared_ptr<const Channels> ref_;
};

/// Visual saliency-induced index in (0, 1]; vsi(I, I) == 1.
[[nodiscard]] double vsi(const ImageBuffer& ref, const ImageBuffer& dist, const VsiConfig& cfg = {});

/// External distance (e.g. a deep-feature metric served out of process). Must be >= 0.
using MetricPlugin = std::function<double(const ImageBuffer&, const ImageBuffer&)>;

/// alpha (1 - VSI) + beta_img plugin + gamma MSE. Throws MissingPlugin when
/// beta_img > 0 and no plugin is given.
[[nodiscard]] double perceptual_loss(const ImageBuffer& ref, const ImageBuffer& dist, const LossWeights& w,
                                     const MetricPlugin& plugin = {}, const VsiConfig& cfg = {});

/// perceptual_loss with the reference side precomputed.
class PerceptualLoss {
public:
    PerceptualLoss(const ImageBuffer& reference, const LossWeights& w, MetricPlugin plugin = {},
                   const VsiConfig& cfg = {});
    [[nodiscard]] double operator()(const ImageBuffer& distorted) const;
    [[nodiscard]] const ImageBuffer& reference() const noexcept { return reference_; }

private:
    ImageBuffer reference_;
    LossWeights weights_;
    MetricPlugin plugin_;
    std::optional<VsiEvaluator> vsi_;
};

}  // namespace foveate
