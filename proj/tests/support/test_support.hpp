#pragma once

#include <algorithm>
#include <cmath>
#include <vector>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "foveate/image.hpp"
#include "foveate/optimizer.hpp"
#include "foveate/warp.hpp"

namespace foveate::testing {

inline ImageBuffer constant_image(int w, int h, Rgb rgb) {
    ImageBuffer img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.set_pixel(x, y, rgb);
        }
    }
    return img;
}

inline ImageBuffer noise_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    ImageBuffer img(w, h);
    for (double& v : img.data()) {
        v = rng.uniform();
    }
    return img;
}

/// Box-Muller on the portable uniform draw.
inline double gaussian(Rng& rng) {
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

inline ImageBuffer add_noise(const ImageBuffer& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    ImageBuffer out = img;
    for (double& v : out.data()) {
        v = std::clamp(v + sigma * gaussian(rng), 0.0, 1.0);
    }
    return out;
}

/// Separable Gaussian blur with replicated borders.
inline ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) {
        v /= sum;
    }
    const int w = img.width();
    const int h = img.height();
    ImageBuffer tmp(w, h);
    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += k[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y, c);
                }
                tmp.at(x, y, c) = acc;
            }
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
                }
                out.at(x, y, c) = std::clamp(acc, 0.0, 1.0);
            }
        }
    }
    return out;
}

/// Pixels of the forward/inverse round trip whose bilinear taps never touch the
/// black fill: an all-ones image survives the round trip there unchanged.
inline CoverageMask round_trip_interior(const MobiusParams& theta, const SphereGeom& geom) {
    const ImageBuffer ones(geom.width, geom.height, 1.0);
    const ImageBuffer back = inverse_warp(forward_warp(ones, theta, geom).image, theta, geom).image;
    CoverageMask mask(geom.width, geom.height, false);
    for (int y = 0; y < geom.height; ++y) {
        for (int x = 0; x < geom.width; ++x) {
            mask.set(x, y, back.at(x, y, 0) > 1.0 - 1e-12);
        }
    }
    return mask;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("foveate-" + tag + "-" + std::to_string(static_cast<long long>(::getpid())));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace foveate::testing
