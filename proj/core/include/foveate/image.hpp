#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace foveate {

using Rgb = std::array<double, 3>;

/// Row-major H x W x 3 raster with samples in [0, 1].
class ImageBuffer {
public:
    static constexpr int kChannels = 3;

    ImageBuffer() = default;
    ImageBuffer(int width, int height, double fill = 0.0);

    /// Validates length, finiteness and range; throws InvalidImage.
    static ImageBuffer from_data(int width, int height, std::vector<double> data);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] bool same_shape(const ImageBuffer& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    [[nodiscard]] double at(int x, int y, int c) const noexcept { return data_[index(x, y) + c]; }
    double& at(int x, int y, int c) noexcept { return data_[index(x, y) + c]; }

    [[nodiscard]] Rgb pixel(int x, int y) const noexcept {
        const std::size_t i = index(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set_pixel(int x, int y, const Rgb& rgb) noexcept {
        const std::size_t i = index(x, y);
        data_[i] = rgb[0];
        data_[i + 1] = rgb[1];
        data_[i + 2] = rgb[2];
    }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<double> data() noexcept { return data_; }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    [[nodiscard]] std::size_t index(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               kChannels;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Per-pixel flag: true when the pixel was pulled from inside the source footprint.
class CoverageMask {
public:
    CoverageMask() = default;
    CoverageMask(int width, int height, bool fill = true);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] bool inside(int x, int y) const noexcept {
        return flags_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool value) noexcept { flags_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0; }

    [[nodiscard]] double interior_fraction() const noexcept;

    /// Pixel-wise AND; dimensions must match.
    [[nodiscard]] CoverageMask intersect(const CoverageMask& other) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> flags_;
};

}  // namespace foveate
