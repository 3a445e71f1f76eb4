#include "foveate/image.hpp"

#include <cmath>
#include <string>

#include "foveate/errors.hpp"

namespace foveate {

ImageBuffer::ImageBuffer(int width, int height, double fill) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
        throw InvalidImage("image dimensions must be positive");
    }
    if (!(fill >= 0.0 && fill <= 1.0)) {
        throw InvalidImage("fill value outside [0,1]");
    }
    data_.assign(pixel_count() * kChannels, fill);
}

ImageBuffer ImageBuffer::from_data(int width, int height, std::vector<double> data) {
    ImageBuffer img(width, height);
    if (data.size() != img.data_.size()) {
        throw InvalidImage("expected " + std::to_string(img.data_.size()) + " samples, got " +
                           std::to_string(data.size()));
    }
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw InvalidImage("sample outside [0,1]: " + std::to_string(v));
        }
    }
    img.data_ = std::move(data);
    return img;
}

CoverageMask::CoverageMask(int width, int height, bool fill)
    : width_(width), height_(height), flags_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {}

double CoverageMask::interior_fraction() const noexcept {
    if (flags_.empty()) {
        return 0.0;
    }
    std::size_t n = 0;
    for (auto f : flags_) {
        n += f;
    }
    return static_cast<double>(n) / static_cast<double>(flags_.size());
}

CoverageMask CoverageMask::intersect(const CoverageMask& other) const {
    if (width_ != other.width_ || height_ != other.height_) {
        throw DimensionMismatch("coverage masks differ in size");
    }
    CoverageMask out = *this;
    for (std::size_t i = 0; i < flags_.size(); ++i) {
        out.flags_[i] = flags_[i] & other.flags_[i];
    }
    return out;
}

}  // namespace foveate
