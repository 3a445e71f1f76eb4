#include "foveate/warp.hpp"

#include <algorithm>
#include <cmath>

#include "foveate/errors.hpp"

namespace foveate {

BilinearSample bilinear_sample(const ImageBuffer& img, double x, double y) noexcept {
    const int w = img.width();
    const int h = img.height();
    if (!(x >= -0.5 && x <= w - 0.5 && y >= -0.5 && y <= h - 0.5)) {
        return {{0.0, 0.0, 0.0}, false};
    }
    const double cx = std::clamp(x, 0.0, static_cast<double>(w - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y0 = static_cast<int>(std::floor(cy));
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;

    BilinearSample out{{}, true};
    for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        const double top = img.at(x0, y0, c) + fx * (img.at(x1, y0, c) - img.at(x0, y0, c));
        const double bottom = img.at(x0, y1, c) + fx * (img.at(x1, y1, c) - img.at(x0, y1, c));
        out.color[c] = std::clamp(top + fy * (bottom - top), 0.0, 1.0);
    }
    return out;
}

namespace {

template <typename PullBack>
WarpResult pull_back_warp(const ImageBuffer& img, const SphereGeom& geom, PullBack&& pull) {
    if (geom.width != img.width() || geom.height != img.height()) {
        throw DimensionMismatch("sphere geometry does not match image size");
    }
    WarpResult out{ImageBuffer(img.width(), img.height()), CoverageMask(img.width(), img.height())};
    for (int v = 0; v < img.height(); ++v) {
        for (int u = 0; u < img.width(); ++u) {
            const ComplexPoint w = pixel_to_plane(u, v, geom);
            const PixelPoint src = plane_to_pixel(pull(w), geom);
            BilinearSample s{{0.0, 0.0, 0.0}, false};
            if (src.inside) {
                s = bilinear_sample(img, src.x, src.y);
            }
            out.image.set_pixel(u, v, s.color);
            out.mask.set(u, v, s.inside);
        }
    }
    return out;
}

}  // namespace

WarpResult forward_warp(const ImageBuffer& img, const MobiusParams& theta, const SphereGeom& geom) {
    const MobiusParams m = normalize(theta);
    return pull_back_warp(img, geom, [&m](const ComplexPoint& w) { return mobius_inverse_apply(m, w); });
}

WarpResult inverse_warp(const ImageBuffer& img, const MobiusParams& theta, const SphereGeom& geom) {
    const MobiusParams m = normalize(theta);
    return pull_back_warp(img, geom, [&m](const ComplexPoint& w) { return mobius_apply(m, w); });
}

SphereGeom geometry_for(const ImageBuffer& img, double fov_deg) {
    return SphereGeom(img.width(), img.height(), fov_deg);
}

}  // namespace foveate
