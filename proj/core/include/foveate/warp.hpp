#pragma once

#include "foveate/geometry.hpp"
#include "foveate/image.hpp"

namespace foveate {

struct BilinearSample {
    Rgb color{};
    bool inside = false;
};

/// Bilinear lookup with pixel centres on the integer lattice and border clamp.
/// Points more than half a pixel outside the image return black, inside = false.
[[nodiscard]] BilinearSample bilinear_sample(const ImageBuffer& img, double x, double y) noexcept;

struct WarpResult {
    ImageBuffer image;
    CoverageMask mask;
};

/// M(I): every output pixel pulls from the inverse Möbius image of its sphere point,
/// so content near an attracting fixed point of `theta` is magnified.
[[nodiscard]] WarpResult forward_warp(const ImageBuffer& img, const MobiusParams& theta, const SphereGeom& geom);

/// M^-1(I): pulls through mobius_apply; undoes forward_warp on covered pixels.
[[nodiscard]] WarpResult inverse_warp(const ImageBuffer& img, const MobiusParams& theta, const SphereGeom& geom);

/// Geometry matching `img` at the given field of view.
[[nodiscard]] SphereGeom geometry_for(const ImageBuffer& img, double fov_deg = 90.0);

}  // namespace foveate
