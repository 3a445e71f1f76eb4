#pragma once

#include <complex>

namespace foveate {

/// Real Möbius coefficients; the map is w -> (a w + b) / (c w + d).
struct MobiusParams {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 1.0;

    [[nodiscard]] constexpr double determinant() const noexcept { return a * d - b * c; }

    static constexpr MobiusParams identity() noexcept { return {1.0, 0.0, 0.0, 1.0}; }

    friend constexpr bool operator==(const MobiusParams&, const MobiusParams&) = default;
};

inline constexpr double kDegenerateDeterminant = 1e-6;

/// Point on the extended complex plane. When `infinite` is set, re/im are ignored.
struct ComplexPoint {
    double re = 0.0;
    double im = 0.0;
    bool infinite = false;

    static constexpr ComplexPoint infinity() noexcept { return {0.0, 0.0, true}; }
    static constexpr ComplexPoint from(std::complex<double> z) noexcept { return {z.real(), z.imag(), false}; }
    [[nodiscard]] std::complex<double> value() const noexcept { return {re, im}; }
};

struct SpherePoint {
    double x = 0.0;
    double y = 0.0;
    double z = -1.0;
};

/// How an image rectangle sits on the unit sphere: a gnomonic footprint centred
/// on the south pole (0,0,-1) spanning `fov_deg` horizontally.
struct SphereGeom {
    double fov_deg = 90.0;
    int width = 0;
    int height = 0;

    SphereGeom() = default;
    SphereGeom(int w, int h, double fov = 90.0);

    /// tan(fov/2); horizontal half-extent of the image on the z = -1 tangent plane.
    [[nodiscard]] double half_extent() const noexcept;
};

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
    bool inside = false;
};

/// Rescale to unit determinant. Negative determinants are handled by negating
/// (a, b) after scaling by 1/sqrt|det|. Throws DegenerateParams.
[[nodiscard]] MobiusParams normalize(const MobiusParams& params);

/// Matrix inverse (d, -b, -c, a); the same map as mobius_inverse_apply.
[[nodiscard]] MobiusParams inverse(const MobiusParams& params) noexcept;

/// Matrix product outer * inner, i.e. the map w -> outer(inner(w)).
[[nodiscard]] MobiusParams compose(const MobiusParams& outer, const MobiusParams& inner) noexcept;

[[nodiscard]] ComplexPoint mobius_apply(const MobiusParams& params, const ComplexPoint& w) noexcept;
[[nodiscard]] ComplexPoint mobius_inverse_apply(const MobiusParams& params, const ComplexPoint& w) noexcept;

/// North-pole stereographic projection (x + iy) / (1 - z).
[[nodiscard]] ComplexPoint stereo_project(const SpherePoint& s) noexcept;
[[nodiscard]] SpherePoint stereo_unproject(const ComplexPoint& z) noexcept;

/// Throws OutOfBounds unless u in [0, width) and v in [0, height).
[[nodiscard]] SpherePoint pixel_to_sphere(double u, double v, const SphereGeom& geom);
[[nodiscard]] PixelPoint sphere_to_pixel(const SpherePoint& s, const SphereGeom& geom) noexcept;

/// Complex coordinate w = stereo_project(pixel_to_sphere(u, v)) without bounds checks.
[[nodiscard]] ComplexPoint pixel_to_plane(double u, double v, const SphereGeom& geom) noexcept;
[[nodiscard]] PixelPoint plane_to_pixel(const ComplexPoint& w, const SphereGeom& geom) noexcept;

/// Hyperbolic map fixing the real point `center` (and infinity), scaling by `zoom`
/// around it. Used as a magnifier: forward warps enlarge the neighbourhood of `center`.
[[nodiscard]] MobiusParams magnifier(double center, double zoom);

}  // namespace foveate
