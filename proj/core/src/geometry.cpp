#include "foveate/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "foveate/errors.hpp"

namespace foveate {

namespace {

constexpr double kPoleTolerance = 1e-12;

}  // namespace

SphereGeom::SphereGeom(int w, int h, double fov) : fov_deg(fov), width(w), height(h) {
    if (!(fov > 0.0 && fov < 180.0)) {
        throw InvalidArgument("fov_deg must lie strictly inside (0, 180), got " + std::to_string(fov));
    }
    if (w <= 0 || h <= 0) {
        throw InvalidArgument("sphere geometry needs positive dimensions");
    }
}

double SphereGeom::half_extent() const noexcept {
    return std::tan(fov_deg * std::numbers::pi / 360.0);
}

MobiusParams normalize(const MobiusParams& params) {
    const double det = params.determinant();
    if (!std::isfinite(det) || std::abs(det) < kDegenerateDeterminant) {
        throw DegenerateParams("Möbius determinant " + std::to_string(det) + " is degenerate");
    }
    // Already canonical: return untouched so normalize is exactly idempotent.
    if (std::abs(det - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) {
        return params;
    }
    const double scale = 1.0 / std::sqrt(std::abs(det));
    MobiusParams out{params.a * scale, params.b * scale, params.c * scale, params.d * scale};
    if (det < 0.0) {
        out.a = -out.a;
        out.b = -out.b;
    }
    return out;
}

MobiusParams inverse(const MobiusParams& p) noexcept {
    return {p.d, -p.b, -p.c, p.a};
}

MobiusParams compose(const MobiusParams& outer, const MobiusParams& inner) noexcept {
    return {outer.a * inner.a + outer.b * inner.c, outer.a * inner.b + outer.b * inner.d,
            outer.c * inner.a + outer.d * inner.c, outer.c * inner.b + outer.d * inner.d};
}

namespace {

// (p w + q) / (r w + s) on the extended plane.
ComplexPoint apply_matrix(double p, double q, double r, double s, const ComplexPoint& w) noexcept {
    if (w.infinite) {
        if (r == 0.0) {
            return ComplexPoint::infinity();
        }
        return {p / r, 0.0, false};
    }
    const std::complex<double> z = w.value();
    const std::complex<double> den = r * z + s;
    if (std::abs(den) < kPoleTolerance) {
        return ComplexPoint::infinity();
    }
    return ComplexPoint::from((p * z + q) / den);
}

}  // namespace

ComplexPoint mobius_apply(const MobiusParams& m, const ComplexPoint& w) noexcept {
    return apply_matrix(m.a, m.b, m.c, m.d, w);
}

ComplexPoint mobius_inverse_apply(const MobiusParams& m, const ComplexPoint& w) noexcept {
    return apply_matrix(m.d, -m.b, -m.c, m.a, w);
}

ComplexPoint stereo_project(const SpherePoint& s) noexcept {
    const double denom = 1.0 - s.z;
    if (denom < kPoleTolerance) {
        return ComplexPoint::infinity();
    }
    return {s.x / denom, s.y / denom, false};
}

SpherePoint stereo_unproject(const ComplexPoint& z) noexcept {
    if (z.infinite) {
        return {0.0, 0.0, 1.0};
    }
    const double r2 = z.re * z.re + z.im * z.im;
    const double k = 1.0 / (r2 + 1.0);
    return {2.0 * z.re * k, 2.0 * z.im * k, (r2 - 1.0) * k};
}

SpherePoint pixel_to_sphere(double u, double v, const SphereGeom& geom) {
    if (!(u >= 0.0 && u < geom.width && v >= 0.0 && v < geom.height)) {
        throw OutOfBounds("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside " +
                          std::to_string(geom.width) + "x" + std::to_string(geom.height));
    }
    const double t = geom.half_extent();
    const double aspect = static_cast<double>(geom.height) / geom.width;
    const double p = t * (2.0 * u / geom.width - 1.0);
    const double q = t * (2.0 * v / geom.height - 1.0) * aspect;
    const double n = std::sqrt(p * p + q * q + 1.0);
    return {p / n, q / n, -1.0 / n};
}

PixelPoint sphere_to_pixel(const SpherePoint& s, const SphereGeom& geom) noexcept {
    // Only the hemisphere in front of the tangent plane z = -1 projects.
    if (!(s.z < 0.0)) {
        return {0.0, 0.0, false};
    }
    const double t = geom.half_extent();
    const double aspect = static_cast<double>(geom.height) / geom.width;
    const double p = s.x / -s.z;
    const double q = s.y / -s.z;
    const double u = (p / t + 1.0) * 0.5 * geom.width;
    const double v = (q / (t * aspect) + 1.0) * 0.5 * geom.height;
    const bool inside = u >= -0.5 && u <= geom.width - 0.5 && v >= -0.5 && v <= geom.height - 0.5;
    return {u, v, inside};
}

ComplexPoint pixel_to_plane(double u, double v, const SphereGeom& geom) noexcept {
    const double t = geom.half_extent();
    const double aspect = static_cast<double>(geom.height) / geom.width;
    const double p = t * (2.0 * u / geom.width - 1.0);
    const double q = t * (2.0 * v / geom.height - 1.0) * aspect;
    const double n = std::sqrt(p * p + q * q + 1.0);
    return {p / (n + 1.0), q / (n + 1.0), false};
}

PixelPoint plane_to_pixel(const ComplexPoint& w, const SphereGeom& geom) noexcept {
    if (w.infinite) {
        return {0.0, 0.0, false};
    }
    const double r2 = w.re * w.re + w.im * w.im;
    if (!(r2 < 1.0)) {
        return {0.0, 0.0, false};
    }
    const double t = geom.half_extent();
    const double aspect = static_cast<double>(geom.height) / geom.width;
    const double p = 2.0 * w.re / (1.0 - r2);
    const double q = 2.0 * w.im / (1.0 - r2);
    const double u = (p / t + 1.0) * 0.5 * geom.width;
    const double v = (q / (t * aspect) + 1.0) * 0.5 * geom.height;
    const bool inside = u >= -0.5 && u <= geom.width - 0.5 && v >= -0.5 && v <= geom.height - 0.5;
    return {u, v, inside};
}

MobiusParams magnifier(double center, double zoom) {
    if (!(zoom > 0.0)) {
        throw InvalidArgument("magnifier zoom must be positive");
    }
    return normalize({zoom, center * (1.0 - zoom), 0.0, 1.0});
}

}  // namespace foveate
