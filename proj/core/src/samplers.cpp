#include "foveate/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "foveate/errors.hpp"
#include "foveate/warp.hpp"

namespace foveate {

PixelBudget::PixelBudget(double fraction) : fraction_(fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("pixel budget must lie in (0, 1], got " + std::to_string(fraction));
    }
}

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::uniform:
            return "uniform";
        case Strategy::bass:
            return "bass";
        case Strategy::static_foveated:
            return "static_foveated";
        case Strategy::sunflower:
            return "sunflower";
        case Strategy::radial:
            return "radial";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    for (Strategy s : {Strategy::uniform, Strategy::bass, Strategy::static_foveated, Strategy::sunflower,
                       Strategy::radial}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw InvalidArgument("unknown sampling strategy '" + std::string(name) + "'");
}

void SamplingSpec::validate() const {
    if (!(fixation.x >= 0.0 && fixation.x <= 1.0 && fixation.y >= 0.0 && fixation.y <= 1.0)) {
        throw InvalidArgument("fixation must lie in [0,1]^2");
    }
    if ((strategy == Strategy::bass) != theta.has_value()) {
        throw InvalidArgument("Möbius parameters are required for bass and only for bass");
    }
}

long long budget_pixel_count(PixelBudget budget, int width, int height) {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("budget_pixel_count needs positive dimensions");
    }
    const long long total = static_cast<long long>(width) * height;
    const auto n = std::llround(budget.fraction() * static_cast<double>(total));
    return std::min(total, std::max(4LL, n));
}

GridSize uniform_grid(PixelBudget budget, int width, int height) {
    const long long count = budget_pixel_count(budget, width, height);
    const int gw = std::clamp(static_cast<int>(std::lround(width * std::sqrt(budget.fraction()))), 1, width);
    const int gh = std::clamp(static_cast<int>(std::llround(static_cast<double>(count) / gw)), 1, height);
    return {gw, gh};
}

namespace {

struct AxisTap {
    int index;
    double weight;
};

// Source taps for each of `dst` box-filter cells spanning `src` pixels.
std::vector<std::vector<AxisTap>> box_taps(int src, int dst) {
    std::vector<std::vector<AxisTap>> taps(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        const double lo = i * scale;
        const double hi = (i + 1) * scale;
        for (int j = static_cast<int>(std::floor(lo)); j < static_cast<int>(std::ceil(hi)) && j < src; ++j) {
            const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
            if (overlap > 0.0) {
                taps[i].push_back({j, overlap / scale});
            }
        }
    }
    return taps;
}

struct LinearTap {
    int i0;
    int i1;
    double t;
};

std::vector<LinearTap> linear_taps(int src, int dst) {
    std::vector<LinearTap> taps(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(std::floor(s));
        taps[i] = {i0, std::min(i0 + 1, src - 1), s - i0};
    }
    return taps;
}

Point2 fixation_pixel(Fixation f, int width, int height) {
    return {f.x * (width - 1), f.y * (height - 1)};
}

double farthest_corner(Point2 c, int width, int height) {
    double r = 0.0;
    for (double x : {0.0, width - 1.0}) {
        for (double y : {0.0, height - 1.0}) {
            r = std::max(r, std::hypot(x - c.x, y - c.y));
        }
    }
    return r;
}

bool in_pixel_rect(const Point2& p, int width, int height) {
    return p.x >= -0.5 && p.x <= width - 0.5 && p.y >= -0.5 && p.y <= height - 0.5;
}

// Exactly n spiral points inside the image, spread over the annulus [r_in, r_out]
// around `center`. Point k of an M-point spiral sits at radius
// sqrt(r_in^2 + (r_out^2 - r_in^2) k / M) and angle k * golden_angle; M grows
// until n of them land inside the image, and the first n (by k) are kept.
std::vector<Point2> spiral_in_rect(Point2 center, double r_in, double r_out, std::size_t n, int width, int height,
                                   double golden_angle) {
    std::vector<Point2> out;
    if (n == 0) {
        return out;
    }
    auto generate = [&](std::size_t m, std::vector<Point2>* keep) {
        std::size_t inside = 0;
        const double span = r_out * r_out - r_in * r_in;
        for (std::size_t k = 0; k < m; ++k) {
            const double r = std::sqrt(r_in * r_in + span * static_cast<double>(k) / static_cast<double>(m));
            const double a = static_cast<double>(k) * golden_angle;
            const Point2 p{center.x + r * std::cos(a), center.y + r * std::sin(a)};
            if (in_pixel_rect(p, width, height)) {
                ++inside;
                if (keep != nullptr) {
                    keep->push_back(p);
                    if (keep->size() == n) {
                        break;
                    }
                }
            }
        }
        return inside;
    };
    std::size_t m = n;
    for (int guard = 0; guard < 64; ++guard) {
        const std::size_t got = generate(m, nullptr);
        if (got >= n) {
            out.reserve(n);
            generate(m, &out);
            return out;
        }
        const double grow = static_cast<double>(n) / static_cast<double>(std::max<std::size_t>(got, 1));
        m = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * std::min(grow, 16.0))) + 1;
    }
    throw Error("spiral layout failed to place " + std::to_string(n) + " samples");
}

struct LogPolarLayout {
    Point2 center;
    double r0 = 1.0;
    double r_max = 1.0;
    std::vector<double> radii;
    std::vector<int> ring_counts;
    // Fixation sample first, then ring-major, angle-minor.
    std::vector<Point2> points;
};

LogPolarLayout log_polar_layout(int width, int height, long long count, Fixation fix, const SamplerConfig& cfg) {
    LogPolarLayout lp;
    lp.center = fixation_pixel(fix, width, height);
    lp.r0 = cfg.log_polar_r0;
    lp.r_max = std::max(farthest_corner(lp.center, width, height), lp.r0 * 1.000001);
    const long long ring_samples = count - 1;
    const int n_angles = std::max(1, static_cast<int>(std::llround(std::sqrt(cfg.log_polar_angle_ratio * count))));
    const int n_rings = static_cast<int>((ring_samples + n_angles - 1) / n_angles);
    lp.points.reserve(count);
    lp.points.push_back(lp.center);
    for (int i = 0; i < n_rings; ++i) {
        const double r = n_rings == 1 ? lp.r0 : lp.r0 * std::pow(lp.r_max / lp.r0, static_cast<double>(i) / (n_rings - 1));
        const int n_i = i + 1 < n_rings ? n_angles : static_cast<int>(ring_samples - static_cast<long long>(i) * n_angles);
        lp.radii.push_back(r);
        lp.ring_counts.push_back(n_i);
        for (int j = 0; j < n_i; ++j) {
            const double a = 2.0 * std::numbers::pi * j / n_i;
            lp.points.push_back({std::clamp(lp.center.x + r * std::cos(a), 0.0, width - 1.0),
                                 std::clamp(lp.center.y + r * std::sin(a), 0.0, height - 1.0)});
        }
    }
    return lp;
}

struct RadialLayout {
    std::vector<Point2> points;  // fovea pixels first
    std::size_t fovea_count = 0;
};

RadialLayout radial_layout(int width, int height, long long count, Fixation fix, const SamplerConfig& cfg) {
    RadialLayout rl;
    const Point2 c = fixation_pixel(fix, width, height);
    const std::size_t total_px = static_cast<std::size_t>(width) * height;
    const auto fovea = static_cast<std::size_t>(std::floor(cfg.radial_fovea_share * static_cast<double>(count)));
    const std::size_t periphery = static_cast<std::size_t>(count) - fovea;

    std::vector<std::size_t> order(total_px);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto dist2 = [&](std::size_t i) {
        const double dx = static_cast<double>(i % width) - c.x;
        const double dy = static_cast<double>(i / width) - c.y;
        return dx * dx + dy * dy;
    };
    std::vector<double> d2(total_px);
    for (std::size_t i = 0; i < total_px; ++i) {
        d2[i] = dist2(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return d2[a] != d2[b] ? d2[a] < d2[b] : a < b;
    });
    rl.points.reserve(count);
    for (std::size_t k = 0; k < fovea; ++k) {
        rl.points.push_back({static_cast<double>(order[k] % width), static_cast<double>(order[k] / width)});
    }
    rl.fovea_count = fovea;
    if (periphery == 0) {
        return rl;
    }

    const double rho = std::max(1.0, fovea > 0 ? std::sqrt(d2[order[fovea - 1]]) : 0.0);
    const double r_max = std::max(farthest_corner(c, width, height), rho * 1.000001) + 0.5;
    const int rings = std::max(1, cfg.radial_rings);
    std::vector<double> edges(rings + 1);
    for (int i = 0; i <= rings; ++i) {
        edges[i] = rho * std::pow(r_max / rho, static_cast<double>(i) / rings);
    }
    // Pixels available per ring (outside the fovea) bound each ring's share.
    std::vector<std::size_t> area(rings, 0);
    for (std::size_t k = fovea; k < total_px; ++k) {
        const double r = std::sqrt(d2[order[k]]);
        const auto it = std::upper_bound(edges.begin(), edges.end(), r);
        const int ring = std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, rings - 1);
        ++area[ring];
    }

    // Density decays geometrically per ring; water-fill so no ring exceeds its pixel count.
    std::vector<std::size_t> alloc(rings, 0);
    std::vector<bool> capped(rings, false);
    std::size_t remaining = periphery;
    for (int pass = 0; pass <= rings && remaining > 0; ++pass) {
        double wsum = 0.0;
        std::vector<double> w(rings, 0.0);
        for (int i = 0; i < rings; ++i) {
            if (!capped[i] && area[i] > alloc[i]) {
                w[i] = static_cast<double>(area[i]) * std::pow(cfg.radial_decay, i);
                wsum += w[i];
            }
        }
        if (wsum <= 0.0) {
            break;
        }
        // Largest-remainder apportionment of `remaining`.
        std::vector<std::size_t> add(rings, 0);
        std::vector<std::pair<double, int>> frac;
        std::size_t given = 0;
        for (int i = 0; i < rings; ++i) {
            const double share = static_cast<double>(remaining) * w[i] / wsum;
            add[i] = static_cast<std::size_t>(std::floor(share));
            given += add[i];
            frac.emplace_back(share - std::floor(share), -i);
        }
        std::sort(frac.rbegin(), frac.rend());
        for (std::size_t k = 0; given < remaining && k < frac.size(); ++k) {
            const int i = -frac[k].second;
            if (w[i] > 0.0) {
                ++add[i];
                ++given;
            }
        }
        bool any_cap = false;
        for (int i = 0; i < rings; ++i) {
            const std::size_t room = area[i] - alloc[i];
            if (add[i] >= room && w[i] > 0.0) {
                add[i] = room;
                capped[i] = true;
                any_cap = true;
            }
            alloc[i] += add[i];
            remaining -= add[i];
        }
        if (!any_cap) {
            break;
        }
    }
    if (remaining != 0) {
        throw Error("radial layout could not place the periphery budget");
    }
    for (int i = 0; i < rings; ++i) {
        auto pts = spiral_in_rect(c, edges[i], edges[i + 1], alloc[i], width, height, cfg.golden_angle);
        rl.points.insert(rl.points.end(), pts.begin(), pts.end());
    }
    return rl;
}

std::vector<Rgb> gather(const ImageBuffer& img, const std::vector<Point2>& points) {
    std::vector<Rgb> colors;
    colors.reserve(points.size());
    for (const auto& p : points) {
        colors.push_back(bilinear_sample(img, p.x, p.y).color);
    }
    return colors;
}

}  // namespace

ImageBuffer box_downsample(const ImageBuffer& img, GridSize grid) {
    const auto tx = box_taps(img.width(), grid.width);
    const auto ty = box_taps(img.height(), grid.height);
    ImageBuffer rows(grid.width, img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int i = 0; i < grid.width; ++i) {
            Rgb acc{};
            for (const auto& t : tx[i]) {
                for (int c = 0; c < 3; ++c) {
                    acc[c] += t.weight * img.at(t.index, y, c);
                }
            }
            for (int c = 0; c < 3; ++c) {
                rows.at(i, y, c) = std::clamp(acc[c], 0.0, 1.0);
            }
        }
    }
    ImageBuffer out(grid.width, grid.height);
    for (int j = 0; j < grid.height; ++j) {
        for (int i = 0; i < grid.width; ++i) {
            Rgb acc{};
            for (const auto& t : ty[j]) {
                for (int c = 0; c < 3; ++c) {
                    acc[c] += t.weight * rows.at(i, t.index, c);
                }
            }
            for (int c = 0; c < 3; ++c) {
                out.at(i, j, c) = std::clamp(acc[c], 0.0, 1.0);
            }
        }
    }
    return out;
}

ImageBuffer bilinear_upsample(const ImageBuffer& small, int width, int height) {
    const auto tx = linear_taps(small.width(), width);
    const auto ty = linear_taps(small.height(), height);
    ImageBuffer out(width, height);
    for (int y = 0; y < height; ++y) {
        const auto& vy = ty[y];
        for (int x = 0; x < width; ++x) {
            const auto& vx = tx[x];
            for (int c = 0; c < 3; ++c) {
                const double top = small.at(vx.i0, vy.i0, c) + vx.t * (small.at(vx.i1, vy.i0, c) - small.at(vx.i0, vy.i0, c));
                const double bot = small.at(vx.i0, vy.i1, c) + vx.t * (small.at(vx.i1, vy.i1, c) - small.at(vx.i0, vy.i1, c));
                out.at(x, y, c) = std::clamp(top + vy.t * (bot - top), 0.0, 1.0);
            }
        }
    }
    return out;
}

ImageBuffer uniform_sample(const ImageBuffer& img, PixelBudget budget) {
    const GridSize grid = uniform_grid(budget, img.width(), img.height());
    if (grid.width == img.width() && grid.height == img.height()) {
        return img;
    }
    return bilinear_upsample(box_downsample(img, grid), img.width(), img.height());
}

ImageBuffer bass_pipeline(const ImageBuffer& img, const MobiusParams& theta, PixelBudget budget,
                          const SphereGeom& geom) {
    const WarpResult warped = forward_warp(img, theta, geom);
    const ImageBuffer reduced = uniform_sample(warped.image, budget);
    return inverse_warp(reduced, theta, geom).image;
}

ImageBuffer log_polar_sample(const ImageBuffer& img, PixelBudget budget, Fixation fixation, const SamplerConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    const auto lp = log_polar_layout(w, h, budget_pixel_count(budget, w, h), fixation, cfg);
    const auto colors = gather(img, lp.points);
    const int n_rings = static_cast<int>(lp.radii.size());
    std::vector<std::size_t> ring_start(n_rings);
    std::size_t offset = 1;
    for (int i = 0; i < n_rings; ++i) {
        ring_start[i] = offset;
        offset += lp.ring_counts[i];
    }
    const double log_span = std::log(lp.r_max / lp.r0);

    auto ring_value = [&](int ring, double angle, int c) {
        const int n = lp.ring_counts[ring];
        const double a = angle / (2.0 * std::numbers::pi) * n;
        const double fa = std::floor(a);
        const int j0 = static_cast<int>(fa) % n;
        const int j1 = (j0 + 1) % n;
        const double t = a - fa;
        const double v0 = colors[ring_start[ring] + j0][c];
        const double v1 = colors[ring_start[ring] + j1][c];
        return v0 + t * (v1 - v0);
    };

    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = x - lp.center.x;
            const double dy = y - lp.center.y;
            const double r = std::hypot(dx, dy);
            if (r < lp.r0 || n_rings == 0) {
                out.set_pixel(x, y, colors[0]);
                continue;
            }
            double angle = std::atan2(dy, dx);
            if (angle < 0.0) {
                angle += 2.0 * std::numbers::pi;
            }
            const double rho = n_rings == 1 ? 0.0
                                            : std::clamp(std::log(r / lp.r0) / log_span * (n_rings - 1), 0.0,
                                                         static_cast<double>(n_rings - 1));
            const int i0 = static_cast<int>(std::floor(rho));
            const int i1 = std::min(i0 + 1, n_rings - 1);
            const double t = rho - i0;
            for (int c = 0; c < 3; ++c) {
                const double a = ring_value(i0, angle, c);
                const double b = ring_value(i1, angle, c);
                out.at(x, y, c) = std::clamp(a + t * (b - a), 0.0, 1.0);
            }
        }
    }
    return out;
}

ImageBuffer sunflower_sample(const ImageBuffer& img, PixelBudget budget, Fixation fixation, const SamplerConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    const Point2 c = fixation_pixel(fixation, w, h);
    const auto n = static_cast<std::size_t>(budget_pixel_count(budget, w, h));
    const auto points = spiral_in_rect(c, 0.0, farthest_corner(c, w, h) + 0.5, n, w, h, cfg.golden_angle);
    return nearest_fill(w, h, points, gather(img, points));
}

ImageBuffer radial_sample(const ImageBuffer& img, PixelBudget budget, Fixation fixation, const SamplerConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    const auto rl = radial_layout(w, h, budget_pixel_count(budget, w, h), fixation, cfg);
    return nearest_fill(w, h, rl.points, gather(img, rl.points));
}

ImageBuffer apply_sampling(const ImageBuffer& img, const SamplingSpec& spec, const SphereGeom& geom,
                           const SamplerConfig& cfg) {
    spec.validate();
    switch (spec.strategy) {
        case Strategy::uniform:
            return uniform_sample(img, spec.budget);
        case Strategy::bass:
            return bass_pipeline(img, *spec.theta, spec.budget, geom);
        case Strategy::static_foveated:
            return log_polar_sample(img, spec.budget, spec.fixation, cfg);
        case Strategy::sunflower:
            return sunflower_sample(img, spec.budget, spec.fixation, cfg);
        case Strategy::radial:
            return radial_sample(img, spec.budget, spec.fixation, cfg);
    }
    throw InvalidArgument("unhandled strategy");
}

SampleSet sample_layout(const SamplingSpec& spec, int width, int height, const SphereGeom& geom,
                        const SamplerConfig& cfg) {
    spec.validate();
    const long long count = budget_pixel_count(spec.budget, width, height);
    SampleSet set;
    switch (spec.strategy) {
        case Strategy::uniform:
        case Strategy::bass: {
            const GridSize grid = uniform_grid(spec.budget, width, height);
            const double sx = static_cast<double>(width) / grid.width;
            const double sy = static_cast<double>(height) / grid.height;
            std::optional<MobiusParams> m;
            if (spec.strategy == Strategy::bass) {
                m = normalize(*spec.theta);
            }
            set.points.reserve(static_cast<std::size_t>(grid.count()));
            for (int j = 0; j < grid.height; ++j) {
                for (int i = 0; i < grid.width; ++i) {
                    Point2 p{(i + 0.5) * sx - 0.5, (j + 0.5) * sy - 0.5};
                    if (m) {
                        const PixelPoint src =
                            plane_to_pixel(mobius_inverse_apply(*m, pixel_to_plane(p.x, p.y, geom)), geom);
                        p = {src.x, src.y};
                    }
                    set.points.push_back(p);
                }
            }
            break;
        }
        case Strategy::static_foveated:
            set.points = log_polar_layout(width, height, count, spec.fixation, cfg).points;
            break;
        case Strategy::sunflower: {
            const Point2 c = fixation_pixel(spec.fixation, width, height);
            set.points = spiral_in_rect(c, 0.0, farthest_corner(c, width, height) + 0.5,
                                        static_cast<std::size_t>(count), width, height, cfg.golden_angle);
            break;
        }
        case Strategy::radial:
            set.points = radial_layout(width, height, count, spec.fixation, cfg).points;
            break;
    }
    return set;
}

std::vector<Point2> vogel_spiral(std::size_t n, double golden_angle) {
    std::vector<Point2> pts;
    pts.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double r = std::sqrt(static_cast<double>(k) / static_cast<double>(n));
        const double a = static_cast<double>(k) * golden_angle;
        pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return pts;
}

ImageBuffer nearest_fill(int width, int height, const std::vector<Point2>& points, const std::vector<Rgb>& colors) {
    if (points.empty() || points.size() != colors.size()) {
        throw InvalidArgument("nearest_fill needs one colour per sample and at least one sample");
    }
    const double cell = std::max(1.0, std::sqrt(static_cast<double>(width) * height / points.size()));
    const int gx = std::max(1, static_cast<int>(std::ceil((width + 1) / cell)));
    const int gy = std::max(1, static_cast<int>(std::ceil((height + 1) / cell)));
    auto cell_of = [&](double v, int n) { return std::clamp(static_cast<int>(std::floor((v + 0.5) / cell)), 0, n - 1); };
    std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(gx) * gy);
    for (std::size_t i = 0; i < points.size(); ++i) {
        buckets[static_cast<std::size_t>(cell_of(points[i].y, gy)) * gx + cell_of(points[i].x, gx)].push_back(i);
    }

    ImageBuffer out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int cx = cell_of(x, gx);
            const int cy = cell_of(y, gy);
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (int ring = 0;; ++ring) {
                // Any point in ring `ring` is at least (ring - 1) * cell away.
                if (ring > 0 && (ring - 1) * cell > std::sqrt(best)) {
                    break;
                }
                if (ring > std::max(gx, gy)) {
                    break;
                }
                for (int by = cy - ring; by <= cy + ring; ++by) {
                    if (by < 0 || by >= gy) {
                        continue;
                    }
                    const bool edge_row = by == cy - ring || by == cy + ring;
                    for (int bx = cx - ring; bx <= cx + ring; bx += (edge_row ? 1 : 2 * std::max(ring, 1))) {
                        if (bx < 0 || bx >= gx) {
                            continue;
                        }
                        for (std::size_t i : buckets[static_cast<std::size_t>(by) * gx + bx]) {
                            const double dx = points[i].x - x;
                            const double dy = points[i].y - y;
                            const double d = dx * dx + dy * dy;
                            if (d < best || (d == best && i < best_i)) {
                                best = d;
                                best_i = i;
                            }
                        }
                    }
                }
            }
            out.set_pixel(x, y, colors[best_i]);
        }
    }
    return out;
}

}  // namespace foveate
