#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foveate/geometry.hpp"
#include "foveate/image.hpp"

namespace foveate {

/// Fraction of source pixels a sampled representation may contain, in (0, 1].
class PixelBudget {
public:
    explicit PixelBudget(double fraction);
    [[nodiscard]] double fraction() const noexcept { return fraction_; }
    friend bool operator==(const PixelBudget&, const PixelBudget&) = default;

private:
    double fraction_;
};

enum class Strategy { uniform, bass, static_foveated, sunflower, radial };

[[nodiscard]] std::string_view to_string(Strategy s) noexcept;
/// Accepts the canonical names above; throws InvalidArgument otherwise.
[[nodiscard]] Strategy parse_strategy(std::string_view name);

/// Fixation in normalized image coordinates, (0.5, 0.5) is the centre.
struct Fixation {
    double x = 0.5;
    double y = 0.5;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct SamplingSpec {
    Strategy strategy = Strategy::uniform;
    PixelBudget budget{0.05};
    Fixation fixation{};
    std::optional<MobiusParams> theta;  // bass only

    /// Throws InvalidArgument when the invariants do not hold.
    void validate() const;
};

/// Tunables of the static baselines. Defaults are pinned for reproducibility.
struct SamplerConfig {
    double log_polar_r0 = 1.0;
    // n_angles = round(sqrt(angle_ratio * N))
    double log_polar_angle_ratio = 2.0;
    double golden_angle = 2.39996322972865332;  // pi (3 - sqrt 5)
    double radial_fovea_share = 0.5;
    int radial_rings = 8;
    double radial_decay = 0.75;
};

/// Source sample positions (pixel coordinates, centres on the integer lattice).
struct SampleSet {
    std::vector<Point2> points;
    [[nodiscard]] std::size_t count() const noexcept { return points.size(); }
};

struct GridSize {
    int width = 0;
    int height = 0;
    [[nodiscard]] long long count() const noexcept { return static_cast<long long>(width) * height; }
};

/// round(fraction * width * height), at least 4 and at most width * height.
[[nodiscard]] long long budget_pixel_count(PixelBudget budget, int width, int height);

/// Aspect-preserving grid whose cell count matches the budget up to max(w', h').
[[nodiscard]] GridSize uniform_grid(PixelBudget budget, int width, int height);

/// Area-weighted box filter to `grid`.
[[nodiscard]] ImageBuffer box_downsample(const ImageBuffer& img, GridSize grid);
/// Bilinear upsample with pixel-centre alignment.
[[nodiscard]] ImageBuffer bilinear_upsample(const ImageBuffer& small, int width, int height);

[[nodiscard]] ImageBuffer uniform_sample(const ImageBuffer& img, PixelBudget budget);

/// forward warp -> uniform sample + bilinear restore -> inverse warp.
[[nodiscard]] ImageBuffer bass_pipeline(const ImageBuffer& img, const MobiusParams& theta, PixelBudget budget,
                                        const SphereGeom& geom);

[[nodiscard]] ImageBuffer log_polar_sample(const ImageBuffer& img, PixelBudget budget, Fixation fixation,
                                           const SamplerConfig& cfg = {});
[[nodiscard]] ImageBuffer sunflower_sample(const ImageBuffer& img, PixelBudget budget, Fixation fixation,
                                           const SamplerConfig& cfg = {});
[[nodiscard]] ImageBuffer radial_sample(const ImageBuffer& img, PixelBudget budget, Fixation fixation,
                                        const SamplerConfig& cfg = {});

/// Dispatch on spec.strategy. `geom` is only used by bass.
[[nodiscard]] ImageBuffer apply_sampling(const ImageBuffer& img, const SamplingSpec& spec, const SphereGeom& geom,
                                         const SamplerConfig& cfg = {});

/// The source positions each strategy reads for an image of the given size.
/// For bass the grid is mapped back through the forward pull-back; points whose
/// pull-back leaves the footprint read black and are reported where they land.
[[nodiscard]] SampleSet sample_layout(const SamplingSpec& spec, int width, int height, const SphereGeom& geom,
                                      const SamplerConfig& cfg = {});

/// First n points of a Vogel spiral scaled to the unit disc.
[[nodiscard]] std::vector<Point2> vogel_spiral(std::size_t n, double golden_angle = SamplerConfig{}.golden_angle);

/// Nearest-sample reconstruction ("Voronoi fill") of a full-resolution image.
[[nodiscard]] ImageBuffer nearest_fill(int width, int height, const std::vector<Point2>& points,
                                       const std::vector<Rgb>& colors);

}  // namespace foveate
