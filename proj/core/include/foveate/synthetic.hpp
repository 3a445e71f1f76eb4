#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foveate/image.hpp"
#include "foveate/oracle.hpp"

namespace foveate {

/// Sum of a few low-frequency sinusoids per channel, values in [0.1, 0.9].
[[nodiscard]] ImageBuffer smooth_image(int width, int height, std::uint64_t seed);

/// Smooth base plus a handful of hard-edged discs and bars.
[[nodiscard]] ImageBuffer structured_image(int width, int height, std::uint64_t seed);

/// A dim, nearly flat scene with one finely textured patch straddling the
/// horizontal midline. Questions about the patch can only be answered from a
/// representation that keeps its texture.
struct DetailTaskConfig {
    int width = 96;
    int height = 64;
    int patch_size = 16;
    int texture_cell = 4;           // side of the random colour blocks, pixels
    double background_level = 0.08;
    double background_ripple = 0.03;
    double patch_low = 0.1;
    double patch_high = 0.9;
    double max_offset = 0.3;        // patch centre drifts up to this fraction of the width from the middle
};

struct DetailItem {
    ImageBuffer image;
    PixelRect target;
};

[[nodiscard]] DetailItem make_detail_item(const DetailTaskConfig& cfg, std::uint64_t seed);

/// Writes `count` detail images as PNG plus `dataset.jsonl` (two multiple-choice
/// questions per image, region = the patch). Returns the dataset path.
std::filesystem::path write_detail_dataset(const std::filesystem::path& dir, int count, const DetailTaskConfig& cfg,
                                           std::uint64_t seed);

}  // namespace foveate
