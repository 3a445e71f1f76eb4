#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "foveate/image.hpp"

namespace foveate {

/// 8-bit RGB PNG. Samples are quantised with round(v * 255).
[[nodiscard]] std::vector<std::uint8_t> encode_png(const ImageBuffer& img);
/// Accepts gray, gray+alpha, RGB, RGBA, palette at 8 or 16 bits; alpha is dropped.
[[nodiscard]] ImageBuffer decode_png(std::span<const std::uint8_t> bytes);

[[nodiscard]] std::vector<std::uint8_t> encode_ppm(const ImageBuffer& img);
[[nodiscard]] ImageBuffer decode_ppm(std::span<const std::uint8_t> bytes);

/// Dispatches on the file signature (PNG or binary PPM). Throws IoError.
[[nodiscard]] ImageBuffer read_image(const std::filesystem::path& path);
/// Format chosen by extension: .ppm writes PPM, everything else PNG.
void write_image(const std::filesystem::path& path, const ImageBuffer& img);

[[nodiscard]] std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws InvalidArgument on malformed input.
[[nodiscard]] std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace foveate
