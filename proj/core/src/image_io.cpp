#include "foveate/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "foveate/errors.hpp"

namespace foveate {

namespace {

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void png_error_handler(png_structp, png_const_charp msg) {
    throw IoError(std::string("png: ") + msg);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct PngReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t n) {
    auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + n > cur->bytes.size()) {
        png_error(png, "truncated stream");
    }
    std::memcpy(out, cur->bytes.data() + cur->offset, n);
    cur->offset += n;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    if (png == nullptr) {
        throw IoError("png: cannot allocate writer");
    }
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                     PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * 3);
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                for (int c = 0; c < 3; ++c) {
                    row[static_cast<std::size_t>(x) * 3 + c] = quantize(img.at(x, y, c));
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw IoError("png: bad signature");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
    if (png == nullptr) {
        throw IoError("png: cannot allocate reader");
    }
    png_infop info = png_create_info_struct(png);
    PngReadCursor cursor{bytes, 0};
    try {
        png_set_read_fn(png, &cursor, png_read_from_span);
        png_read_info(png, info);
        const auto width = static_cast<int>(png_get_image_width(png, info));
        const auto height = static_cast<int>(png_get_image_height(png, info));
        const int color = png_get_color_type(png, info);
        const int depth = png_get_bit_depth(png, info);
        if (depth == 16) {
            png_set_strip_16(png);
        }
        if (color == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
        }
        if ((color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) && depth < 8) {
            png_set_expand_gray_1_2_4_to_8(png);
        }
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
            png_set_gray_to_rgb(png);
        }
        if (color & PNG_COLOR_MASK_ALPHA) {
            png_set_strip_alpha(png);
        }
        if (png_get_valid(png, info, PNG_INFO_tRNS)) {
            png_set_tRNS_to_alpha(png);
            png_set_strip_alpha(png);
        }
        png_read_update_info(png, info);
        if (png_get_channels(png, info) != 3) {
            png_error(png, "unsupported channel layout");
        }
        std::vector<std::uint8_t> raw(static_cast<std::size_t>(width) * height * 3);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) {
            rows[y] = raw.data() + static_cast<std::size_t>(y) * width * 3;
        }
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        png_destroy_read_struct(&png, &info, nullptr);

        std::vector<double> data(raw.size());
        std::transform(raw.begin(), raw.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
        return ImageBuffer::from_data(width, height, std::move(data));
    } catch (...) {
        if (png != nullptr) {
            png_destroy_read_struct(&png, &info, nullptr);
        }
        throw;
    }
}

std::vector<std::uint8_t> encode_ppm(const ImageBuffer& img) {
    const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.data().size());
    for (double v : img.data()) {
        out.push_back(quantize(v));
    }
    return out;
}

ImageBuffer decode_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto next_token = [&]() {
        std::string tok;
        while (pos < bytes.size()) {
            const char ch = static_cast<char>(bytes[pos]);
            if (ch == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!tok.empty()) {
                    break;
                }
                ++pos;
            } else {
                tok.push_back(ch);
                ++pos;
            }
        }
        return tok;
    };
    if (next_token() != "P6") {
        throw IoError("ppm: only binary P6 is supported");
    }
    int width = 0;
    int height = 0;
    int maxval = 0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw IoError("ppm: malformed header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
        throw IoError("ppm: unsupported header values");
    }
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(width) * height * 3;
    if (bytes.size() < pos + need) {
        throw IoError("ppm: truncated pixel data");
    }
    std::vector<double> data(need);
    for (std::size_t i = 0; i < need; ++i) {
        data[i] = static_cast<double>(bytes[pos + i]) / maxval;
    }
    return ImageBuffer::from_data(width, height, std::move(data));
}

ImageBuffer read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        return decode_ppm(bytes);
    }
    return decode_png(bytes);
}

void write_image(const std::filesystem::path& path, const ImageBuffer& img) {
    const auto bytes = path.extension() == ".ppm" ? encode_ppm(img) : encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write image " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t v = bytes[i] << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.append("==");
    } else if (rest == 2) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw InvalidArgument("base64: length not a multiple of 4");
    }
    std::array<int, 256> lut{};
    lut.fill(-1);
    for (std::size_t k = 0; k < kAlphabet.size(); ++k) {
        lut[static_cast<unsigned char>(kAlphabet[k])] = static_cast<int>(k);
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char ch = text[i + k];
            if (ch == '=' && i + 4 == text.size() && k >= 2) {
                vals[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0) {
                throw InvalidArgument("base64: data after padding");
            }
            vals[k] = lut[static_cast<unsigned char>(ch)];
            if (vals[k] < 0) {
                throw InvalidArgument("base64: invalid character");
            }
        }
        const std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) {
            out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
        }
        if (pad < 1) {
            out.push_back(static_cast<std::uint8_t>(v & 0xff));
        }
    }
    return out;
}

}  // namespace foveate
