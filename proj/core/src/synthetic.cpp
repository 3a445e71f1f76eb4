#include "foveate/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "foveate/errors.hpp"
#include "foveate/image_io.hpp"
#include "foveate/optimizer.hpp"

namespace foveate {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Wave {
    double fx;
    double fy;
    double phase;
    double amp;
};

std::vector<Wave> draw_waves(Rng& rng, int count, double max_cycles) {
    std::vector<Wave> waves;
    for (int i = 0; i < count; ++i) {
        waves.push_back({(rng.uniform() * 2.0 - 1.0) * max_cycles, (rng.uniform() * 2.0 - 1.0) * max_cycles,
                         rng.uniform() * kTwoPi, 0.5 + 0.5 * rng.uniform()});
    }
    return waves;
}

double eval_waves(const std::vector<Wave>& waves, double u, double v) {
    double s = 0.0;
    double norm = 0.0;
    for (const auto& w : waves) {
        s += w.amp * std::sin(kTwoPi * (w.fx * u + w.fy * v) + w.phase);
        norm += w.amp;
    }
    return s / norm;  // in [-1, 1]
}

void check_size(int width, int height) {
    if (width < 2 || height < 2) {
        throw InvalidArgument("synthetic images need at least 2x2 pixels");
    }
}

}  // namespace

ImageBuffer smooth_image(int width, int height, std::uint64_t seed) {
    check_size(width, height);
    Rng rng(seed);
    std::array<std::vector<Wave>, 3> waves;
    for (auto& w : waves) {
        w = draw_waves(rng, 3, 2.0);
    }
    ImageBuffer img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double u = (x + 0.5) / width;
            const double v = (y + 0.5) / height;
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = 0.5 + 0.4 * eval_waves(waves[static_cast<std::size_t>(c)], u, v);
            }
        }
    }
    return img;
}

ImageBuffer structured_image(int width, int height, std::uint64_t seed) {
    ImageBuffer img = smooth_image(width, height, seed);
    Rng rng(derive_seed(seed, 1));
    const int shapes = 6;
    for (int s = 0; s < shapes; ++s) {
        const Rgb color{rng.uniform(), rng.uniform(), rng.uniform()};
        const double cx = rng.uniform() * width;
        const double cy = rng.uniform() * height;
        const double r = (0.05 + 0.15 * rng.uniform()) * std::min(width, height);
        const bool disc = (s % 2) == 0;
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double dx = x - cx;
                const double dy = y - cy;
                const bool hit = disc ? dx * dx + dy * dy <= r * r : std::abs(dx) <= r && std::abs(dy) <= r / 3.0;
                if (hit) {
                    img.set_pixel(x, y, color);
                }
            }
        }
    }
    return img;
}

DetailItem make_detail_item(const DetailTaskConfig& cfg, std::uint64_t seed) {
    check_size(cfg.width, cfg.height);
    if (cfg.patch_size < 2 || cfg.patch_size > std::min(cfg.width, cfg.height) || cfg.texture_cell < 1) {
        throw InvalidArgument("detail task: patch must fit the image and cells must be positive");
    }
    Rng rng(seed);
    const auto waves = draw_waves(rng, 2, 1.5);
    ImageBuffer img(cfg.width, cfg.height);
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            const double s = eval_waves(waves, (x + 0.5) / cfg.width, (y + 0.5) / cfg.height);
            const double v = std::clamp(cfg.background_level + cfg.background_ripple * s, 0.0, 1.0);
            img.set_pixel(x, y, {v, v * 0.9, v * 1.1 > 1.0 ? 1.0 : v * 1.1});
        }
    }

    const int half_room = cfg.width / 2 - cfg.patch_size / 2;
    const double max_shift = std::min<double>(cfg.max_offset * cfg.width, half_room);
    const int shift = static_cast<int>(std::lround((rng.uniform() * 2.0 - 1.0) * max_shift));
    const int x0 = std::clamp(cfg.width / 2 - cfg.patch_size / 2 + shift, 0, cfg.width - cfg.patch_size);
    const int y0 = cfg.height / 2 - cfg.patch_size / 2;
    const PixelRect target{x0, y0, x0 + cfg.patch_size, y0 + cfg.patch_size};

    const int cells = (cfg.patch_size + cfg.texture_cell - 1) / cfg.texture_cell;
    std::vector<Rgb> palette(static_cast<std::size_t>(cells * cells));
    for (auto& rgb : palette) {
        for (double& ch : rgb) {
            ch = rng.uniform() < 0.5 ? cfg.patch_low : cfg.patch_high;
        }
    }
    for (int y = target.y0; y < target.y1; ++y) {
        for (int x = target.x0; x < target.x1; ++x) {
            const int cx = (x - target.x0) / cfg.texture_cell;
            const int cy = (y - target.y0) / cfg.texture_cell;
            img.set_pixel(x, y, palette[static_cast<std::size_t>(cy * cells + cx)]);
        }
    }
    return {std::move(img), target};
}

std::filesystem::path write_detail_dataset(const std::filesystem::path& dir, int count, const DetailTaskConfig& cfg,
                                           std::uint64_t seed) {
    if (count < 1) {
        throw InvalidArgument("dataset needs at least one item");
    }
    std::filesystem::create_directories(dir);
    const auto jsonl = dir / "dataset.jsonl";
    std::ofstream out(jsonl, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + jsonl.string());
    }
    for (int i = 0; i < count; ++i) {
        const DetailItem item = make_detail_item(cfg, derive_seed(seed, static_cast<std::uint64_t>(i)));
        char name[32];
        std::snprintf(name, sizeof name, "item_%03d.png", i);
        write_image(dir / name, item.image);
        const auto& t = item.target;
        nlohmann::ordered_json row;
        row["id"] = std::string(name, 8);
        row["image"] = name;
        row["questions"] = nlohmann::ordered_json::array(
            {{{"q", "Is the texture in the marked region legible?"}, {"a", "A"}, {"choices", {"A", "B"}}},
             {{"q", "Can the pattern inside the marked region be read?"}, {"a", "A"}, {"choices", {"A", "B"}}}});
        row["region"] = {static_cast<double>(t.x0) / cfg.width, static_cast<double>(t.y0) / cfg.height,
                         static_cast<double>(t.x1) / cfg.width, static_cast<double>(t.y1) / cfg.height};
        out << row.dump() << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + jsonl.string());
    }
    return jsonl;
}

}  // namespace foveate
