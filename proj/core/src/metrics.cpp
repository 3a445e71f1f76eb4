#include "foveate/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>

#include "foveate/errors.hpp"

namespace foveate {

void LossWeights::validate() const {
    if (!(alpha >= 0.0 && beta_img >= 0.0 && gamma >= 0.0)) {
        throw InvalidArgument("loss weights must be non-negative");
    }
    if (!(alpha + beta_img + gamma > 0.0)) {
        throw InvalidArgument("at least one loss weight must be positive");
    }
}

SaliencyMap::SaliencyMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(width) * height) {
        throw DimensionMismatch("saliency map size mismatch");
    }
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch("mse: image sizes differ");
    }
    const auto da = a.data();
    const auto db = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        acc += d * d;
    }
    return da.empty() ? 0.0 : acc / static_cast<double>(da.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b, const CoverageMask* mask) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch("psnr: image sizes differ");
    }
    if (mask != nullptr && (mask->width() != a.width() || mask->height() != a.height())) {
        throw DimensionMismatch("psnr: mask size differs");
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            if (mask != nullptr && !mask->inside(x, y)) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                const double d = a.at(x, y, c) - b.at(x, y, c);
                acc += d * d;
            }
            n += 3;
        }
    }
    if (n == 0) {
        throw InvalidArgument("psnr: empty mask");
    }
    const double m = acc / static_cast<double>(n);
    return m == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / m);
}

namespace {

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// |IFFT(FFT(plane) * G)| with G the log-Gabor band-pass.
std::vector<double> log_gabor_response(const std::vector<double>& plane, int width, int height,
                                       const SaliencyConfig& cfg) {
    const std::size_t n = static_cast<std::size_t>(width) * height;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_plan fwd;
    fftw_plan bwd;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fwd = fftw_plan_dft_2d(height, width, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_2d(height, width, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < n; ++i) {
        buf[i][0] = plane[i];
        buf[i][1] = 0.0;
    }
    fftw_execute(fwd);
    const double two_sigma2 = 2.0 * std::log(cfg.sigma_f) * std::log(cfg.sigma_f);
    for (int ky = 0; ky < height; ++ky) {
        const double fy = (ky <= height / 2 ? ky : ky - height) / cfg.reference_size;
        for (int kx = 0; kx < width; ++kx) {
            const double fx = (kx <= width / 2 ? kx : kx - width) / cfg.reference_size;
            const double r = std::hypot(fx, fy);
            double g = 0.0;
            if (r > 0.0) {
                const double l = std::log(r / cfg.omega0);
                g = std::exp(-(l * l) / two_sigma2);
            }
            const std::size_t i = static_cast<std::size_t>(ky) * width + kx;
            buf[i][0] *= g;
            buf[i][1] *= g;
        }
    }
    fftw_execute(bwd);
    std::vector<double> out(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::hypot(buf[i][0], buf[i][1]) * inv_n;
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(buf);
    return out;
}

double luminance(const ImageBuffer& img, int x, int y) {
    return (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2)) / 3.0;
}

// Opponent axes: red-green and yellow-blue.
double red_green(const ImageBuffer& img, int x, int y) { return img.at(x, y, 0) - img.at(x, y, 1); }
double yellow_blue(const ImageBuffer& img, int x, int y) {
    return 0.5 * (img.at(x, y, 0) + img.at(x, y, 1)) - img.at(x, y, 2);
}

}  // namespace

SaliencyMap sdsp_saliency(const ImageBuffer& img, const SaliencyConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = img.pixel_count();

    std::vector<double> lum(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            lum[static_cast<std::size_t>(y) * w + x] = luminance(img, x, y);
        }
    }
    std::vector<double> freq = log_gabor_response(lum, w, h, cfg);
    const double fmax = *std::max_element(freq.begin(), freq.end());
    for (double& f : freq) {
        const double fn = fmax > 1e-12 ? f / fmax : 0.0;
        f = cfg.frequency_floor + (1.0 - cfg.frequency_floor) * fn;
    }

    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);
    const double sigma = cfg.location_sigma * std::hypot(static_cast<double>(w), static_cast<double>(h));
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

    std::vector<double> sal(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double warmth = 0.5 * (red_green(img, x, y) + yellow_blue(img, x, y));
            const double color = 1.0 / (1.0 + std::exp(-cfg.color_gain * warmth));
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            const double location = std::exp(-d2 * inv_two_sigma2);
            sal[i] = freq[i] * color * location;
        }
    }
    const auto [lo, hi] = std::minmax_element(sal.begin(), sal.end());
    const double smin = *lo;
    const double range = *hi - *lo;
    for (double& s : sal) {
        s = range > 1e-12 ? (s - smin) / range : 1.0;
    }
    return SaliencyMap(w, h, std::move(sal));
}

struct VsiEvaluator::Channels {
    int width = 0;
    int height = 0;
    std::vector<double> saliency;
    std::vector<double> gradient;
    std::vector<double> chroma_m;
    std::vector<double> chroma_n;
};

namespace {

int downsample_factor(int width, int height, const VsiConfig& cfg) {
    if (!cfg.downsample) {
        return 1;
    }
    return std::max(1, static_cast<int>(std::lround(std::min(width, height) / 256.0)));
}

// F x F mean centred on every F-th pixel, clipped at the border.
std::vector<double> average_decimate(const std::vector<double>& plane, int width, int height, int f, int out_w,
                                     int out_h) {
    if (f == 1) {
        return plane;
    }
    std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
    const int lo = -(f - 1) / 2;
    for (int j = 0; j < out_h; ++j) {
        for (int i = 0; i < out_w; ++i) {
            double acc = 0.0;
            int cnt = 0;
            for (int dy = lo; dy < lo + f; ++dy) {
                const int y = j * f + dy;
                if (y < 0 || y >= height) {
                    continue;
                }
                for (int dx = lo; dx < lo + f; ++dx) {
                    const int x = i * f + dx;
                    if (x < 0 || x >= width) {
                        continue;
                    }
                    acc += plane[static_cast<std::size_t>(y) * width + x];
                    ++cnt;
                }
            }
            out[static_cast<std::size_t>(j) * out_w + i] = acc / cnt;
        }
    }
    return out;
}

// Scharr gradient magnitude with replicated borders.
std::vector<double> gradient_magnitude(const std::vector<double>& plane, int width, int height) {
    std::vector<double> out(plane.size());
    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return plane[static_cast<std::size_t>(y) * width + x];
    };
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double gx = (3.0 * (at(x - 1, y - 1) - at(x + 1, y - 1)) + 10.0 * (at(x - 1, y) - at(x + 1, y)) +
                               3.0 * (at(x - 1, y + 1) - at(x + 1, y + 1))) /
                              16.0;
            const double gy = (3.0 * (at(x - 1, y - 1) - at(x - 1, y + 1)) + 10.0 * (at(x, y - 1) - at(x, y + 1)) +
                               3.0 * (at(x + 1, y - 1) - at(x + 1, y + 1))) /
                              16.0;
            out[static_cast<std::size_t>(y) * width + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

// Similarity power that stays real for negative bases (real part of the principal value).
double real_pow(double base, double exponent) {
    if (base >= 0.0) {
        return std::pow(base, exponent);
    }
    return std::pow(-base, exponent) * std::cos(exponent * std::numbers::pi);
}

}  // namespace

std::shared_ptr<const VsiEvaluator::Channels> VsiEvaluator::prepare(const ImageBuffer& img, const VsiConfig& cfg) {
    const int w = img.width();
    const int h = img.height();
    const std::size_t n = img.pixel_count();
    std::vector<double> lum(n);
    std::vector<double> m(n);
    std::vector<double> nn(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            lum[i] = 255.0 * luminance(img, x, y);
            m[i] = 255.0 * red_green(img, x, y);
            nn[i] = 255.0 * yellow_blue(img, x, y);
        }
    }
    const SaliencyMap sal = sdsp_saliency(img, cfg.saliency);
    const int f = downsample_factor(w, h, cfg);
    const int ow = (w + f - 1) / f;
    const int oh = (h + f - 1) / f;

    auto ch = std::make_shared<Channels>();
    ch->width = ow;
    ch->height = oh;
    ch->saliency = average_decimate(sal.values(), w, h, f, ow, oh);
    ch->chroma_m = average_decimate(m, w, h, f, ow, oh);
    ch->chroma_n = average_decimate(nn, w, h, f, ow, oh);
    ch->gradient = gradient_magnitude(average_decimate(lum, w, h, f, ow, oh), ow, oh);
    return ch;
}

VsiEvaluator::VsiEvaluator(const ImageBuffer& reference, const VsiConfig& cfg)
    : cfg_(cfg), width_(reference.width()), height_(reference.height()), ref_(prepare(reference, cfg)) {}

double VsiEvaluator::score(const ImageBuffer& distorted) const {
    if (distorted.width() != width_ || distorted.height() != height_) {
        throw DimensionMismatch("vsi: image sizes differ");
    }
    const auto dist = prepare(distorted, cfg_);
    const Channels& r = *ref_;
    const Channels& d = *dist;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < r.saliency.size(); ++i) {
        const double s1 = r.saliency[i];
        const double s2 = d.saliency[i];
        const double g1 = r.gradient[i];
        const double g2 = d.gradient[i];
        const double m1 = r.chroma_m[i];
        const double m2 = d.chroma_m[i];
        const double n1 = r.chroma_n[i];
        const double n2 = d.chroma_n[i];
        const double sim_vs = (2.0 * s1 * s2 + cfg_.c_saliency) / (s1 * s1 + s2 * s2 + cfg_.c_saliency);
        const double sim_g = (2.0 * g1 * g2 + cfg_.c_gradient) / (g1 * g1 + g2 * g2 + cfg_.c_gradient);
        const double sim_c = (2.0 * m1 * m2 + cfg_.c_chroma) / (m1 * m1 + m2 * m2 + cfg_.c_chroma) *
                             ((2.0 * n1 * n2 + cfg_.c_chroma) / (n1 * n1 + n2 * n2 + cfg_.c_chroma));
        const double sim = sim_vs * std::pow(sim_g, cfg_.gradient_exponent) * real_pow(sim_c, cfg_.chroma_exponent);
        const double weight = std::max(s1, s2);
        num += sim * weight;
        den += weight;
    }
    return den > 0.0 ? num / den : 1.0;
}

double vsi(const ImageBuffer& ref, const ImageBuffer& dist, const VsiConfig& cfg) {
    if (!ref.same_shape(dist)) {
        throw DimensionMismatch("vsi: image sizes differ");
    }
    return VsiEvaluator(ref, cfg).score(dist);
}

double perceptual_loss(const ImageBuffer& ref, const ImageBuffer& dist, const LossWeights& w,
                       const MetricPlugin& plugin, const VsiConfig& cfg) {
    return PerceptualLoss(ref, w, plugin, cfg)(dist);
}

PerceptualLoss::PerceptualLoss(const ImageBuffer& reference, const LossWeights& w, MetricPlugin plugin,
                               const VsiConfig& cfg)
    : reference_(reference), weights_(w), plugin_(std::move(plugin)) {
    weights_.validate();
    if (weights_.beta_img > 0.0 && !plugin_) {
        throw MissingPlugin("beta_img > 0 requires a metric plugin");
    }
    if (weights_.alpha > 0.0) {
        vsi_.emplace(reference_, cfg);
    }
}

double PerceptualLoss::operator()(const ImageBuffer& distorted) const {
    if (!reference_.same_shape(distorted)) {
        throw DimensionMismatch("perceptual loss: image sizes differ");
    }
    double loss = 0.0;
    if (weights_.alpha > 0.0) {
        loss += weights_.alpha * (1.0 - vsi_->score(distorted));
    }
    if (weights_.beta_img > 0.0) {
        const double d = plugin_(reference_, distorted);
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw Error("metric plugin returned an invalid distance");
        }
        loss += weights_.beta_img * d;
    }
    if (weights_.gamma > 0.0) {
        loss += weights_.gamma * mse(reference_, distorted);
    }
    return loss;
}

}  // namespace foveate
