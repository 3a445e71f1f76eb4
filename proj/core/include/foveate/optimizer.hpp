#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "foveate/geometry.hpp"
#include "foveate/image.hpp"
#include "foveate/metrics.hpp"
#include "foveate/oracle.hpp"
#include "foveate/samplers.hpp"
#include "foveate/semantic.hpp"

namespace foveate {

using Gradient = std::array<double, 4>;

[[nodiscard]] double norm(const Gradient& g) noexcept;

/// Seeded generator with a portable uniform draw; std distributions differ
/// between standard libraries, so they are avoided on every determinism path.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// +1 or -1 with equal probability.
    double sign() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Independent stream for item `index` of a run seeded with `seed`.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

struct QuestionItem {
    std::string id;
    std::string question;
    std::string gt_answer;
    std::vector<std::string> choices;  // empty for free-form questions
    std::optional<EmbeddingVec> gt_embedding;
    double weight = 1.0;
};

/// Lower-case, trim, collapse inner whitespace, drop trailing '.'.
[[nodiscard]] std::string normalize_answer(const std::string& text);

/// Multiple choice: normalized string equality. Free form: cosine >= threshold
/// against gt_embedding (which must be set).
[[nodiscard]] bool answer_matches(const QuestionItem& item, const std::string& answer, const EmbeddingVec& embedding,
                                  double threshold = 0.9);

struct AdaptConfig {
    int iterations = 25;
    double spsa_delta = 0.05;
    double learning_rate = 0.1;
    double eta = 1.0;
    double beta_grad = 1.0;
    double fd_step = 1e-3;
    int questions_per_spsa = 4;  // clamped to the number of questions
    PixelBudget budget{0.05};
    LossWeights weights{};
    std::uint64_t rng_seed = 0;
    std::optional<MobiusParams> initial_theta;
    double match_threshold = 0.9;
    MetricPlugin plugin;
    VsiConfig vsi{};

    void validate() const;
};

struct TraceEntry {
    int iteration = 0;
    double l_img = 0.0;
    std::optional<double> l_text;  // only measured on feedback iterations
    double grad_norm = 0.0;
    MobiusParams theta{};

    [[nodiscard]] bool spsa() const noexcept { return l_text.has_value(); }
    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct AdaptResult {
    MobiusParams theta_star{};
    ImageBuffer sampled_image;
    std::vector<TraceEntry> loss_trace;
    long long oracle_calls = 0;  // ask requests
    long long embed_calls = 0;   // ground-truth embedding lookups
    int best_iteration = 0;
    double best_loss = 0.0;
    std::vector<double> final_weights;

    friend bool operator==(const AdaptResult&, const AdaptResult&) = default;
};

using Objective = std::function<double(const MobiusParams&)>;

/// Two evaluations at theta +- delta * Delta with Delta drawn from {+-1}^4;
/// g_i = (L+ - L-) / (2 delta) * Delta_i.
[[nodiscard]] Gradient spsa_gradient(const Objective& objective, const MobiusParams& theta, double delta, Rng& rng);

/// Central differences of `loss(bass_pipeline(img, theta +- h e_i))`.
[[nodiscard]] Gradient fd_perceptual_gradient(const ImageBuffer& img, const MobiusParams& theta,
                                              const PerceptualLoss& loss, PixelBudget budget, double h,
                                              const SphereGeom& geom);

/// g_img + beta * (|g_img| / |g_text|) * g_text; g_img alone when |g_text| < 1e-12.
[[nodiscard]] Gradient combine_gradients(const Gradient& g_img, const Gradient& g_text, double beta_grad) noexcept;

/// w_i <- w_i * exp(eta * wrong_i / N) with N = items.size(). Throws LengthMismatch.
[[nodiscard]] std::vector<QuestionItem> update_question_weights(std::vector<QuestionItem> items,
                                                                const std::vector<bool>& wrong, double eta);

/// k weighted draws without replacement.
[[nodiscard]] std::vector<std::size_t> sample_questions(const std::vector<QuestionItem>& items, std::size_t k,
                                                        Rng& rng);

/// Receives every trace entry as soon as it is complete (also on the way to an abort).
using AdaptObserver = std::function<void(const TraceEntry&)>;

/// Test-time optimisation of theta against the perceptual loss, with oracle
/// feedback on every ceil(t/5)-th iteration. `oracle` may be null when `items`
/// is empty. Oracle failures propagate; the observer has seen the partial trace.
[[nodiscard]] AdaptResult adapt(const ImageBuffer& img, std::vector<QuestionItem> items, Oracle* oracle,
                                const AdaptConfig& cfg, const SphereGeom& geom, const AdaptObserver& observer = {});

}  // namespace foveate
