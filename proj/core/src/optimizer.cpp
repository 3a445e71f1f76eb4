#include "foveate/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "foveate/errors.hpp"

namespace foveate {

namespace {

MobiusParams offset(const MobiusParams& p, const Gradient& dir, double scale) noexcept {
    return {p.a + scale * dir[0], p.b + scale * dir[1], p.c + scale * dir[2], p.d + scale * dir[3]};
}

Gradient unit(int i) noexcept {
    Gradient e{0.0, 0.0, 0.0, 0.0};
    e[static_cast<std::size_t>(i)] = 1.0;
    return e;
}

}  // namespace

double norm(const Gradient& g) noexcept {
    return std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2] + g[3] * g[3]);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed ^ (index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string normalize_answer(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(ch)));
    }
    while (!out.empty() && out.back() == '.') {
        out.pop_back();
    }
    return out;
}

bool answer_matches(const QuestionItem& item, const std::string& answer, const EmbeddingVec& embedding,
                    double threshold) {
    if (!item.choices.empty()) {
        return normalize_answer(answer) == normalize_answer(item.gt_answer);
    }
    if (!item.gt_embedding) {
        throw InvalidArgument("free-form question '" + item.id + "' has no ground-truth embedding");
    }
    return cosine(embedding, *item.gt_embedding) >= threshold;
}

void AdaptConfig::validate() const {
    if (iterations <= 0) {
        throw InvalidArgument("iterations must be positive");
    }
    if (!(spsa_delta > 0.0) || !(learning_rate > 0.0) || !(beta_grad > 0.0) || !(fd_step > 0.0)) {
        throw InvalidArgument("spsa_delta, learning_rate, beta_grad and fd_step must be positive");
    }
    if (!(eta >= 0.0)) {
        throw InvalidArgument("eta must be non-negative");
    }
    if (questions_per_spsa < 1) {
        throw InvalidArgument("questions_per_spsa must be at least 1");
    }
    if (!(match_threshold >= -1.0 && match_threshold <= 1.0)) {
        throw InvalidArgument("match_threshold must lie in [-1, 1]");
    }
    weights.validate();
}

Gradient spsa_gradient(const Objective& objective, const MobiusParams& theta, double delta, Rng& rng) {
    if (!(delta > 0.0)) {
        throw InvalidArgument("spsa delta must be positive");
    }
    Gradient dir{};
    for (double& d : dir) {
        d = rng.sign();
    }
    const double plus = objective(offset(theta, dir, delta));
    const double minus = objective(offset(theta, dir, -delta));
    const double scale = (plus - minus) / (2.0 * delta);
    Gradient g{};
    for (std::size_t i = 0; i < 4; ++i) {
        g[i] = scale * dir[i];  // Delta_i = +-1, so dividing equals multiplying
    }
    return g;
}

Gradient fd_perceptual_gradient(const ImageBuffer& img, const MobiusParams& theta, const PerceptualLoss& loss,
                                PixelBudget budget, double h, const SphereGeom& geom) {
    if (!(h > 0.0)) {
        throw InvalidArgument("finite-difference step must be positive");
    }
    Gradient g{};
    for (int i = 0; i < 4; ++i) {
        const Gradient e = unit(i);
        const double plus = loss(bass_pipeline(img, offset(theta, e, h), budget, geom));
        const double minus = loss(bass_pipeline(img, offset(theta, e, -h), budget, geom));
        g[static_cast<std::size_t>(i)] = (plus - minus) / (2.0 * h);
    }
    return g;
}

Gradient combine_gradients(const Gradient& g_img, const Gradient& g_text, double beta_grad) noexcept {
    const double text_norm = norm(g_text);
    if (text_norm < 1e-12) {
        return g_img;
    }
    const double scale = beta_grad * norm(g_img) / text_norm;
    Gradient out{};
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = g_img[i] + scale * g_text[i];
    }
    return out;
}

std::vector<QuestionItem> update_question_weights(std::vector<QuestionItem> items, const std::vector<bool>& wrong,
                                                  double eta) {
    if (items.size() != wrong.size()) {
        throw LengthMismatch("update_question_weights: " + std::to_string(items.size()) + " items but " +
                             std::to_string(wrong.size()) + " flags");
    }
    const double n = static_cast<double>(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (wrong[i]) {
            items[i].weight *= std::exp(eta / n);
        }
    }
    return items;
}

std::vector<std::size_t> sample_questions(const std::vector<QuestionItem>& items, std::size_t k, Rng& rng) {
    if (k < 1 || k > items.size()) {
        throw InvalidArgument("sample_questions: k must lie in [1, " + std::to_string(items.size()) + "]");
    }
    std::vector<std::size_t> remaining(items.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<std::size_t> picked;
    picked.reserve(k);
    while (picked.size() < k) {
        double total = 0.0;
        for (std::size_t idx : remaining) {
            total += items[idx].weight;
        }
        const double target = rng.uniform() * total;
        std::size_t slot = remaining.size() - 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < remaining.size(); ++j) {
            acc += items[remaining[j]].weight;
            if (target < acc) {
                slot = j;
                break;
            }
        }
        picked.push_back(remaining[slot]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
    }
    return picked;
}

namespace {

class AdaptRun {
public:
    AdaptRun(const ImageBuffer& img, std::vector<QuestionItem> items, Oracle* oracle, const AdaptConfig& cfg,
             const SphereGeom& geom)
        : img_(img),
          items_(std::move(items)),
          oracle_(oracle),
          cfg_(cfg),
          geom_(geom),
          loss_(img, cfg.weights, cfg.plugin, cfg.vsi),
          rng_(cfg.rng_seed) {}

    AdaptResult run(const AdaptObserver& observer) {
        prepare_ground_truth();
        MobiusParams theta = normalize(cfg_.initial_theta.value_or(MobiusParams::identity()));
        const int interval = (cfg_.iterations + 4) / 5;
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg_.questions_per_spsa), items_.size());
        bool have_best = false;

        for (int i = 0; i < cfg_.iterations; ++i) {
            ImageBuffer sampled = bass_pipeline(img_, theta, cfg_.budget, geom_);
            TraceEntry entry;
            entry.iteration = i;
            entry.theta = theta;
            entry.l_img = loss_(sampled);
            if (!std::isfinite(entry.l_img)) {
                throw Error("perceptual loss is not finite at iteration " + std::to_string(i));
            }
            Gradient g = image_gradient(theta);
            if (!items_.empty() && i % interval == 0) {
                const auto chosen = sample_questions(items_, k, rng_);
                const Gradient g_text = spsa_gradient(
                    [&](const MobiusParams& p) {
                        return text_objective(bass_pipeline(img_, p, cfg_.budget, geom_), chosen, nullptr);
                    },
                    theta, cfg_.spsa_delta, rng_);
                std::vector<bool> wrong(items_.size(), false);
                entry.l_text = text_objective(sampled, chosen, &wrong);
                items_ = update_question_weights(std::move(items_), wrong, cfg_.eta);
                g = combine_gradients(g, g_text, cfg_.beta_grad);
            }
            entry.grad_norm = norm(g);

            const bool scored = items_.empty() || entry.l_text.has_value();
            const double combined = entry.l_img + entry.l_text.value_or(0.0);
            if (scored && (!have_best || combined < result_.best_loss)) {
                have_best = true;
                result_.best_loss = combined;
                result_.best_iteration = i;
                result_.theta_star = theta;
                result_.sampled_image = std::move(sampled);
            }
            result_.loss_trace.push_back(entry);
            if (observer) {
                observer(entry);
            }
            theta = step(theta, g, i);
        }
        for (const auto& q : items_) {
            result_.final_weights.push_back(q.weight);
        }
        return std::move(result_);
    }

private:
    void prepare_ground_truth() {
        if (items_.empty()) {
            return;
        }
        if (oracle_ == nullptr) {
            throw OracleUnavailable("questions were given but no oracle is configured");
        }
        std::vector<std::string> texts;
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < items_.size(); ++i) {
            if (!(items_[i].weight > 0.0) || !std::isfinite(items_[i].weight)) {
                throw InvalidArgument("question '" + items_[i].id + "' has a non-positive weight");
            }
            if (!items_[i].gt_embedding) {
                texts.push_back(items_[i].gt_answer);
                slots.push_back(i);
            }
        }
        if (texts.empty()) {
            return;
        }
        auto vecs = oracle_->embed(texts);
        ++result_.embed_calls;
        if (vecs.size() != texts.size()) {
            throw OracleError("oracle returned " + std::to_string(vecs.size()) + " embeddings for " +
                              std::to_string(texts.size()) + " texts");
        }
        for (std::size_t j = 0; j < slots.size(); ++j) {
            items_[slots[j]].gt_embedding = std::move(vecs[j]);
        }
    }

    // Mean text loss of the chosen questions on `sampled`; fills `wrong` when given.
    double text_objective(const ImageBuffer& sampled, const std::vector<std::size_t>& chosen,
                          std::vector<bool>* wrong) {
        double total = 0.0;
        for (std::size_t idx : chosen) {
            const QuestionItem& q = items_[idx];
            const AskResult r = oracle_->ask(sampled, q.question);
            ++result_.oracle_calls;
            total += text_loss(r.embedding, *q.gt_embedding);
            if (wrong != nullptr) {
                (*wrong)[idx] = !answer_matches(q, r.answer, r.embedding, cfg_.match_threshold);
            }
        }
        return total / static_cast<double>(chosen.size());
    }

    Gradient image_gradient(const MobiusParams& theta) const {
        try {
            return fd_perceptual_gradient(img_, theta, loss_, cfg_.budget, cfg_.fd_step, geom_);
        } catch (const DegenerateParams&) {
            return fd_perceptual_gradient(img_, theta, loss_, cfg_.budget, cfg_.fd_step / 2.0, geom_);
        }
    }

    MobiusParams step(const MobiusParams& theta, const Gradient& g, int iteration) const {
        try {
            return normalize(offset(theta, g, -cfg_.learning_rate));
        } catch (const DegenerateParams&) {
        }
        try {
            return normalize(offset(theta, g, -cfg_.learning_rate / 2.0));
        } catch (const DegenerateParams& e) {
            throw DegenerateParams("update degenerates at iteration " + std::to_string(iteration) +
                                   " even with a halved step: " + e.what());
        }
    }

    const ImageBuffer& img_;
    std::vector<QuestionItem> items_;
    Oracle* oracle_;
    const AdaptConfig& cfg_;
    const SphereGeom& geom_;
    PerceptualLoss loss_;
    Rng rng_;
    AdaptResult result_;
};

}  // namespace

AdaptResult adapt(const ImageBuffer& img, std::vector<QuestionItem> items, Oracle* oracle, const AdaptConfig& cfg,
                  const SphereGeom& geom, const AdaptObserver& observer) {
    cfg.validate();
    if (img.empty()) {
        throw InvalidImage("adapt needs a non-empty image");
    }
    if (geom.width != img.width() || geom.height != img.height()) {
        throw DimensionMismatch("sphere geometry does not match the image size");
    }
    AdaptRun run(img, std::move(items), oracle, cfg, geom);
    return run.run(observer);
}

}  // namespace foveate
