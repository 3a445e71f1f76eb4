#pragma once

#include <span>
#include <vector>

namespace foveate {

/// Unit-L2 embedding of an answer text.
class EmbeddingVec {
public:
    EmbeddingVec() = default;

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const EmbeddingVec&, const EmbeddingVec&) = default;
    friend EmbeddingVec normalize_embedding(std::span<const double> v);

private:
    explicit EmbeddingVec(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

/// v / ||v||_2. Throws ZeroVector when ||v|| <= 1e-12 (or v is empty).
[[nodiscard]] EmbeddingVec normalize_embedding(std::span<const double> v);

/// 1 - cos(pred, gt), in [0, 2]. Throws LengthMismatch.
[[nodiscard]] double text_loss(const EmbeddingVec& pred, const EmbeddingVec& gt);

/// cos(a, b) for unit embeddings. Throws LengthMismatch.
[[nodiscard]] double cosine(const EmbeddingVec& a, const EmbeddingVec& b);

}  // namespace foveate
