#include "foveate/semantic.hpp"

#include <algorithm>
#include <cmath>

#include "foveate/errors.hpp"

namespace foveate {

EmbeddingVec normalize_embedding(std::span<const double> v) {
    double norm2 = 0.0;
    for (double x : v) {
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (v.empty() || !(norm > 1e-12) || !std::isfinite(norm)) {
        throw ZeroVector("cannot normalize a zero-length embedding");
    }
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) {
        x /= norm;
    }
    return EmbeddingVec(std::move(out));
}

double cosine(const EmbeddingVec& a, const EmbeddingVec& b) {
    if (a.size() != b.size()) {
        throw LengthMismatch("embedding lengths differ");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
    }
    return std::clamp(dot, -1.0, 1.0);
}

double text_loss(const EmbeddingVec& pred, const EmbeddingVec& gt) {
    return 1.0 - cosine(pred, gt);
}

}  // namespace foveate
