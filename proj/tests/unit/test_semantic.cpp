#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "foveate/errors.hpp"
#include "foveate/optimizer.hpp"
#include "foveate/semantic.hpp"
#include "test_support.hpp"

namespace foveate {
namespace {

EmbeddingVec unit(std::vector<double> v) { return normalize_embedding(v); }

TEST(Embedding, Normalizes) {
    const EmbeddingVec e = unit({3, 4});
    ASSERT_EQ(e.size(), 2u);
    EXPECT_DOUBLE_EQ(e[0], 0.6);
    EXPECT_DOUBLE_EQ(e[1], 0.8);
}

TEST(Embedding, RejectsZero) {
    EXPECT_THROW((void)unit({0, 0, 0}), ZeroVector);
    EXPECT_THROW((void)unit({}), ZeroVector);
    EXPECT_THROW((void)unit({1e-14, 0}), ZeroVector);
}

TEST(TextLoss, Examples) {
    EXPECT_NEAR(text_loss(unit({1, 0}), unit({2, 0})), 0.0, 1e-15);
    EXPECT_NEAR(text_loss(unit({1, 0}), unit({0, 5})), 1.0, 1e-15);
    EXPECT_NEAR(text_loss(unit({1, 1}), unit({-1, -1})), 2.0, 1e-15);
    EXPECT_THROW((void)text_loss(unit({1, 0}), unit({1, 0, 0})), LengthMismatch);
}

TEST(TextLoss, SymmetricScaleInvariantBounded) {
    Rng rng(42);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> a(6), b(6);
        for (auto& v : a) v = rng.uniform() - 0.5;
        for (auto& v : b) v = rng.uniform() - 0.5;
        std::vector<double> a3 = a;
        for (auto& v : a3) v *= 3.7;
        const double l = text_loss(unit(a), unit(b));
        EXPECT_NEAR(l, text_loss(unit(b), unit(a)), 1e-12);
        EXPECT_NEAR(l, text_loss(unit(a3), unit(b)), 1e-12);
        EXPECT_GE(l, 0.0);
        EXPECT_LE(l, 2.0);
    }
}

}  // namespace
}  // namespace foveate
