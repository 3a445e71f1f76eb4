#include <cmath>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "foveate/errors.hpp"
#include "foveate/image.hpp"
#include "foveate/image_io.hpp"
#include "test_support.hpp"

namespace foveate {
namespace {

using testing::noise_image;

TEST(ImageBuffer, ConstructionAndAccess) {
    ImageBuffer img(4, 3, 0.25);
    EXPECT_EQ(img.width(), 4);
    EXPECT_EQ(img.height(), 3);
    EXPECT_EQ(img.data().size(), 36u);
    img.set_pixel(2, 1, {0.1, 0.2, 0.3});
    EXPECT_DOUBLE_EQ(img.at(2, 1, 1), 0.2);
    EXPECT_EQ(img.pixel(2, 1), (Rgb{0.1, 0.2, 0.3}));
    EXPECT_DOUBLE_EQ(img.at(0, 0, 2), 0.25);
}

TEST(ImageBuffer, RejectsBadInput) {
    EXPECT_THROW(ImageBuffer(0, 3), InvalidImage);
    EXPECT_THROW(ImageBuffer(3, 3, 1.5), InvalidImage);
    EXPECT_THROW((void)ImageBuffer::from_data(2, 2, std::vector<double>(11, 0.5)), InvalidImage);
    EXPECT_THROW((void)ImageBuffer::from_data(1, 1, {0.5, -0.1, 0.5}), InvalidImage);
    EXPECT_THROW((void)ImageBuffer::from_data(1, 1, {0.5, std::numeric_limits<double>::quiet_NaN(), 0.5}),
                 InvalidImage);
    EXPECT_NO_THROW((void)ImageBuffer::from_data(1, 1, {0.0, 1.0, 0.5}));
}

TEST(CoverageMask, FractionAndIntersect) {
    CoverageMask a(4, 2, true);
    CoverageMask b(4, 2, true);
    a.set(0, 0, false);
    b.set(1, 1, false);
    EXPECT_DOUBLE_EQ(a.interior_fraction(), 7.0 / 8.0);
    const CoverageMask both = a.intersect(b);
    EXPECT_DOUBLE_EQ(both.interior_fraction(), 6.0 / 8.0);
    EXPECT_THROW((void)a.intersect(CoverageMask(3, 2)), DimensionMismatch);
}

TEST(ImageIo, PngRoundTripIsQuantizedExactly) {
    const ImageBuffer img = noise_image(17, 9, 1);
    const ImageBuffer back = decode_png(encode_png(img));
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        EXPECT_DOUBLE_EQ(back.data()[i], std::round(img.data()[i] * 255.0) / 255.0);
    }
    // Quantized images survive a second trip bit for bit.
    EXPECT_EQ(decode_png(encode_png(back)), back);
}

TEST(ImageIo, PpmRoundTrip) {
    const ImageBuffer q = decode_png(encode_png(noise_image(5, 7, 2)));
    EXPECT_EQ(decode_ppm(encode_ppm(q)), q);
}

TEST(ImageIo, FilesDispatchOnSignature) {
    const auto dir = testing::scratch_dir("imageio");
    const ImageBuffer q = decode_png(encode_png(noise_image(6, 4, 3)));
    write_image(dir / "a.png", q);
    write_image(dir / "b.ppm", q);
    EXPECT_EQ(read_image(dir / "a.png"), q);
    EXPECT_EQ(read_image(dir / "b.ppm"), q);
    std::ofstream(dir / "junk.png") << "not an image";
    EXPECT_THROW((void)read_image(dir / "junk.png"), Error);
    EXPECT_THROW((void)read_image(dir / "missing.png"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(ImageIo, CorruptPngThrows) {
    auto bytes = encode_png(noise_image(8, 8, 4));
    bytes.resize(bytes.size() / 2);
    EXPECT_THROW((void)decode_png(bytes), Error);
}

TEST(Base64, KnownVectorsAndRoundTrip) {
    const std::string text = "foobar";
    const std::vector<std::uint8_t> raw(text.begin(), text.end());
    EXPECT_EQ(base64_encode(std::span(raw).subspan(0, 0)), "");
    EXPECT_EQ(base64_encode(std::span(raw).subspan(0, 1)), "Zg==");
    EXPECT_EQ(base64_encode(std::span(raw).subspan(0, 2)), "Zm8=");
    EXPECT_EQ(base64_encode(raw), "Zm9vYmFy");
    Rng rng(9);
    for (int n = 0; n < 64; ++n) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
        for (auto& b : bytes) {
            b = static_cast<std::uint8_t>(rng.next() & 0xff);
        }
        EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
    }
    EXPECT_THROW((void)base64_decode("Zm9v!mFy"), InvalidArgument);
    EXPECT_THROW((void)base64_decode("Zm9"), InvalidArgument);
}

}  // namespace
}  // namespace foveate
