#include "pedsplat/superpixel.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace pedsplat;

namespace {

LabelImage rect_labels(int w, int h, int x0, int y0, int x1, int y1, std::uint16_t id) {
    LabelImage l(w, h, 0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) l(x, y) = id;
    return l;
}

void expect_partition(const SuperpixelMap& map, const LabelImage& labels) {
    std::vector<std::size_t> counts(map.segments.size(), 0);
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) {
            const int s = map.labels(x, y);
            if (labels(x, y) == 0) {
                EXPECT_EQ(s, -1);
                continue;
            }
            ASSERT_GE(s, 0);
            EXPECT_EQ(map.segments[s].instance, labels(x, y));
            ++counts[s];
        }
    for (std::size_t s = 0; s < counts.size(); ++s) {
        EXPECT_GT(counts[s], 0u);
        EXPECT_EQ(counts[s], map.segments[s].pixel_count);
    }
}

} // namespace

TEST(Superpixel, UniformRectangleSplitsEvenly) {
    const RgbImage img(40, 40, Rgb(0.4, 0.5, 0.6));
    const auto labels = rect_labels(40, 40, 5, 5, 34, 34, 1); // 900 px
    const auto map = segment_pedestrians(img, labels, 9);
    ASSERT_EQ(map.segments.size(), 9u);
    expect_partition(map, labels);
    std::size_t lo = 1000, hi = 0;
    for (const auto& s : map.segments) {
        lo = std::min(lo, s.pixel_count);
        hi = std::max(hi, s.pixel_count);
    }
    EXPECT_LT(static_cast<double>(hi) / lo, 2.0);
}

TEST(Superpixel, TinyMaskGetsOneSegmentPerPixel) {
    const RgbImage img(10, 10, Rgb(0.1, 0.2, 0.3));
    LabelImage labels(10, 10, 0);
    for (int i = 0; i < 5; ++i) labels(i, 2) = 4;
    const auto map = segment_pedestrians(img, labels, 30);
    EXPECT_EQ(map.segments.size(), 5u);
    expect_partition(map, labels);
}

TEST(Superpixel, TwoColorHalvesRecovered) {
    RgbImage img(20, 20, Rgb(1, 0, 0));
    for (int y = 0; y < 20; ++y)
        for (int x = 10; x < 20; ++x) img(x, y) = Rgb(0, 0, 1);
    const auto labels = rect_labels(20, 20, 0, 0, 19, 19, 1);
    const auto map = segment_pedestrians(img, labels, 2);
    ASSERT_EQ(map.segments.size(), 2u);
    std::vector<Rgb> colors{map.segments[0].mean_color, map.segments[1].mean_color};
    std::sort(colors.begin(), colors.end(), [](const Rgb& a, const Rgb& b) { return a.x() < b.x(); });
    EXPECT_LT((colors[0] - Rgb(0, 0, 1)).norm(), 1e-12);
    EXPECT_LT((colors[1] - Rgb(1, 0, 0)).norm(), 1e-12);
}

TEST(Superpixel, SegmentCountPerPedestrianAndNoStraddling) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    RgbImage img(60, 40);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = Rgb(u(rng), u(rng), u(rng));
    LabelImage labels = rect_labels(60, 40, 2, 2, 25, 37, 2);
    for (int y = 5; y < 35; ++y)
        for (int x = 30; x < 55; ++x) labels(x, y) = 5;
    const auto map = segment_pedestrians(img, labels, 30);
    EXPECT_EQ(map.segments_of(2).size(), 30u);
    EXPECT_EQ(map.segments_of(5).size(), 30u);
    expect_partition(map, labels);
}

TEST(Superpixel, DisconnectedMaskSeedsBothParts) {
    const RgbImage img(40, 20, Rgb(0.5, 0.5, 0.5));
    LabelImage labels = rect_labels(40, 20, 0, 0, 9, 19, 1);
    for (int y = 0; y < 20; ++y)
        for (int x = 30; x < 40; ++x) labels(x, y) = 1;
    const auto map = segment_pedestrians(img, labels, 6);
    EXPECT_EQ(map.segments.size(), 6u);
    expect_partition(map, labels);
    for (const auto& s : map.segments) EXPECT_TRUE(s.centroid.x() < 10 || s.centroid.x() >= 30);
}

TEST(Superpixel, EmptyMasksGiveEmptyMap) {
    const auto map = segment_pedestrians(RgbImage(8, 8), LabelImage(8, 8, 0), 30);
    EXPECT_TRUE(map.segments.empty());
}

TEST(Superpixel, MeanColorImageIsIdempotentAndPreservesSums) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    RgbImage img(30, 30);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = Rgb(u(rng), u(rng), u(rng));
    const auto labels = rect_labels(30, 30, 3, 3, 26, 26, 1);
    const auto map = segment_pedestrians(img, labels, 10);
    const auto once = mean_color_image(img, map);
    const auto twice = mean_color_image(once, map);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_LT((once[i] - twice[i]).norm(), 1e-12);
    EXPECT_EQ(once(0, 0), img(0, 0));
    Rgb a = Rgb::Zero(), b = Rgb::Zero();
    for (std::size_t i = 0; i < img.size(); ++i)
        if (map.labels[i] >= 0) {
            a += img[i];
            b += once[i];
        }
    EXPECT_LT((a - b).norm(), 1e-9);
}

TEST(Superpixel, Deterministic) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    RgbImage img(30, 30);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = Rgb(u(rng), u(rng), u(rng));
    const auto labels = rect_labels(30, 30, 3, 3, 26, 26, 1);
    EXPECT_EQ(segment_pedestrians(img, labels, 10).labels, segment_pedestrians(img, labels, 10).labels);
}
