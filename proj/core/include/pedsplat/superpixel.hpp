#pragma once

#include "pedsplat/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace pedsplat {

struct Segment {
    std::uint16_t instance = 0; // instance label in the source label image
    int index = 0;              // segment index within its instance
    std::size_t pixel_count = 0;
    Rgb mean_color = Rgb::Zero();
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
};

/// Per-pedestrian superpixel partition. `labels` holds an index into `segments`,
/// or -1 for pixels outside every pedestrian mask.
struct SuperpixelMap {
    Image<int> labels;
    std::vector<Segment> segments;

    std::vector<int> segments_of(std::uint16_t instance) const;
};

struct SlicParams {
    int iterations = 10;
    double compactness = 10.0;
};

/// Mask-constrained SLIC: k-means in (L, a, b, x, y) restricted to each
/// pedestrian mask. Masks with at most `k` pixels get one segment per pixel.
SuperpixelMap segment_pedestrians(const RgbImage& image, const LabelImage& instances, int k,
                                  const SlicParams& params = {});

/// Replaces every labeled pixel with its segment mean color.
RgbImage mean_color_image(const RgbImage& image, const SuperpixelMap& map);

} // namespace pedsplat
