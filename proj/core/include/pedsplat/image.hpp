#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace pedsplat {

using Rgb = Eigen::Vector3d;

/// Row-major image with value semantics. Pixel (x, y) is column x, row y; the
/// pixel center sits at integer coordinates.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, const T& fill = T{})
        : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Image& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using RgbImage = Image<Rgb>;
/// Binary mask, 0 or 1.
using Mask = Image<std::uint8_t>;
/// Instance label image: 0 is background, k > 0 is instance k.
using LabelImage = Image<std::uint16_t>;
/// Metric depth; NaN marks invalid pixels.
using DepthImage = Image<double>;
using ScalarImage = Image<double>;

inline constexpr double kInvalidDepth = std::numeric_limits<double>::quiet_NaN();

struct PixelBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = -1; // inclusive
    int y1 = -1; // inclusive

    bool empty() const { return x1 < x0 || y1 < y0; }
    bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    void extend(int x, int y);
    bool intersects(const PixelBox& other) const;
};

// Mask utilities. All use 4-connectivity for components and a 3x3 window for morphology.
Mask binary_of(const LabelImage& labels, std::uint16_t label);
Mask foreground_of(const LabelImage& labels);
std::vector<std::uint16_t> instance_labels(const LabelImage& labels);
std::size_t count_nonzero(const Mask& mask);
Mask erode(const Mask& mask, int radius = 1);
Mask dilate(const Mask& mask, int radius = 1);
PixelBox bounding_box(const Mask& mask);

/// Connected components of the nonzero pixels; returns component index + 1 per
/// pixel (0 for background) and writes the component count.
Image<int> connected_components(const Mask& mask, int& count);

/// Chamfer (3-4) distance from every foreground pixel to the nearest background
/// pixel, in pixel units; background pixels get 0. Pixels outside the frame
/// count as background.
ScalarImage distance_transform(const Mask& mask);

/// sRGB in [0,1] to CIE L*a*b* (D65).
Eigen::Vector3d rgb_to_lab(const Rgb& rgb);

} // namespace pedsplat
