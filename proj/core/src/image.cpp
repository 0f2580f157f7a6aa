#include "pedsplat/image.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

namespace pedsplat {

void PixelBox::extend(int x, int y) {
    if (empty()) {
        x0 = x1 = x;
        y0 = y1 = y;
        return;
    }
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
}

bool PixelBox::intersects(const PixelBox& other) const {
    if (empty() || other.empty()) return false;
    return x0 <= other.x1 && other.x0 <= x1 && y0 <= other.y1 && other.y0 <= y1;
}

Mask binary_of(const LabelImage& labels, std::uint16_t label) {
    Mask out(labels.width(), labels.height(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == label ? 1 : 0;
    return out;
}

Mask foreground_of(const LabelImage& labels) {
    Mask out(labels.width(), labels.height(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] != 0 ? 1 : 0;
    return out;
}

std::vector<std::uint16_t> instance_labels(const LabelImage& labels) {
    std::set<std::uint16_t> seen;
    for (auto v : labels.data())
        if (v != 0) seen.insert(v);
    return {seen.begin(), seen.end()};
}

std::size_t count_nonzero(const Mask& mask) {
    return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

namespace {

Mask morph(const Mask& mask, int radius, bool dilation) {
    Mask out = mask;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            bool hit = !dilation;
            for (int dy = -radius; dy <= radius && hit != dilation; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    const bool on = mask.contains(nx, ny) && mask(nx, ny) != 0;
                    if (dilation && on) {
                        hit = true;
                        break;
                    }
                    if (!dilation && !on) {
                        hit = false;
                        break;
                    }
                }
            }
            out(x, y) = hit ? 1 : 0;
        }
    }
    return out;
}

} // namespace

Mask erode(const Mask& mask, int radius) { return morph(mask, radius, false); }
Mask dilate(const Mask& mask, int radius) { return morph(mask, radius, true); }

PixelBox bounding_box(const Mask& mask) {
    PixelBox box;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) box.extend(x, y);
    return box;
}

Image<int> connected_components(const Mask& mask, int& count) {
    Image<int> comp(mask.width(), mask.height(), 0);
    count = 0;
    std::queue<std::pair<int, int>> queue;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y) || comp(x, y)) continue;
            ++count;
            comp(x, y) = count;
            queue.emplace(x, y);
            while (!queue.empty()) {
                auto [cx, cy] = queue.front();
                queue.pop();
                constexpr int dxs[] = {1, -1, 0, 0};
                constexpr int dys[] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = cx + dxs[k], ny = cy + dys[k];
                    if (mask.contains(nx, ny) && mask(nx, ny) && !comp(nx, ny)) {
                        comp(nx, ny) = count;
                        queue.emplace(nx, ny);
                    }
                }
            }
        }
    }
    return comp;
}

ScalarImage distance_transform(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    constexpr double kBig = 1e12;
    ScalarImage d(w, h, 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) d[i] = mask[i] ? kBig : 0.0;
    auto at = [&](int x, int y) { return d.contains(x, y) ? d(x, y) : 0.0; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (d(x, y) == 0.0) continue;
            d(x, y) = std::min({d(x, y), at(x - 1, y) + 3, at(x, y - 1) + 3, at(x - 1, y - 1) + 4,
                                at(x + 1, y - 1) + 4});
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            if (d(x, y) == 0.0) continue;
            d(x, y) = std::min({d(x, y), at(x + 1, y) + 3, at(x, y + 1) + 3, at(x + 1, y + 1) + 4,
                                at(x - 1, y + 1) + 4});
        }
    }
    for (auto& v : d.data()) v /= 3.0;
    return d;
}

Eigen::Vector3d rgb_to_lab(const Rgb& rgb) {
    auto linear = [](double c) {
        c = std::clamp(c, 0.0, 1.0);
        return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    };
    const double r = linear(rgb.x()), g = linear(rgb.y()), b = linear(rgb.z());
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    auto f = [](double t) {
        constexpr double e = 216.0 / 24389.0;
        constexpr double k = 24389.0 / 27.0;
        return t > e ? std::cbrt(t) : (k * t + 16.0) / 116.0;
    };
    const double fx = f(x), fy = f(y), fz = f(z);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

} // namespace pedsplat
