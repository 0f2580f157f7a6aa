#include "pedsplat/superpixel.hpp"

#include "pedsplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pedsplat {

std::vector<int> SuperpixelMap::segments_of(std::uint16_t instance) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < segments.size(); ++i)
        if (segments[i].instance == instance) out.push_back(static_cast<int>(i));
    return out;
}

namespace {

using Feature = Eigen::Matrix<double, 5, 1>;

struct PixelRef {
    int x;
    int y;
    int component;
    Feature feature;
};

// Largest-remainder apportionment of `total` seeds over components, capped by
// component size, at least one seed per component while seeds remain.
std::vector<int> allocate_seeds(const std::vector<std::size_t>& areas, int total) {
    const std::size_t n = areas.size();
    std::vector<int> seeds(n, 0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return areas[a] > areas[b]; });
    int left = total;
    for (auto c : order) {
        if (left == 0) break;
        seeds[c] = 1;
        --left;
    }
    const double area_sum = std::accumulate(areas.begin(), areas.end(), 0.0);
    while (left > 0) {
        // Give the next seed to the component with the largest deficit.
        std::size_t best = n;
        double best_gap = -std::numeric_limits<double>::infinity();
        for (auto c : order) {
            if (static_cast<std::size_t>(seeds[c]) >= areas[c]) continue;
            const double gap = total * areas[c] / area_sum - seeds[c];
            if (gap > best_gap) {
                best_gap = gap;
                best = c;
            }
        }
        if (best == n) break;
        ++seeds[best];
        --left;
    }
    return seeds;
}

// Farthest-point selection of `count` items among `candidates` (pixel coords),
// starting from the candidate nearest `start`.
std::vector<Eigen::Vector2d> farthest_points(const std::vector<Eigen::Vector2d>& candidates,
                                             const std::vector<Eigen::Vector2d>& fixed, std::size_t count,
                                             const Eigen::Vector2d& start) {
    std::vector<Eigen::Vector2d> chosen;
    if (candidates.empty() || count == 0) return chosen;
    std::vector<double> dist(candidates.size(), std::numeric_limits<double>::infinity());
    auto absorb = [&](const Eigen::Vector2d& p) {
        for (std::size_t i = 0; i < candidates.size(); ++i)
            dist[i] = std::min(dist[i], (candidates[i] - p).squaredNorm());
    };
    for (const auto& p : fixed) absorb(p);
    if (fixed.empty()) {
        std::size_t first = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const double d = (candidates[i] - start).squaredNorm();
            if (d < best) {
                best = d;
                first = i;
            }
        }
        chosen.push_back(candidates[first]);
        absorb(candidates[first]);
    }
    while (chosen.size() < count) {
        const auto it = std::max_element(dist.begin(), dist.end());
        if (*it <= 0.0) break;
        const auto i = static_cast<std::size_t>(it - dist.begin());
        chosen.push_back(candidates[i]);
        absorb(candidates[i]);
    }
    return chosen;
}

std::vector<Eigen::Vector2d> hex_seeds(const std::vector<Eigen::Vector2d>& pixels, const Image<int>& comp,
                                       int component, int count) {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : pixels) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
        centroid += p;
    }
    centroid /= static_cast<double>(pixels.size());
    const double spacing = std::sqrt(2.0 * pixels.size() / (std::sqrt(3.0) * count));
    const double row_step = spacing * std::sqrt(3.0) / 2.0;
    std::vector<Eigen::Vector2d> lattice;
    int row = 0;
    for (double y = y0 + row_step / 2.0; y <= y1 + 0.5; y += row_step, ++row) {
        const double offset = (row % 2 == 0) ? spacing / 2.0 : spacing;
        for (double x = x0 - spacing / 2.0 + offset; x <= x1 + 0.5; x += spacing) {
            const int px = static_cast<int>(std::lround(x)), py = static_cast<int>(std::lround(y));
            if (comp.contains(px, py) && comp(px, py) == component) lattice.emplace_back(px, py);
        }
    }
    std::vector<Eigen::Vector2d> seeds;
    if (lattice.size() >= static_cast<std::size_t>(count)) {
        seeds = farthest_points(lattice, {}, count, centroid);
    } else {
        seeds = lattice;
        auto extra = farthest_points(pixels, seeds, count - seeds.size(), centroid);
        seeds.insert(seeds.end(), extra.begin(), extra.end());
    }
    return seeds;
}

void segment_instance(const RgbImage& image, const LabelImage& instances, std::uint16_t instance, int k,
                      const SlicParams& params, SuperpixelMap& map) {
    std::vector<Eigen::Vector2i> coords;
    for (int y = 0; y < instances.height(); ++y)
        for (int x = 0; x < instances.width(); ++x)
            if (instances(x, y) == instance) coords.emplace_back(x, y);
    if (coords.empty()) return;

    const int base = static_cast<int>(map.segments.size());
    if (coords.size() <= static_cast<std::size_t>(k)) {
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const auto& c = coords[i];
            Segment s;
            s.instance = instance;
            s.index = static_cast<int>(i);
            s.pixel_count = 1;
            s.mean_color = image(c.x(), c.y());
            s.centroid = c.cast<double>();
            map.labels(c.x(), c.y()) = base + static_cast<int>(i);
            map.segments.push_back(s);
        }
        return;
    }

    const Mask mask = binary_of(instances, instance);
    int ncomp = 0;
    const Image<int> comp = connected_components(mask, ncomp);
    std::vector<std::size_t> areas(ncomp, 0);
    std::vector<std::vector<Eigen::Vector2d>> comp_pixels(ncomp);
    for (const auto& c : coords) {
        const int ci = comp(c.x(), c.y()) - 1;
        ++areas[ci];
        comp_pixels[ci].emplace_back(c.x(), c.y());
    }
    const std::vector<int> seeds_per = allocate_seeds(areas, k);

    const double spacing = std::sqrt(static_cast<double>(coords.size()) / k);
    const double spatial_weight = params.compactness / spacing;

    std::vector<PixelRef> pixels;
    pixels.reserve(coords.size());
    for (const auto& c : coords) {
        Feature f;
        f.head<3>() = rgb_to_lab(image(c.x(), c.y()));
        f(3) = c.x() * spatial_weight;
        f(4) = c.y() * spatial_weight;
        pixels.push_back({c.x(), c.y(), comp(c.x(), c.y()) - 1, f});
    }

    std::vector<Feature> centers;
    std::vector<int> center_comp;
    for (int ci = 0; ci < ncomp; ++ci) {
        if (seeds_per[ci] == 0) continue;
        for (const auto& s : hex_seeds(comp_pixels[ci], comp, ci + 1, seeds_per[ci])) {
            Feature f;
            f.head<3>() = rgb_to_lab(image(static_cast<int>(s.x()), static_cast<int>(s.y())));
            f(3) = s.x() * spatial_weight;
            f(4) = s.y() * spatial_weight;
            centers.push_back(f);
            center_comp.push_back(ci);
        }
    }
    const std::size_t nc = centers.size();
    std::vector<bool> comp_seeded(ncomp, false);
    for (int ci : center_comp) comp_seeded[ci] = true;

    std::vector<int> assign(pixels.size(), 0);
    std::vector<double> cost(pixels.size(), 0.0);
    auto assign_all = [&] {
        for (std::size_t i = 0; i < pixels.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t c = 0; c < nc; ++c) {
                // Distances across components are infinite unless the component has no seed.
                if (comp_seeded[pixels[i].component] && center_comp[c] != pixels[i].component) continue;
                const double d = (pixels[i].feature - centers[c]).squaredNorm();
                if (d < best) {
                    best = d;
                    arg = static_cast<int>(c);
                }
            }
            assign[i] = arg;
            cost[i] = best;
        }
    };
    // Moves one pixel into each empty cluster, taking the worst-fit pixel of the
    // largest cluster in the same component.
    auto repair_empty = [&] {
        std::vector<std::size_t> counts(nc, 0);
        for (int a : assign) ++counts[a];
        for (std::size_t c = 0; c < nc; ++c) {
            if (counts[c] > 0) continue;
            std::size_t donor = nc;
            for (std::size_t d = 0; d < nc; ++d) {
                if (center_comp[d] != center_comp[c] || counts[d] < 2) continue;
                if (donor == nc || counts[d] > counts[donor]) donor = d;
            }
            if (donor == nc) continue;
            std::size_t worst = pixels.size();
            for (std::size_t i = 0; i < pixels.size(); ++i)
                if (assign[i] == static_cast<int>(donor) && (worst == pixels.size() || cost[i] > cost[worst]))
                    worst = i;
            assign[worst] = static_cast<int>(c);
            cost[worst] = 0.0;
            centers[c] = pixels[worst].feature;
            --counts[donor];
            ++counts[c];
        }
    };

    for (int it = 0; it < params.iterations; ++it) {
        assign_all();
        repair_empty();
        std::vector<Feature> sums(nc, Feature::Zero());
        std::vector<std::size_t> counts(nc, 0);
        for (std::size_t i = 0; i < pixels.size(); ++i) {
            sums[assign[i]] += pixels[i].feature;
            ++counts[assign[i]];
        }
        for (std::size_t c = 0; c < nc; ++c)
            if (counts[c] > 0) centers[c] = sums[c] / static_cast<double>(counts[c]);
    }
    assign_all();
    repair_empty();

    std::vector<Segment> segs(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        segs[c].instance = instance;
        segs[c].index = static_cast<int>(c);
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        auto& s = segs[assign[i]];
        ++s.pixel_count;
        s.mean_color += image(pixels[i].x, pixels[i].y);
        s.centroid += Eigen::Vector2d(pixels[i].x, pixels[i].y);
        map.labels(pixels[i].x, pixels[i].y) = base + assign[i];
    }
    for (auto& s : segs) {
        if (s.pixel_count == 0) continue;
        s.mean_color /= static_cast<double>(s.pixel_count);
        s.centroid /= static_cast<double>(s.pixel_count);
    }
    map.segments.insert(map.segments.end(), segs.begin(), segs.end());
}

} // namespace

SuperpixelMap segment_pedestrians(const RgbImage& image, const LabelImage& instances, int k,
                                  const SlicParams& params) {
    if (k < 1) throw ConfigError("superpixel count K must be >= 1");
    if (image.width() != instances.width() || image.height() != instances.height())
        throw DataError("superpixel: image and mask sizes differ");
    SuperpixelMap map;
    map.labels = Image<int>(instances.width(), instances.height(), -1);
    for (auto instance : instance_labels(instances)) segment_instance(image, instances, instance, k, params, map);
    return map;
}

RgbImage mean_color_image(const RgbImage& image, const SuperpixelMap& map) {
    RgbImage out = image;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int s = map.labels[i];
        if (s >= 0) out[i] = map.segments[s].mean_color;
    }
    return out;
}

} // namespace pedsplat
