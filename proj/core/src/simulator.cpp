#include "pedsplat/simulator.hpp"

#include "pedsplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pedsplat {

namespace {

const Rgb kPalette[] = {{0.85, 0.15, 0.15}, {0.15, 0.65, 0.20}, {0.20, 0.35, 0.85}, {0.90, 0.75, 0.10},
                        {0.70, 0.20, 0.75}, {0.10, 0.70, 0.75}, {0.95, 0.50, 0.10}, {0.55, 0.35, 0.20},
                        {0.95, 0.55, 0.70}, {0.50, 0.80, 0.30}, {0.30, 0.30, 0.30}, {0.95, 0.95, 0.95}};
const Rgb kLower[] = {{0.15, 0.15, 0.35}, {0.25, 0.20, 0.15}, {0.10, 0.10, 0.10}, {0.35, 0.35, 0.40}};
constexpr int kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

Rgb ground_color(const Eigen::Vector3d& p) {
    const bool odd = (static_cast<long>(std::floor(p.x())) + static_cast<long>(std::floor(p.y()))) & 1;
    return odd ? Rgb(0.50, 0.50, 0.47) : Rgb(0.42, 0.42, 0.40);
}

const Rgb kSky(0.75, 0.82, 0.90);

class GroundTruthOracle : public SegmentationOracle {
public:
    explicit GroundTruthOracle(const GroundTruthBundle& truth) : truth_(truth) {}

    Mask segment(const SegmentationRequest& request) override {
        const int v = truth_.view_index(request.view_id);
        if (v < 0) throw DataError("ground-truth oracle: unknown view " + request.view_id);
        const LabelImage& ids = truth_.id_masks[v];
        std::map<std::uint16_t, int> votes;
        for (const auto& p : request.points) {
            const Eigen::Vector2i q = Camera::nearest_pixel(p);
            if (!ids.contains(q.x(), q.y())) continue;
            const auto id = ids(q.x(), q.y());
            if (id != 0) ++votes[id];
        }
        std::uint16_t best = 0;
        int best_count = 0;
        for (const auto& [id, count] : votes)
            if (count > best_count) {
                best = id;
                best_count = count;
            }
        Mask out(ids.width(), ids.height(), 0);
        if (best == 0) return out;
        const Mask silhouette = binary_of(ids, best);
        if (!bounding_box(silhouette).intersects(request.box)) return out;
        return silhouette;
    }

private:
    const GroundTruthBundle& truth_;
};

} // namespace

std::optional<double> Capsule::intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const {
    const double len = dir.norm();
    if (!(len > 0.0)) return std::nullopt;
    const Eigen::Vector3d rd = dir / len;
    const Eigen::Vector3d a(position.x(), position.y(), radius);
    const Eigen::Vector3d b(position.x(), position.y(), height - radius);
    const Eigen::Vector3d ba = b - a, oa = origin - a;
    const double baba = ba.dot(ba), bard = ba.dot(rd), baoa = ba.dot(oa), rdoa = rd.dot(oa), oaoa = oa.dot(oa);
    const double qa = baba - bard * bard;
    const double qb = baba * rdoa - baoa * bard;
    const double qc = baba * oaoa - baoa * baoa - radius * radius * baba;
    const double disc = qb * qb - qa * qc;
    if (disc < 0.0) return std::nullopt;
    double t = -1.0;
    if (qa > 1e-14) {
        t = (-qb - std::sqrt(disc)) / qa;
        const double y = baoa + t * bard;
        if (y > 0.0 && y < baba) return t > 0.0 ? std::optional<double>(t / len) : std::nullopt;
    }
    // End caps: the side hit was outside the segment, so test the nearer sphere.
    const double y = baoa + std::max(t, 0.0) * bard;
    const Eigen::Vector3d oc = y <= 0.0 ? oa : Eigen::Vector3d(origin - b);
    const double cb = rd.dot(oc);
    const double cc = oc.dot(oc) - radius * radius;
    const double h = cb * cb - cc;
    if (h <= 0.0) return std::nullopt;
    t = -cb - std::sqrt(h);
    if (t <= 0.0) return std::nullopt;
    return t / len;
}

void SceneConfig::validate() const {
    if (pedestrians < 0) throw ConfigError("simulator: pedestrian count must be >= 0");
    if (!(area_half_extent > 0) || !(radius > 0) || !(height > 2 * radius))
        throw ConfigError("simulator: need positive area and radius, and height > 2 * radius");
    if (cameras < 1 || image_size < 8 || !(focal > 0) || !(ring_radius > 0))
        throw ConfigError("simulator: invalid camera ring");
    if (!(brightness_jitter >= 0 && brightness_jitter < 1)) throw ConfigError("simulator: jitter must lie in [0, 1)");
    if (!(missed_mask_rate >= 0 && missed_mask_rate <= 1)) throw ConfigError("simulator: missed rate must lie in [0, 1]");
}

std::vector<Eigen::Vector2d> GroundTruthBundle::locations() const {
    std::vector<Eigen::Vector2d> out;
    for (const auto& p : pedestrians) out.push_back(p.position);
    return out;
}

std::optional<RayHit> GroundTruthBundle::raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const {
    std::optional<RayHit> best;
    for (std::size_t i = 0; i < pedestrians.size(); ++i) {
        const auto t = pedestrians[i].intersect(origin, dir);
        if (t && (!best || *t < best->t)) best = RayHit{static_cast<int>(i), *t};
    }
    return best;
}

double GroundTruthBundle::depth_at(int view, const Eigen::Vector2d& pixel) const {
    const Camera& cam = cameras.at(view);
    const auto hit = raycast(cam.center(), cam.ray_direction(pixel));
    return hit ? hit->t : kInvalidDepth; // the ray direction has unit camera z, so t is depth
}

int GroundTruthBundle::view_index(const std::string& view_id) const {
    const auto it = std::find(view_ids.begin(), view_ids.end(), view_id);
    return it == view_ids.end() ? -1 : static_cast<int>(it - view_ids.begin());
}

SimulatedScene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);
    const double separation = std::max(cfg.min_separation, 2.0 * cfg.radius);

    SimulatedScene scene;
    GroundTruthBundle& truth = scene.truth;
    int attempts = 0;
    while (static_cast<int>(truth.pedestrians.size()) < cfg.pedestrians) {
        if (++attempts > cfg.max_placement_attempts)
            throw ConfigError("simulator: could not place " + std::to_string(cfg.pedestrians) +
                              " pedestrians with the requested separation");
        const Eigen::Vector2d p(cfg.area_half_extent * u(rng), cfg.area_half_extent * u(rng));
        const bool clear = std::all_of(truth.pedestrians.begin(), truth.pedestrians.end(),
                                       [&](const Capsule& c) { return (c.position - p).norm() >= separation; });
        if (!clear) continue;
        const int k = static_cast<int>(truth.pedestrians.size());
        Capsule c;
        c.position = p;
        c.radius = cfg.radius;
        c.height = cfg.height;
        c.upper_color = kPalette[k % kPaletteSize];
        c.lower_color = kLower[(k / 2) % 4];
        truth.pedestrians.push_back(c);
    }

    const int n = cfg.image_size;
    Intrinsics k;
    k.fx = k.fy = cfg.focal;
    k.cx = k.cy = 0.5 * (n - 1);
    k.width = k.height = n;
    truth.visible.assign(truth.pedestrians.size(), std::vector<bool>(cfg.cameras, false));
    for (int v = 0; v < cfg.cameras; ++v) {
        const double a = 2.0 * M_PI * v / cfg.cameras + 0.25;
        const Eigen::Vector3d eye(cfg.ring_radius * std::cos(a), cfg.ring_radius * std::sin(a), cfg.camera_height);
        const Camera cam = Camera::look_at("cam" + std::to_string(v), k, eye, cfg.look_at);
        truth.cameras.push_back(cam);
        truth.view_ids.push_back(view_id(cfg.frame, cam.name));

        const double gain = 1.0 + cfg.brightness_jitter * u(rng);
        RgbImage image(n, n);
        DepthImage depth(n, n, kInvalidDepth);
        LabelImage ids(n, n, 0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const Eigen::Vector3d dir = cam.ray_direction(Eigen::Vector2d(x, y));
                const auto hit = truth.raycast(cam.center(), dir);
                Rgb color;
                if (hit) {
                    const Capsule& c = truth.pedestrians[hit->pedestrian];
                    const Eigen::Vector3d p = cam.center() + hit->t * dir;
                    color = p.z() > 0.45 * c.height ? c.upper_color : c.lower_color;
                    depth(x, y) = hit->t;
                    ids(x, y) = static_cast<std::uint16_t>(hit->pedestrian + 1);
                    truth.visible[hit->pedestrian][v] = true;
                } else if (dir.z() < 0.0) {
                    color = ground_color(cam.center() - cam.center().z() / dir.z() * dir);
                } else {
                    color = kSky;
                }
                image(x, y) = (gain * color).cwiseMin(Rgb::Ones());
            }

        // Instance labels as a detector would report them.
        std::vector<int> present;
        for (std::size_t p = 0; p < truth.pedestrians.size(); ++p)
            if (truth.visible[p][v]) present.push_back(static_cast<int>(p));
        std::vector<int> order = present;
        if (cfg.permute_labels) std::shuffle(order.begin(), order.end(), rng);
        std::map<int, std::uint16_t> label_of;
        std::map<std::uint16_t, int> to_ped;
        std::uint16_t next = 1;
        for (int p : order) {
            if (cfg.missed_mask_rate > 0.0 && u01(rng) < cfg.missed_mask_rate) {
                truth.missed.emplace_back(v, p);
                continue;
            }
            label_of[p] = next;
            to_ped[next] = p;
            ++next;
        }
        LabelImage instances(n, n, 0);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == 0) continue;
            const auto it = label_of.find(ids[i] - 1);
            if (it != label_of.end()) instances[i] = it->second;
        }

        scene.views.push_back({truth.view_ids.back(), cam, std::move(image), std::move(instances), std::nullopt});
        truth.depth.push_back(std::move(depth));
        truth.id_masks.push_back(std::move(ids));
        truth.label_to_pedestrian.push_back(std::move(to_ped));
    }
    std::sort(truth.missed.begin(), truth.missed.end());
    return scene;
}

std::unique_ptr<SegmentationOracle> gt_oracle(const GroundTruthBundle& truth) {
    return std::make_unique<GroundTruthOracle>(truth);
}

} // namespace pedsplat
