#include "pedsplat/gaussian.hpp"

#include "pedsplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pedsplat {

namespace {

constexpr double kMinLogScale = -13.8; // exp -> ~1e-6 m
constexpr double kMaxLogScale = 2.3;   // exp -> ~10 m

double clamp_log_scale(double s) { return std::clamp(std::log(s), kMinLogScale + 1e-3, kMaxLogScale - 1e-3); }

std::optional<std::pair<double, double>> clip_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                                  const Eigen::AlignedBox3d& box) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dir[a]) < 1e-15) {
            if (origin[a] < box.min()[a] || origin[a] > box.max()[a]) return std::nullopt;
            continue;
        }
        double ta = (box.min()[a] - origin[a]) / dir[a];
        double tb = (box.max()[a] - origin[a]) / dir[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return std::nullopt;
    return std::make_pair(t0, t1);
}

Gaussian3D make_sphere(const Eigen::Vector3d& mean, double scale, const Rgb& color, double opacity) {
    Gaussian3D g;
    g.mean = mean;
    g.log_scales = Eigen::Vector3d::Constant(clamp_log_scale(scale));
    g.opacity_logit = logit(opacity);
    g.color = color;
    return g;
}

} // namespace

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
}

double Gaussian3D::opacity() const { return sigmoid(opacity_logit); }

Eigen::Matrix3d Gaussian3D::covariance() const {
    const Eigen::Matrix3d r = orientation.normalized().toRotationMatrix();
    const Eigen::Matrix3d m = r * scales().asDiagonal();
    return m * m.transpose();
}

bool Gaussian3D::valid() const {
    if (!mean.allFinite() || !log_scales.allFinite() || !color.allFinite() || !std::isfinite(opacity_logit))
        return false;
    if ((log_scales.array() <= kMinLogScale).any() || (log_scales.array() >= kMaxLogScale).any()) return false;
    if (std::abs(orientation.norm() - 1.0) > 1e-9) return false;
    const double o = opacity();
    return o > 0.0 && o < 1.0;
}

void RaySamplingConfig::validate() const {
    if (samples_per_ray < 1) throw ConfigError("ray sampling: samples_per_ray must be >= 1");
    if (t_near && t_far && !(*t_near > 0.0 && *t_near < *t_far))
        throw ConfigError("ray sampling: require 0 < t_near < t_far");
    if (!(initial_opacity > 0.0 && initial_opacity < 1.0))
        throw ConfigError("ray sampling: initial opacity must lie in (0, 1)");
}

double superpixel_radius(double pixel_count, double dx, double dy) {
    return std::sqrt(pixel_count * dx * dy / std::numbers::pi);
}

double init_scale(double t, double f, double r, const Eigen::Vector3d& c, const Eigen::Vector3d& o) {
    const double dist = (c - o).norm();
    if (!(t > 0.0) || !(f > 0.0) || !(r >= 0.0) || dist < f * (1.0 - 1e-12))
        throw GeometryError("init_scale: degenerate cone (need t > 0, f > 0, r >= 0, |c - o| >= f)");
    const double lateral = std::sqrt(std::max(0.0, dist * dist - f * f));
    const double edge = std::sqrt((lateral - r) * (lateral - r) + f * f);
    return t * f * r / (dist * edge);
}

double superpixel_scale(const Camera& camera, const Eigen::Vector2d& pixel, double pixel_count, double t) {
    const auto& k = camera.intrinsics;
    const double r = superpixel_radius(pixel_count, 1.0 / k.fx, 1.0 / k.fy);
    const Eigen::Vector3d o = camera.center();
    const Eigen::Vector3d c = o + camera.ray_direction(pixel);
    return init_scale(t, 1.0, r, c, o);
}

std::vector<Gaussian3D> init_from_superpixels(std::span<const CameraView> views,
                                              std::span<const SuperpixelMap> maps,
                                              const RaySamplingConfig& cfg) {
    cfg.validate();
    if (views.size() != maps.size()) throw DataError("init_from_superpixels: one superpixel map per view required");
    std::vector<Gaussian3D> out;
    for (std::size_t v = 0; v < views.size(); ++v) {
        const Camera& cam = views[v].camera;
        for (const auto& seg : maps[v].segments) {
            if (seg.pixel_count == 0) continue;
            const Eigen::Vector3d dir = cam.ray_direction(seg.centroid).normalized();
            double tn = 0.0, tf = 0.0;
            if (cfg.t_near && cfg.t_far) {
                tn = *cfg.t_near;
                tf = *cfg.t_far;
            } else {
                const auto seg_t = clip_ray(cam.center(), dir, cfg.scene_bounds);
                if (!seg_t) continue;
                tn = std::max(seg_t->first, 1e-3);
                tf = seg_t->second;
                if (!(tf > tn)) continue;
            }
            const int n = cfg.samples_per_ray;
            for (int j = 0; j < n; ++j) {
                const double t = n == 1 ? 0.5 * (tn + tf) : tn + (tf - tn) * j / (n - 1);
                const double s = superpixel_scale(cam, seg.centroid, static_cast<double>(seg.pixel_count), t);
                out.push_back(make_sphere(cam.center() + t * dir, s, seg.mean_color, cfg.initial_opacity));
            }
        }
    }
    return out;
}

std::vector<Gaussian3D> init_from_depth(std::span<const CameraView> views, std::span<const SuperpixelMap> maps,
                                        const std::vector<std::vector<double>>& depths, int samples,
                                        double half_width, double initial_opacity) {
    if (views.size() != maps.size() || views.size() != depths.size())
        throw DataError("init_from_depth: views, maps and depths must align");
    if (samples < 1) throw ConfigError("init_from_depth: samples must be >= 1");
    std::vector<Gaussian3D> out;
    for (std::size_t v = 0; v < views.size(); ++v) {
        const Camera& cam = views[v].camera;
        for (std::size_t s = 0; s < maps[v].segments.size(); ++s) {
            const auto& seg = maps[v].segments[s];
            const double depth = s < depths[v].size() ? depths[v][s] : kInvalidDepth;
            if (seg.pixel_count == 0 || !(depth > 0.0)) continue;
            const Eigen::Vector3d ray = cam.ray_direction(seg.centroid);
            const Eigen::Vector3d dir = ray.normalized();
            const double center_t = depth * ray.norm();
            for (int j = 0; j < samples; ++j) {
                const double offset = samples == 1 ? 0.0 : -half_width + 2.0 * half_width * j / (samples - 1);
                const double t = center_t + offset;
                if (!(t > 1e-3)) continue;
                const double sc = superpixel_scale(cam, seg.centroid, static_cast<double>(seg.pixel_count), t);
                out.push_back(make_sphere(cam.center() + t * dir, sc, seg.mean_color, initial_opacity));
            }
        }
    }
    return out;
}

std::vector<Gaussian3D> cull_background(std::span<const Gaussian3D> gaussians, std::span<const CameraView> views) {
    std::vector<Gaussian3D> out;
    out.reserve(gaussians.size());
    for (const auto& g : gaussians) {
        bool keep = true;
        for (const auto& view : views) {
            const Eigen::Vector3d pc = view.camera.world_to_camera(g.mean);
            if (pc.z() <= 1e-12) continue;
            const auto& k = view.camera.intrinsics;
            const Eigen::Vector2i px =
                Camera::nearest_pixel({k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy});
            if (!view.instances.contains(px.x(), px.y())) continue;
            if (view.instances(px.x(), px.y()) == 0) {
                keep = false;
                break;
            }
        }
        if (keep) out.push_back(g);
    }
    return out;
}

std::vector<Gaussian3D> from_point_cloud(std::span<const Eigen::Vector3d> points, std::span<const Rgb> colors,
                                         std::span<const PointSource> sources, std::span<const Camera> cameras) {
    if (points.size() != colors.size() || points.size() != sources.size())
        throw DataError("from_point_cloud: points, colors and sources must have the same length");
    std::vector<Gaussian3D> out;
    out.reserve(points.size());
    const double opacity_logit = logit(0.99);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& src = sources[i];
        if (src.view < 0 || static_cast<std::size_t>(src.view) >= cameras.size())
            throw DataError("from_point_cloud: source view index out of range");
        const Camera& cam = cameras[src.view];
        const Eigen::Vector3d offset = points[i] - cam.center();
        const double t = offset.norm();
        Gaussian3D g;
        g.mean = points[i];
        g.color = colors[i];
        g.opacity_logit = opacity_logit;
        g.orientation = Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), offset / t);
        g.orientation.normalize();
        g.log_scales = Eigen::Vector3d::Constant(clamp_log_scale(superpixel_scale(cam, src.pixel, 1.0, t)));
        out.push_back(g);
    }
    return out;
}

} // namespace pedsplat
