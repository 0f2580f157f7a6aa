#include "pedsplat/renderer.hpp"

#include "raster.hpp"

#include "pedsplat/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

namespace pedsplat {

namespace detail {

namespace {

struct Projected {
    Eigen::Vector3d p_cam;
    Eigen::Matrix<double, 2, 3> jacobian;
    Eigen::Matrix3d cov3d;
    Eigen::Vector2d center;
    Eigen::Matrix2d cov2d;
};

std::optional<Projected> project_ewa(const Gaussian3D& g, const Camera& camera, double near_plane) {
    const Eigen::Matrix3d w = camera.extrinsics.rotation.transpose();
    const Eigen::Vector3d pc = w * (g.mean - camera.extrinsics.translation);
    if (!(pc.z() > near_plane)) return std::nullopt;
    const auto& k = camera.intrinsics;
    const double z = pc.z(), z2 = z * z;
    Projected p;
    p.p_cam = pc;
    p.jacobian << k.fx / z, 0.0, -k.fx * pc.x() / z2, 0.0, k.fy / z, -k.fy * pc.y() / z2;
    p.cov3d = g.covariance();
    const Eigen::Matrix<double, 2, 3> t = p.jacobian * w;
    p.cov2d = t * p.cov3d * t.transpose();
    p.cov2d(0, 0) += kLowPassVariance;
    p.cov2d(1, 1) += kLowPassVariance;
    p.cov2d(0, 1) = p.cov2d(1, 0) = 0.5 * (p.cov2d(0, 1) + p.cov2d(1, 0));
    p.center = {k.fx * pc.x() / z + k.cx, k.fy * pc.y() / z + k.cy};
    return p;
}

// 3-sigma pixel bounds clipped to the frame; false when they miss it.
bool footprint(const Eigen::Vector2d& center, const Eigen::Matrix2d& cov, int width, int height, int& x0, int& x1,
               int& y0, int& y1) {
    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double det = cov.determinant();
    const double lambda = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = std::ceil(3.0 * std::sqrt(lambda));
    if (!std::isfinite(radius) || !center.allFinite()) return false;
    x0 = std::max(0, static_cast<int>(std::floor(center.x() - radius)));
    x1 = std::min(width - 1, static_cast<int>(std::ceil(center.x() + radius)));
    y0 = std::max(0, static_cast<int>(std::floor(center.y() - radius)));
    y1 = std::min(height - 1, static_cast<int>(std::ceil(center.y() + radius)));
    return x0 <= x1 && y0 <= y1;
}

auto sort_key(const RasterSplat& s, const Gaussian3D& g) {
    return std::make_tuple(s.depth, !s.foreground, g.mean.x(), g.mean.y(), g.mean.z(), g.opacity_logit,
                           g.log_scales.x(), g.log_scales.y(), g.log_scales.z(), g.color.x(), g.color.y(),
                           g.color.z(), g.orientation.w(), g.orientation.x(), g.orientation.y(), g.orientation.z());
}

inline double alpha_at(const RasterSplat& s, double dx, double dy, double& gauss) {
    const double power = 0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) + s.conic_b * dx * dy;
    gauss = std::exp(-power);
    return std::min(kMaxAlpha, s.opacity * gauss);
}

} // namespace

GaussianGrad& GaussianGrad::operator+=(const GaussianGrad& o) {
    mean += o.mean;
    log_scales += o.log_scales;
    quaternion += o.quaternion;
    opacity_logit += o.opacity_logit;
    color += o.color;
    screen += o.screen;
    views += o.views;
    return *this;
}

std::vector<RasterSplat> prepare(std::span<const Gaussian3D> foreground, std::span<const Gaussian3D> backdrop,
                                 const Camera& camera, double near_plane) {
    const int width = camera.intrinsics.width, height = camera.intrinsics.height;
    std::vector<RasterSplat> splats;
    std::vector<const Gaussian3D*> owners;
    splats.reserve(foreground.size() + backdrop.size());
    auto add = [&](const Gaussian3D& g, std::size_t index, bool fg) {
        const auto p = project_ewa(g, camera, near_plane);
        if (!p) return;
        RasterSplat s;
        if (!footprint(p->center, p->cov2d, width, height, s.x0, s.x1, s.y0, s.y1)) return;
        const double det = p->cov2d.determinant();
        if (!(det > 0.0)) return;
        s.source = index;
        s.foreground = fg;
        s.center = p->center;
        s.cov2d = p->cov2d;
        s.conic_a = p->cov2d(1, 1) / det;
        s.conic_b = -p->cov2d(0, 1) / det;
        s.conic_c = p->cov2d(0, 0) / det;
        s.opacity = g.opacity();
        s.color = g.color;
        s.depth = p->p_cam.z();
        s.p_cam = p->p_cam;
        s.jacobian = p->jacobian;
        s.cov3d = p->cov3d;
        splats.push_back(s);
        owners.push_back(&g);
    };
    for (std::size_t i = 0; i < foreground.size(); ++i) add(foreground[i], i, true);
    for (std::size_t i = 0; i < backdrop.size(); ++i) add(backdrop[i], i, false);

    std::vector<std::size_t> order(splats.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sort_key(splats[a], *owners[a]) < sort_key(splats[b], *owners[b]);
    });
    std::vector<RasterSplat> sorted;
    sorted.reserve(splats.size());
    for (auto i : order) sorted.push_back(splats[i]);
    return sorted;
}

RasterBuffers rasterize(std::span<const RasterSplat> splats, int width, int height, const Rgb& background) {
    RasterBuffers b;
    b.rgb = RgbImage(width, height, Rgb::Zero());
    b.depth = ScalarImage(width, height, 0.0);
    b.mask = ScalarImage(width, height, 0.0);
    b.transmittance = ScalarImage(width, height, 1.0);
    const int n = static_cast<int>(splats.size());
    b.last = Image<int>(width, height, n);
    std::vector<std::uint8_t> done(static_cast<std::size_t>(width) * height, 0);
    for (int r = 0; r < n; ++r) {
        const RasterSplat& s = splats[r];
        for (int y = s.y0; y <= s.y1; ++y) {
            const double dy = y - s.center.y();
            for (int x = s.x0; x <= s.x1; ++x) {
                const std::size_t idx = b.rgb.index(x, y);
                if (done[idx]) continue;
                double gauss = 0.0;
                const double alpha = alpha_at(s, x - s.center.x(), dy, gauss);
                double& t = b.transmittance[idx];
                const double w = t * alpha;
                b.rgb[idx] += w * s.color;
                if (s.foreground) {
                    b.mask[idx] += w;
                    b.depth[idx] += w * s.depth;
                }
                t *= 1.0 - alpha;
                if (t < kMinTransmittance) {
                    done[idx] = 1;
                    b.last[idx] = r;
                }
            }
        }
    }
    if (background.squaredNorm() > 0.0)
        for (std::size_t i = 0; i < b.rgb.size(); ++i) b.rgb[i] += b.transmittance[i] * background;
    return b;
}

std::vector<SplatGrad> backward(std::span<const RasterSplat> splats, const RasterBuffers& buffers,
                                const RgbImage& d_rgb, const ScalarImage& d_depth, const ScalarImage& d_mask,
                                const Rgb& background) {
    const int width = buffers.rgb.width(), height = buffers.rgb.height();
    std::vector<SplatGrad> grads(splats.size());
    ScalarImage trans = buffers.transmittance;
    RgbImage s_rgb(width, height, Rgb::Zero());
    for (std::size_t i = 0; i < s_rgb.size(); ++i) s_rgb[i] = trans[i] * background;
    ScalarImage s_depth(width, height, 0.0), s_mask(width, height, 0.0);

    for (int r = static_cast<int>(splats.size()) - 1; r >= 0; --r) {
        const RasterSplat& s = splats[r];
        SplatGrad& g = grads[r];
        const double f_mask = s.foreground ? 1.0 : 0.0;
        const double f_depth = s.foreground ? s.depth : 0.0;
        for (int y = s.y0; y <= s.y1; ++y) {
            const double dy = y - s.center.y();
            for (int x = s.x0; x <= s.x1; ++x) {
                const std::size_t idx = trans.index(x, y);
                if (r > buffers.last[idx]) continue;
                const double dx = x - s.center.x();
                double gauss = 0.0;
                const double alpha = alpha_at(s, dx, dy, gauss);
                const double one_minus = 1.0 - alpha;
                const double t_i = trans[idx] / one_minus;
                const Rgb& gr = d_rgb[idx];
                const double gd = d_depth[idx], gm = d_mask[idx];
                const double d_alpha = gr.dot(t_i * s.color - s_rgb[idx] / one_minus) +
                                       gd * (t_i * f_depth - s_depth[idx] / one_minus) +
                                       gm * (t_i * f_mask - s_mask[idx] / one_minus);
                const double w = t_i * alpha;
                if (s.foreground) {
                    g.color += w * gr;
                    g.depth += w * gd;
                    ++g.pixels;
                    if (s.opacity * gauss < kMaxAlpha) {
                        g.opacity += d_alpha * gauss;
                        const double d_gauss = d_alpha * s.opacity;
                        g.center.x() += d_gauss * gauss * (s.conic_a * dx + s.conic_b * dy);
                        g.center.y() += d_gauss * gauss * (s.conic_b * dx + s.conic_c * dy);
                        g.conic_a += d_gauss * (-0.5 * gauss * dx * dx);
                        g.conic_b += d_gauss * (-gauss * dx * dy);
                        g.conic_c += d_gauss * (-0.5 * gauss * dy * dy);
                    }
                }
                s_rgb[idx] += w * s.color;
                s_depth[idx] += w * f_depth;
                s_mask[idx] += w * f_mask;
                trans[idx] = t_i;
            }
        }
    }
    return grads;
}

namespace {

// d R / d q for q = (w, x, y, z) unit.
std::array<Eigen::Matrix3d, 4> rotation_derivatives(const Eigen::Quaterniond& q) {
    const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
    std::array<Eigen::Matrix3d, 4> d;
    d[0] << 0, -z, y, z, 0, -x, -y, x, 0;
    d[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    d[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    d[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    for (auto& m : d) m *= 2.0;
    return d;
}

} // namespace

void accumulate_gaussian_grads(std::span<const RasterSplat> splats, std::span<const SplatGrad> splat_grads,
                               std::span<const Gaussian3D> foreground, const Camera& camera,
                               std::span<GaussianGrad> grads) {
    const Eigen::Matrix3d w = camera.extrinsics.rotation.transpose();
    const auto& k = camera.intrinsics;
    for (std::size_t i = 0; i < splats.size(); ++i) {
        const RasterSplat& s = splats[i];
        const SplatGrad& sg = splat_grads[i];
        if (!s.foreground || sg.pixels == 0) continue;
        const Gaussian3D& gauss = foreground[s.source];
        GaussianGrad& out = grads[s.source];

        // Conic -> 2D covariance.
        Eigen::Matrix2d q;
        q << s.conic_a, s.conic_b, s.conic_b, s.conic_c;
        Eigen::Matrix2d g_q;
        g_q << sg.conic_a, 0.5 * sg.conic_b, 0.5 * sg.conic_b, sg.conic_c;
        const Eigen::Matrix2d g_cov2d = -q * g_q * q;

        // 2D covariance -> 3D covariance and projection Jacobian.
        const Eigen::Matrix<double, 2, 3> t = s.jacobian * w;
        const Eigen::Matrix3d g_cov3d = t.transpose() * g_cov2d * t;
        const Eigen::Matrix<double, 2, 3> g_t = 2.0 * g_cov2d * t * s.cov3d;
        const Eigen::Matrix<double, 2, 3> g_j = g_t * w.transpose();

        const double x = s.p_cam.x(), y = s.p_cam.y(), z = s.p_cam.z();
        const double z2 = z * z, z3 = z2 * z;
        Eigen::Vector3d g_pc = s.jacobian.transpose() * sg.center;
        g_pc.x() += g_j(0, 2) * (-k.fx / z2);
        g_pc.y() += g_j(1, 2) * (-k.fy / z2);
        g_pc.z() += g_j(0, 0) * (-k.fx / z2) + g_j(0, 2) * (2.0 * k.fx * x / z3) + g_j(1, 1) * (-k.fy / z2) +
                    g_j(1, 2) * (2.0 * k.fy * y / z3);
        g_pc.z() += sg.depth;
        out.mean += w.transpose() * g_pc;

        // 3D covariance -> scales and rotation (Sigma = M M^T, M = R S).
        const Eigen::Quaterniond qn = gauss.orientation.normalized();
        const Eigen::Matrix3d rot = qn.toRotationMatrix();
        const Eigen::Vector3d scales = gauss.scales();
        const Eigen::Matrix3d m = rot * scales.asDiagonal();
        const Eigen::Matrix3d g_sym = 0.5 * (g_cov3d + g_cov3d.transpose());
        const Eigen::Matrix3d g_m = 2.0 * g_sym * m;
        for (int c = 0; c < 3; ++c) out.log_scales[c] += g_m.col(c).dot(rot.col(c)) * scales[c];
        const Eigen::Matrix3d g_rot = g_m * scales.asDiagonal();
        const auto d_rot = rotation_derivatives(qn);
        Eigen::Vector4d g_qhat;
        for (int c = 0; c < 4; ++c) g_qhat[c] = (g_rot.array() * d_rot[c].array()).sum();
        const Eigen::Vector4d qv(qn.w(), qn.x(), qn.y(), qn.z());
        const double qnorm = gauss.orientation.norm();
        out.quaternion += (g_qhat - qv * qv.dot(g_qhat)) / qnorm;

        const double o = s.opacity;
        out.opacity_logit += sg.opacity * o * (1.0 - o);
        out.color += sg.color;
        out.screen += sg.center.norm() / std::max(1, sg.pixels);
        out.views += 1;
    }
}

} // namespace detail

std::optional<Splat2D> project_gaussian(const Gaussian3D& g, const Camera& camera, std::size_t source,
                                        double near_plane) {
    const auto p = detail::project_ewa(g, camera, near_plane);
    if (!p) return std::nullopt;
    int x0, x1, y0, y1;
    if (!detail::footprint(p->center, p->cov2d, camera.intrinsics.width, camera.intrinsics.height, x0, x1, y0, y1))
        return std::nullopt;
    return Splat2D{p->center, p->cov2d, p->p_cam.z(), source};
}

RenderOutput render(std::span<const Gaussian3D> gaussians, const Camera& camera, const RenderOptions& options) {
    const auto splats = detail::prepare(gaussians, options.backdrop, camera, options.near_plane);
    auto buffers =
        detail::rasterize(splats, camera.intrinsics.width, camera.intrinsics.height, options.background);
    RenderOutput out;
    out.rgb = std::move(buffers.rgb);
    out.depth = std::move(buffers.depth);
    out.mask = std::move(buffers.mask);
    out.surface_depth = DepthImage(out.depth.width(), out.depth.height(), kInvalidDepth);
    for (std::size_t i = 0; i < out.depth.size(); ++i)
        if (out.mask[i] > 1e-3) out.surface_depth[i] = out.depth[i] / out.mask[i];
    return out;
}

namespace {

template <class InQuery>
std::vector<double> weights_impl(std::span<const Gaussian3D> gaussians, const Camera& camera,
                                 const RenderOptions& options, double tolerance, InQuery in_query) {
    if (!(tolerance >= 0.0)) throw ConfigError("accumulate_weights: occlusion tolerance must be >= 0");
    const int width = camera.intrinsics.width, height = camera.intrinsics.height;
    const auto splats = detail::prepare(gaussians, options.backdrop, camera, options.near_plane);
    std::vector<double> numer(gaussians.size(), 0.0), denom(gaussians.size(), 0.0);
    ScalarImage trans(width, height, 1.0);
    std::vector<std::uint8_t> done(static_cast<std::size_t>(width) * height, 0);
    // With a tolerance, a splat only occludes once the sweep is `tolerance`
    // beyond its depth, so each pixel keeps the factors not yet applied.
    struct Pending {
        double depth;
        double keep;
    };
    std::vector<std::vector<Pending>> pending(tolerance > 0.0 ? trans.size() : 0);
    std::vector<std::uint32_t> applied(pending.size(), 0);
    for (const auto& s : splats) {
        for (int y = s.y0; y <= s.y1; ++y) {
            const double dy = y - s.center.y();
            for (int x = s.x0; x <= s.x1; ++x) {
                const std::size_t idx = trans.index(x, y);
                if (tolerance > 0.0 && !done[idx]) {
                    auto& queue = pending[idx];
                    auto& next = applied[idx];
                    while (next < queue.size() && queue[next].depth < s.depth - tolerance) trans[idx] *= queue[next++].keep;
                    if (trans[idx] < kMinTransmittance) done[idx] = 1;
                }
                double gauss = 0.0;
                const double alpha = detail::alpha_at(s, x - s.center.x(), dy, gauss);
                if (s.foreground && in_query(s.source, idx)) {
                    denom[s.source] += alpha;
                    if (!done[idx]) numer[s.source] += trans[idx] * alpha;
                }
                if (done[idx]) continue;
                if (tolerance > 0.0) {
                    pending[idx].push_back({s.depth, 1.0 - alpha});
                    continue;
                }
                trans[idx] *= 1.0 - alpha;
                if (trans[idx] < kMinTransmittance) done[idx] = 1;
            }
        }
    }
    std::vector<double> w(gaussians.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        if (denom[i] > 0.0) w[i] = numer[i] / denom[i];
    return w;
}

} // namespace

std::vector<double> accumulate_weights(std::span<const Gaussian3D> gaussians, const Camera& camera,
                                       const Mask& query, const RenderOptions& options, double occlusion_tolerance) {
    if (query.width() != camera.intrinsics.width || query.height() != camera.intrinsics.height)
        throw DataError("accumulate_weights: query mask size differs from the frame");
    return weights_impl(gaussians, camera, options, occlusion_tolerance,
                        [&](std::size_t, std::size_t idx) { return query[idx] != 0; });
}

std::vector<double> accumulate_weights(std::span<const Gaussian3D> gaussians, const Camera& camera,
                                       const LabelImage& labels, std::span<const std::uint16_t> target,
                                       const RenderOptions& options, double occlusion_tolerance) {
    if (labels.width() != camera.intrinsics.width || labels.height() != camera.intrinsics.height)
        throw DataError("accumulate_weights: label image size differs from the frame");
    if (target.size() != gaussians.size()) throw DataError("accumulate_weights: one target label per Gaussian");
    return weights_impl(gaussians, camera, options, occlusion_tolerance, [&](std::size_t i, std::size_t idx) {
        return target[i] != 0 && labels[idx] == target[i];
    });
}

} // namespace pedsplat
