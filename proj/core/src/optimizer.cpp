#include "pedsplat/optimizer.hpp"

#include "pedsplat/error.hpp"
#include "pedsplat/io.hpp"
#include "pedsplat/view.hpp"

#include "parallel.hpp"
#include "raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

namespace pedsplat {

namespace {

constexpr double kLogScaleLow = -13.8 + 1e-3;
constexpr double kLogScaleHigh = 2.3 - 1e-3;
constexpr int kParams = 14;
using ParamVec = Eigen::Matrix<double, kParams, 1>;

struct ViewResult {
    LossBreakdown loss;
    std::vector<detail::GaussianGrad> grads;
};

double opacity_term(double o) { return std::exp(-(o - 0.5) * (o - 0.5) / 0.04); }

// Loss of one view and, when `grads` is requested, its gradient.
ViewResult evaluate_view(std::span<const Gaussian3D> gaussians, const TrainingView& view, const LossWeights& w,
                         const LossOptions& options, bool with_grad) {
    const int width = view.camera.intrinsics.width, height = view.camera.intrinsics.height;
    if (view.target.width() != width || view.target.height() != height || view.mask.width() != width ||
        view.mask.height() != height)
        throw DataError("training view: target or mask size differs from the camera frame");
    const bool has_instances = view.instances.size() > 0;
    if (has_instances && (view.instances.width() != width || view.instances.height() != height))
        throw DataError("training view: instance labels size differs from the camera frame");
    if (w.depth > 0.0 && !has_instances)
        throw ConfigError("depth loss needs per-instance masks but a view has none");

    const auto splats = detail::prepare(gaussians, options.backdrop, view.camera, kDefaultNearPlane);
    const auto buf = detail::rasterize(splats, width, height, options.background);

    ViewResult out;
    RgbImage d_rgb(width, height, Rgb::Zero());
    ScalarImage d_depth(width, height, 0.0), d_mask(width, height, 0.0);
    for (std::size_t i = 0; i < buf.rgb.size(); ++i) {
        const double target_mask = view.mask[i] ? 1.0 : 0.0;
        if (view.mask[i]) {
            const Rgb diff = buf.rgb[i] - view.target[i];
            out.loss.sp += diff.cwiseAbs().sum();
            d_rgb[i] = w.sp * diff.unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
        }
        const double e = buf.mask[i] - target_mask;
        out.loss.mask += e * e;
        d_mask[i] = w.mask * 2.0 * e;
    }
    if (has_instances) {
        std::map<std::uint16_t, std::pair<double, std::size_t>> sums;
        for (std::size_t i = 0; i < buf.depth.size(); ++i) {
            const auto label = view.instances[i];
            if (label == 0) continue;
            auto& s = sums[label];
            s.first += buf.depth[i];
            ++s.second;
        }
        for (std::size_t i = 0; i < buf.depth.size(); ++i) {
            const auto label = view.instances[i];
            if (label == 0) continue;
            const auto& s = sums[label];
            const double r = buf.depth[i] - s.first / static_cast<double>(s.second);
            out.loss.depth += r * r;
            d_depth[i] = w.depth * 2.0 * r;
        }
    }
    if (!with_grad) return out;

    const auto splat_grads = detail::backward(splats, buf, d_rgb, d_depth, d_mask, options.background);
    out.grads.assign(gaussians.size(), {});
    detail::accumulate_gaussian_grads(splats, splat_grads, gaussians, view.camera, out.grads);
    return out;
}

LossBreakdown evaluate(std::span<const Gaussian3D> gaussians, std::span<const TrainingView> views,
                       const LossWeights& w, const LossOptions& options, std::vector<detail::GaussianGrad>* grads) {
    std::vector<ViewResult> per_view(views.size());
    detail::parallel_for(views.size(), [&](std::size_t v) {
        per_view[v] = evaluate_view(gaussians, views[v], w, options, grads != nullptr);
    });
    LossBreakdown loss;
    if (grads) grads->assign(gaussians.size(), {});
    for (const auto& r : per_view) {
        loss.sp += r.loss.sp;
        loss.mask += r.loss.mask;
        loss.depth += r.loss.depth;
        if (grads)
            for (std::size_t i = 0; i < gaussians.size(); ++i) (*grads)[i] += r.grads[i];
    }
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const double o = gaussians[i].opacity();
        const double e = opacity_term(o);
        loss.opacity += e;
        if (grads) {
            const double d_o = w.opacity * e * (-2.0 * (o - 0.5) / 0.04);
            (*grads)[i].opacity_logit += d_o * o * (1.0 - o);
        }
    }
    loss.total = w.sp * loss.sp + w.mask * loss.mask + w.depth * loss.depth + w.opacity * loss.opacity;
    return loss;
}

void check_finite(const LossBreakdown& l, int iteration) {
    const std::pair<const char*, double> terms[] = {
        {"photometric", l.sp}, {"mask", l.mask}, {"depth", l.depth}, {"opacity", l.opacity}};
    for (const auto& [name, value] : terms)
        if (!std::isfinite(value))
            throw NumericalError("optimizer: " + std::string(name) + " loss is not finite at iteration " +
                                 std::to_string(iteration));
}

ParamVec pack(const Gaussian3D& g) {
    ParamVec p;
    p << g.mean, g.log_scales, g.orientation.w(), g.orientation.x(), g.orientation.y(), g.orientation.z(),
        g.opacity_logit, g.color;
    return p;
}

void unpack(const ParamVec& p, Gaussian3D& g) {
    g.mean = p.segment<3>(0);
    g.log_scales = p.segment<3>(3).cwiseMax(kLogScaleLow).cwiseMin(kLogScaleHigh);
    g.orientation = Eigen::Quaterniond(p[6], p[7], p[8], p[9]);
    if (!(g.orientation.norm() > 1e-12)) g.orientation = Eigen::Quaterniond::Identity();
    g.orientation.normalize();
    g.opacity_logit = p[10];
    g.color = p.segment<3>(11);
}

ParamVec pack(const detail::GaussianGrad& g) {
    ParamVec p;
    p << g.mean, g.log_scales, g.quaternion, g.opacity_logit, g.color;
    return p;
}

struct AdamState {
    ParamVec m = ParamVec::Zero();
    ParamVec v = ParamVec::Zero();
    int steps = 0;
    double screen_sum = 0.0;
    int screen_count = 0;
};

void write_log_row(std::ofstream& log, int iteration, const LossBreakdown& l, std::size_t count) {
    log << iteration << ',' << l.total << ',' << l.sp << ',' << l.mask << ',' << l.depth << ',' << l.opacity << ','
        << count << '\n';
}

} // namespace

void LossWeights::validate() const {
    if (sp < 0 || mask < 0 || depth < 0 || opacity < 0) throw ConfigError("loss weights must be non-negative");
    if (sp == 0 && mask == 0 && depth == 0 && opacity == 0) throw ConfigError("loss weights must not all be zero");
}

void OptimConfig::validate() const {
    if (iterations < 1) throw ConfigError("optimizer: iterations must be >= 1");
    if (!(prune_opacity > 0) || !(grow_gradient > 0)) throw ConfigError("optimizer: thresholds must be positive");
    if (densify_interval < 1) throw ConfigError("optimizer: densify_interval must be >= 1");
    if (!(max_split_fraction >= 0 && max_split_fraction <= 1))
        throw ConfigError("optimizer: max_split_fraction must lie in [0, 1]");
    const double s[] = {steps.mean, steps.log_scales, steps.quaternion, steps.opacity_logit, steps.color};
    for (double v : s)
        if (!(v >= 0)) throw ConfigError("optimizer: step sizes must be non-negative");
}

std::vector<TrainingView> make_training_views(std::span<const CameraView> views, std::span<const RgbImage> sp_images) {
    if (views.size() != sp_images.size()) throw DataError("one superpixel image per view required");
    std::vector<TrainingView> out;
    out.reserve(views.size());
    for (std::size_t i = 0; i < views.size(); ++i)
        out.push_back({views[i].camera, sp_images[i], views[i].foreground(), views[i].instances});
    return out;
}

LossBreakdown compute_losses(std::span<const Gaussian3D> gaussians, std::span<const TrainingView> views,
                             const LossWeights& weights, const LossOptions& options) {
    weights.validate();
    return evaluate(gaussians, views, weights, options, nullptr);
}

LossBreakdown loss_and_gradient(std::span<const Gaussian3D> gaussians, std::span<const TrainingView> views,
                                const LossWeights& weights, std::vector<GaussianGradient>& gradient,
                                const LossOptions& options) {
    weights.validate();
    std::vector<detail::GaussianGrad> grads;
    const auto loss = evaluate(gaussians, views, weights, options, &grads);
    gradient.resize(gaussians.size());
    for (std::size_t i = 0; i < grads.size(); ++i)
        gradient[i] = {grads[i].mean, grads[i].log_scales, grads[i].quaternion, grads[i].opacity_logit,
                       grads[i].color};
    return loss;
}

OptimResult optimize(std::vector<Gaussian3D> gaussians, std::span<const TrainingView> views,
                     const LossWeights& weights, const OptimConfig& cfg, const LossOptions& options) {
    cfg.validate();
    weights.validate();
    if (views.size() < 2) throw ConfigError("optimizer: at least two views are required");

    std::ofstream log;
    if (cfg.log_path) {
        io::ensure_parent(*cfg.log_path);
        log.open(*cfg.log_path);
        if (!log) throw DataError("optimizer: cannot open log file " + cfg.log_path->string());
        log << "iteration,total,sp,mask,depth,opacity,gaussian_count\n";
        log.precision(10);
    }

    const std::vector<Gaussian3D> input = gaussians;
    std::vector<AdamState> state(gaussians.size());
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ParamVec lr;
    lr << Eigen::Vector3d::Constant(cfg.steps.mean), Eigen::Vector3d::Constant(cfg.steps.log_scales),
        Eigen::Vector4d::Constant(cfg.steps.quaternion), cfg.steps.opacity_logit,
        Eigen::Vector3d::Constant(cfg.steps.color);

    OptimResult result;
    std::vector<detail::GaussianGrad> grads;
    for (int it = 0; it < cfg.iterations; ++it) {
        const auto loss = evaluate(gaussians, views, weights, options, &grads);
        check_finite(loss, it);
        if (it == 0) result.initial = loss;
        result.history.push_back(loss);
        if (log) write_log_row(log, it, loss, gaussians.size());

        for (std::size_t i = 0; i < gaussians.size(); ++i) {
            AdamState& s = state[i];
            const ParamVec g = pack(grads[i]);
            ++s.steps;
            s.m = cfg.beta1 * s.m + (1.0 - cfg.beta1) * g;
            s.v = cfg.beta2 * s.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
            const double c1 = 1.0 - std::pow(cfg.beta1, s.steps);
            const double c2 = 1.0 - std::pow(cfg.beta2, s.steps);
            const ParamVec m_hat = s.m / c1;
            const ParamVec v_hat = s.v / c2;
            const ParamVec step = lr.cwiseProduct(m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + cfg.epsilon).matrix()));
            unpack(pack(gaussians[i]) - step, gaussians[i]);
            if (grads[i].views > 0) {
                s.screen_sum += grads[i].screen;
                s.screen_count += grads[i].views;
            }
        }

        const bool densify_now = (it + 1) % cfg.densify_interval == 0 && it + 1 < cfg.iterations;
        if (!densify_now) continue;

        std::vector<Gaussian3D> next_g;
        std::vector<AdamState> next_s;
        std::vector<std::pair<double, std::size_t>> candidates;
        for (std::size_t i = 0; i < gaussians.size(); ++i) {
            if (gaussians[i].opacity() < cfg.prune_opacity) continue;
            const AdamState& s = state[i];
            const double stat = s.screen_count > 0 ? s.screen_sum / s.screen_count : 0.0;
            if (stat > cfg.grow_gradient) candidates.emplace_back(stat, i);
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
        std::size_t survivors = 0;
        for (const auto& g : gaussians) survivors += g.opacity() >= cfg.prune_opacity;
        std::size_t budget = static_cast<std::size_t>(cfg.max_split_fraction * static_cast<double>(survivors));
        if (cfg.max_gaussians > survivors) budget = std::min(budget, cfg.max_gaussians - survivors);
        else budget = 0;
        if (candidates.size() > budget) candidates.resize(budget);
        std::vector<char> split(gaussians.size(), 0);
        for (const auto& c : candidates) split[c.second] = 1;

        for (std::size_t i = 0; i < gaussians.size(); ++i) {
            const Gaussian3D& g = gaussians[i];
            if (g.opacity() < cfg.prune_opacity) continue;
            if (!split[i]) {
                next_g.push_back(g);
                AdamState s = state[i];
                s.screen_sum = 0.0;
                s.screen_count = 0;
                next_s.push_back(s);
                continue;
            }
            const Eigen::Matrix3d rot = g.orientation.toRotationMatrix();
            const Eigen::Vector3d scales = g.scales();
            for (int child = 0; child < 2; ++child) {
                Gaussian3D c = g;
                const Eigen::Vector3d xi(normal(rng), normal(rng), normal(rng));
                c.mean = g.mean + rot * scales.cwiseProduct(xi);
                c.log_scales = (g.log_scales.array() + std::log(0.6)).max(kLogScaleLow).matrix();
                next_g.push_back(c);
                next_s.push_back({});
            }
        }
        gaussians = std::move(next_g);
        state = std::move(next_s);
    }

    result.final = evaluate(gaussians, views, weights, options, nullptr);
    check_finite(result.final, cfg.iterations);
    if (log) write_log_row(log, cfg.iterations, result.final, gaussians.size());
    if (result.final.total > result.initial.total) {
        result.gaussians = input;
        result.final = result.initial;
    } else {
        result.gaussians = std::move(gaussians);
    }
    return result;
}

std::vector<Gaussian3D> ground_gaussians(const Camera& camera, const DepthImage& ground_depth, const RgbImage& image,
                                         const Mask& foreground, int stride, int band) {
    if (stride < 1 || band < 0) throw ConfigError("ground Gaussians: stride must be >= 1 and band >= 0");
    const Mask near = dilate(foreground, band);
    std::vector<Gaussian3D> out;
    for (int y = 0; y < ground_depth.height(); y += stride) {
        for (int x = 0; x < ground_depth.width(); x += stride) {
            const double d = ground_depth(x, y);
            if (!(d > 0.0) || !near(x, y) || foreground(x, y)) continue;
            Gaussian3D g;
            g.mean = unproject({double(x), double(y)}, d, camera);
            const double s = 0.5 * stride * d / camera.intrinsics.fx;
            g.log_scales = Eigen::Vector3d(std::log(s), std::log(s), std::log(0.1 * s));
            g.opacity_logit = logit(0.99);
            g.color = image(x, y);
            out.push_back(g);
        }
    }
    return out;
}

} // namespace pedsplat
