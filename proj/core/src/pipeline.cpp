#include "pedsplat/pipeline.hpp"

#include "pedsplat/error.hpp"
#include "pedsplat/localization.hpp"
#include "pedsplat/superpixel.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pedsplat {

namespace fs = std::filesystem;

namespace {

void warn(std::ostream* log, const std::string& msg) {
    if (log) *log << "warning: " << msg << '\n';
}

std::vector<SuperpixelMap> superpixels(std::span<const CameraView> views, const PipelineConfig& cfg) {
    std::vector<SuperpixelMap> maps;
    for (const auto& v : views) maps.push_back(segment_pedestrians(v.image, v.instances, cfg.superpixels, cfg.slic));
    return maps;
}

double median_of(std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

void require_two_views(std::size_t n) {
    if (n < 2) throw ConfigError("at least two calibrated views per frame are required, got " + std::to_string(n));
}

} // namespace

Dataset load_dataset(const fs::path& root, std::ostream* log) {
    Dataset data;
    data.cameras = io::read_calibration(root / "calibration.json");
    const fs::path images = root / "images";
    if (!fs::is_directory(images)) throw DataError("dataset has no images directory: " + images.string());
    std::vector<std::string> frames;
    for (const auto& e : fs::directory_iterator(images))
        if (e.is_directory()) frames.push_back(e.path().filename().string());
    std::sort(frames.begin(), frames.end());
    for (const auto& frame : frames) {
        std::vector<CameraView> views;
        for (const auto& cam : data.cameras) {
            const fs::path img = images / frame / (cam.name + ".png");
            const fs::path mask = root / "masks" / frame / (cam.name + ".png");
            if (!fs::exists(img)) continue;
            if (!fs::exists(mask)) {
                warn(log, "no mask for " + view_id(frame, cam.name) + ", view skipped");
                continue;
            }
            CameraView v{view_id(frame, cam.name), cam, io::read_rgb_png(img), io::read_labels_png(mask), std::nullopt};
            if (v.image.width() != cam.intrinsics.width || v.image.height() != cam.intrinsics.height ||
                v.instances.width() != v.image.width() || v.instances.height() != v.image.height())
                throw DataError("image or mask size disagrees with calibration for " + v.id);
            const fs::path depth = root / "depth" / frame / (cam.name + ".f32");
            if (fs::exists(depth)) v.depth = io::read_depth(depth);
            views.push_back(std::move(v));
        }
        data.frames.emplace(frame, std::move(views));
    }
    if (fs::exists(root / "gt.csv")) data.ground_truth = io::read_ground_truth_csv(root / "gt.csv");
    return data;
}

void write_masks(const fs::path& dir, std::span<const CameraView> views) {
    for (const auto& v : views) io::write_labels_png(dir / (v.id + ".png"), v.instances);
}

void write_dataset(const fs::path& root, const Dataset& data) {
    io::write_calibration(root / "calibration.json", data.cameras);
    for (const auto& [frame, views] : data.frames) {
        for (const auto& v : views) {
            io::write_rgb_png(root / "images" / (v.id + ".png"), v.image);
            if (v.depth) io::write_depth(root / "depth" / (v.id + ".f32"), *v.depth);
        }
        write_masks(root / "masks", views);
    }
    if (data.ground_truth) io::write_ground_truth_csv(root / "gt.csv", *data.ground_truth);
}

void write_pseudo_depth(const fs::path& dir, std::span<const PseudoDepthMap> maps) {
    for (const auto& m : maps) {
        io::write_depth(dir / (m.view_id + ".f32"), m.depth);
        io::write_mask_png(dir / (m.view_id + "_valid.png"), m.valid);
    }
}

std::vector<PseudoDepthMap> read_pseudo_depth(const fs::path& dir, std::span<const CameraView> views) {
    std::vector<PseudoDepthMap> out;
    for (const auto& v : views) {
        PseudoDepthMap m{v.id, io::read_depth(dir / (v.id + ".f32")), io::read_mask_png(dir / (v.id + "_valid.png"))};
        if (m.valid.width() != m.depth.width() || m.valid.height() != m.depth.height())
            throw DataError("pseudo-depth validity size mismatch for " + v.id);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<Gaussian3D> initialize_frame(std::span<const CameraView> views, const PipelineConfig& cfg,
                                         DepthPredictor* predictor) {
    require_two_views(views.size());
    const auto maps = superpixels(views, cfg);
    std::vector<Gaussian3D> gs;
    if (!predictor) {
        gs = init_from_superpixels(views, maps, cfg.ray_sampling);
    } else {
        std::vector<std::vector<double>> depths(views.size());
        for (std::size_t v = 0; v < views.size(); ++v) {
            const DepthImage d = predictor->predict(views[v]);
            std::vector<std::vector<double>> per_segment(maps[v].segments.size());
            for (std::size_t i = 0; i < d.size(); ++i) {
                const int s = maps[v].labels[i];
                if (s >= 0 && std::isfinite(d[i]) && d[i] > 0.0) per_segment[s].push_back(d[i]);
            }
            depths[v].assign(per_segment.size(), kInvalidDepth);
            for (std::size_t s = 0; s < per_segment.size(); ++s)
                if (!per_segment[s].empty()) depths[v][s] = median_of(per_segment[s]);
        }
        gs = init_from_depth(views, maps, depths, cfg.depth_init.samples, cfg.depth_init.half_width,
                             cfg.depth_init.initial_opacity);
    }
    return cull_background(gs, views);
}

OptimResult optimize_frame(std::vector<Gaussian3D> gaussians, std::span<const CameraView> views,
                           const PipelineConfig& cfg, std::optional<fs::path> log_path) {
    require_two_views(views.size());
    const auto maps = superpixels(views, cfg);
    std::vector<RgbImage> targets;
    for (std::size_t v = 0; v < views.size(); ++v) targets.push_back(mean_color_image(views[v].image, maps[v]));
    const auto training = make_training_views(views, targets);

    std::vector<Gaussian3D> backdrop;
    if (cfg.ground.backdrop)
        for (const auto& v : views) {
            const auto ground = ground_depth_map(v.camera, cfg.ground.range, cfg.ground.step);
            const auto g = ground_gaussians(v.camera, ground, v.image, v.foreground(), cfg.ground.gaussian_stride,
                                            cfg.ground.gaussian_band);
            backdrop.insert(backdrop.end(), g.begin(), g.end());
        }
    OptimConfig oc = cfg.optim;
    oc.log_path = std::move(log_path);
    LossOptions options;
    options.backdrop = backdrop;
    return optimize(std::move(gaussians), training, cfg.loss, oc, options);
}

std::vector<CameraView> compensate_frame(std::span<const CameraView> views, std::span<const DepthImage> depths,
                                         SegmentationOracle& oracle, const CompensationThresholds& th,
                                         std::vector<CompensationResult>* results) {
    if (depths.size() != views.size()) throw DataError("compensation: one depth image per view required");
    std::vector<CameraView> out(views.begin(), views.end());
    for (std::size_t r = 0; r < views.size(); ++r) {
        std::vector<CameraView> sources;
        std::vector<DepthImage> source_depths;
        for (std::size_t s = 0; s < views.size(); ++s)
            if (s != r) {
                sources.push_back(views[s]);
                source_depths.push_back(depths[s]);
            }
        auto res = compensate(views[r], sources, source_depths, oracle, th);
        out[r].instances = res.instances;
        if (results) results->push_back(std::move(res));
    }
    return out;
}

TrainingReport run_training_loop(const Dataset& data, const PipelineConfig& cfg, DepthPredictor& predictor,
                                 SegmentationOracle* oracle, const std::optional<fs::path>& out, std::ostream* log) {
    cfg.validate();
    TrainingReport report;
    report.final_views = data.frames;
    std::ofstream stats_csv;
    if (out) {
        io::ensure_parent(*out / "training.csv");
        stats_csv.open(*out / "training.csv");
        stats_csv << "loop,frame,gaussians,initial_loss,final_loss,valid_pixels,masks_added,oracle_failures,failed\n";
    }
    for (int loop = 1; loop <= cfg.loops; ++loop) {
        std::size_t valid_total = 0;
        auto& masks = report.masks_per_loop.emplace_back();
        for (auto& [frame, views] : report.final_views) {
            for (const auto& v : views) masks[frame].push_back(v.instances);
            LoopFrameStats st;
            st.loop = loop;
            st.frame = frame;
            const fs::path loop_dir = out ? *out / ("loop" + std::to_string(loop)) : fs::path();
            try {
                if (views.size() < 2) throw DataError("frame has " + std::to_string(views.size()) + " usable view(s)");
                auto init = initialize_frame(views, cfg, loop == 1 ? nullptr : &predictor);
                auto res = optimize_frame(std::move(init), views, cfg,
                                          out ? std::optional(loop_dir / "optim" / (frame + ".csv")) : std::nullopt);
                st.gaussians = res.gaussians.size();
                st.initial_loss = res.initial.total;
                st.final_loss = res.final.total;
                const auto pseudo = generate_pseudo_depth(res.gaussians, views, cfg.filter);
                for (const auto& m : pseudo) st.valid_pixels += m.valid_count();
                predictor.update(pseudo);
                if (out) {
                    io::write_gaussians(loop_dir / "gaussians" / (frame + ".psgs"), res.gaussians);
                    write_pseudo_depth(loop_dir / "pseudo", pseudo);
                }
                if (oracle && loop < cfg.loops) {
                    std::vector<DepthImage> depths;
                    for (const auto& v : views) depths.push_back(predictor.predict(v));
                    std::vector<CompensationResult> results;
                    views = compensate_frame(views, depths, *oracle, cfg.compensation, &results);
                    for (const auto& r : results) {
                        st.masks_added += static_cast<int>(r.added.size());
                        st.oracle_failures += r.oracle_failures;
                    }
                    if (out) write_masks(loop_dir / "masks", views);
                }
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                st.failed = true;
                warn(log, "loop " + std::to_string(loop) + " frame " + frame + " failed: " + e.what());
            }
            valid_total += st.valid_pixels;
            if (log)
                *log << "loop " << loop << " frame " << frame << ": " << st.gaussians << " gaussians, loss "
                     << st.initial_loss << " -> " << st.final_loss << ", " << st.valid_pixels << " valid px, "
                     << st.masks_added << " masks added\n";
            if (stats_csv)
                stats_csv << st.loop << ',' << st.frame << ',' << st.gaussians << ',' << st.initial_loss << ','
                          << st.final_loss << ',' << st.valid_pixels << ',' << st.masks_added << ','
                          << st.oracle_failures << ',' << st.failed << '\n';
            report.stats.push_back(st);
        }
        report.valid_per_loop.push_back(valid_total);
    }
    return report;
}

InferenceResult run_inference(std::span<const CameraView> views, DepthPredictor& predictor, const PipelineConfig& cfg,
                              const std::vector<Eigen::Vector2d>* ground_truth, std::ostream* log) {
    cfg.validate();
    std::vector<CameraView> usable;
    for (const auto& v : views) {
        if (v.instances.empty()) {
            warn(log, "no masks for " + v.id + ", view skipped");
            continue;
        }
        usable.push_back(v);
    }
    require_two_views(usable.size());

    std::vector<Eigen::Vector3d> points;
    std::vector<Rgb> colors;
    std::vector<PointSource> sources;
    std::vector<Camera> cameras;
    for (std::size_t v = 0; v < usable.size(); ++v) {
        const auto& view = usable[v];
        cameras.push_back(view.camera);
        const DepthImage depth = predictor.predict(view);
        for (int y = 0; y < depth.height(); y += cfg.pixel_stride)
            for (int x = 0; x < depth.width(); x += cfg.pixel_stride) {
                const double d = depth(x, y);
                if (view.instances(x, y) == 0 || !std::isfinite(d) || d <= 0.0) continue;
                const Eigen::Vector2d px(x, y);
                points.push_back(unproject(px, d, view.camera));
                colors.push_back(view.image(x, y));
                sources.push_back({static_cast<int>(v), px, d});
            }
    }

    InferenceResult result;
    result.points = points.size();
    result.scene = match_labels(from_point_cloud(points, colors, sources, cameras), usable, cfg.matching);
    result.detections = localize(result.scene.gaussians, cfg.localization);
    if (ground_truth) result.evaluation = evaluate(result.detections, *ground_truth, cfg.gate);
    return result;
}

RgbImage plot_bev(const DetectionSet& detections, std::span<const Eigen::Vector2d> ground_truth,
                  const GroundRange& range, double gate, int size) {
    range.validate();
    if (size < 16) throw ConfigError("BEV plot size must be >= 16");
    const double sx = (size - 1) / (range.x_max - range.x_min);
    const double sy = (size - 1) / (range.y_max - range.y_min);
    const double s = std::min(sx, sy);
    // x to the right, y up.
    auto to_px = [&](double x, double y) {
        return cv::Point(static_cast<int>(std::lround((x - range.x_min) * s)),
                         static_cast<int>(std::lround((range.y_max - y) * s)));
    };
    cv::Mat img(size, size, CV_8UC3, cv::Scalar(255, 255, 255));
    for (double g = std::ceil(range.x_min); g <= range.x_max; g += 1.0)
        cv::line(img, to_px(g, range.y_min), to_px(g, range.y_max), cv::Scalar(225, 225, 225));
    for (double g = std::ceil(range.y_min); g <= range.y_max; g += 1.0)
        cv::line(img, to_px(range.x_min, g), to_px(range.x_max, g), cv::Scalar(225, 225, 225));
    const int gate_px = std::max(1, static_cast<int>(std::lround(gate * s)));
    for (const auto& p : ground_truth) cv::circle(img, to_px(p.x(), p.y()), gate_px, cv::Scalar(40, 160, 40), 2);
    for (const auto& d : detections)
        cv::drawMarker(img, to_px(d.x, d.y), cv::Scalar(30, 30, 220), cv::MARKER_CROSS, 12, 2);

    RgbImage out(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const auto& bgr = img.at<cv::Vec3b>(y, x);
            out(x, y) = Rgb(bgr[2], bgr[1], bgr[0]) / 255.0;
        }
    return out;
}

} // namespace pedsplat
