// Command-line front end: one subcommand per pipeline stage plus the full
// training loop and inference. Exit codes: 0 success, 1 configuration error,
// 2 data error.

#include "pedsplat/config.hpp"
#include "pedsplat/error.hpp"
#include "pedsplat/io.hpp"
#include "pedsplat/pipeline.hpp"
#include "pedsplat/simulator.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

using namespace pedsplat;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string data;
    std::string frame;
};

PipelineConfig settings(const Common& c) {
    PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
    cfg = apply_env_overrides(cfg, process_environment());
    if (!c.data.empty()) cfg.data_dir = c.data;
    cfg.validate();
    return cfg;
}

Dataset dataset(const PipelineConfig& cfg) {
    if (cfg.data_dir.empty()) throw ConfigError("no dataset: pass --data or set paths.data");
    return load_dataset(cfg.data_dir, &std::cerr);
}

// The named frame, or the only one when none is named.
const std::vector<CameraView>& pick_frame(const Dataset& data, const std::string& frame) {
    if (frame.empty()) {
        if (data.frames.size() != 1) throw ConfigError("dataset has several frames; pass --frame");
        return data.frames.begin()->second;
    }
    const auto it = data.frames.find(frame);
    if (it == data.frames.end()) throw DataError("no frame '" + frame + "' in the dataset");
    return it->second;
}

// Baseline predictor seeded with stored labels, optionally behind a drop-in directory.
std::unique_ptr<DepthPredictor> predictor(const PipelineConfig& cfg, const std::string& labels,
                                          std::span<const CameraView> views, bool align) {
    auto base = std::make_unique<BaselinePredictor>(cfg.baseline());
    if (!labels.empty()) base->update(read_pseudo_depth(labels, views));
    if (cfg.depth_dropin.empty()) return base;
    return std::make_unique<DirectoryPredictor>(cfg.depth_dropin, std::move(base), align, cfg.baseline());
}

// Segmentation oracle from simulator truth masks or an external command.
struct OracleHolder {
    GroundTruthBundle truth;
    std::unique_ptr<SegmentationOracle> oracle;
};

std::unique_ptr<OracleHolder> oracle(const PipelineConfig& cfg, const std::string& truth_dir,
                                     std::span<const CameraView> views, const fs::path& work) {
    auto h = std::make_unique<OracleHolder>();
    if (!truth_dir.empty()) {
        for (const auto& v : views) {
            h->truth.view_ids.push_back(v.id);
            h->truth.id_masks.push_back(io::read_labels_png(fs::path(truth_dir) / (v.id + ".png")));
        }
        h->oracle = gt_oracle(h->truth);
    } else if (!cfg.oracle_command.empty()) {
        h->oracle = std::make_unique<FileExchangeOracle>(cfg.oracle_command, work / "oracle");
    } else {
        return nullptr;
    }
    return h;
}

std::vector<CameraView> all_views(const Dataset& data) {
    std::vector<CameraView> out;
    for (const auto& [frame, views] : data.frames) out.insert(out.end(), views.begin(), views.end());
    return out;
}

void replace_masks(Dataset& data, const std::string& dir) {
    if (dir.empty()) return;
    for (auto& [frame, views] : data.frames)
        for (auto& v : views) v.instances = io::read_labels_png(fs::path(dir) / (v.id + ".png"));
}

void print_eval(const std::string& what, const EvalResult& e) {
    std::cout << what << ": MODA " << e.moda << " MODP " << e.modp << " precision " << e.precision << " recall "
              << e.recall << " mean_error " << e.mean_error() << " (tp " << e.tp << ", fp " << e.fp << ", fn " << e.fn
              << ")\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-view pedestrian localization by Gaussian splatting self-training"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool frame) {
        sub->add_option("-c,--config", common.config, "JSON config file");
        sub->add_option("-d,--data", common.data, "dataset directory (overrides paths.data)");
        if (frame) sub->add_option("-f,--frame", common.frame, "frame to process");
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "write a synthetic capsule-pedestrian dataset");
    SceneConfig scene;
    int frames = 1;
    std::string sim_out;
    bool sim_depth = false;
    std::optional<double> sim_focal;
    sim->add_option("-o,--out", sim_out, "output directory")->required();
    sim->add_option("--frames", frames, "number of frames")->check(CLI::PositiveNumber);
    sim->add_option("--seed", scene.seed, "seed of the first frame; frame i uses seed + i");
    sim->add_option("--pedestrians", scene.pedestrians);
    sim->add_option("--cameras", scene.cameras);
    sim->add_option("--size", scene.image_size, "image width and height");
    sim->add_option("--focal", sim_focal, "focal length in pixels (default scales with --size)");
    sim->add_option("--area", scene.area_half_extent, "pedestrians stand in [-a, a]^2");
    sim->add_option("--missed-rate", scene.missed_mask_rate, "probability of deleting a visible mask");
    sim->add_flag("--depth", sim_depth, "also write true depth under truth/depth");

    // init
    auto* init = app.add_subcommand("init", "initialize Gaussians for one frame");
    add_common(init, true);
    std::string init_out, init_labels;
    init->add_option("-o,--out", init_out, "Gaussian table to write")->required();
    init->add_option("--labels", init_labels, "pseudo-depth directory; initialize around predicted depth");

    // optimize
    auto* opt = app.add_subcommand("optimize", "optimize a frame's Gaussians");
    add_common(opt, true);
    std::string opt_in, opt_out, opt_log;
    opt->add_option("-g,--gaussians", opt_in, "input Gaussian table")->required();
    opt->add_option("-o,--out", opt_out, "output Gaussian table")->required();
    opt->add_option("--log", opt_log, "per-iteration loss CSV");

    // pseudo-depth
    auto* pd = app.add_subcommand("pseudo-depth", "render and filter pseudo-depth for a frame");
    add_common(pd, true);
    std::string pd_in, pd_out;
    pd->add_option("-g,--gaussians", pd_in, "optimized Gaussian table")->required();
    pd->add_option("-o,--out", pd_out, "output directory")->required();

    // compensate
    auto* comp = app.add_subcommand("compensate", "recover missed masks of a frame");
    add_common(comp, true);
    std::string comp_out, comp_labels, comp_truth;
    bool comp_align = false;
    comp->add_option("-o,--out", comp_out, "output mask directory")->required();
    comp->add_option("--labels", comp_labels, "pseudo-depth directory feeding the depth predictor");
    comp->add_option("--truth", comp_truth, "simulator truth masks to answer segmentation prompts");
    comp->add_flag("--align-depth", comp_align, "treat drop-in depth as relative and align it to the ground");

    // train-loop
    auto* train = app.add_subcommand("train-loop", "run the iterative self-training loop");
    add_common(train, false);
    std::string train_out, train_truth;
    train->add_option("-o,--out", train_out, "output directory (overrides paths.output)");
    train->add_option("--truth", train_truth, "simulator truth masks to answer segmentation prompts");

    // infer
    auto* inf = app.add_subcommand("infer", "localize pedestrians");
    add_common(inf, true);
    std::string inf_out, inf_labels, inf_masks;
    bool inf_align = false;
    inf->add_option("-o,--out", inf_out, "output directory")->required();
    inf->add_option("--labels", inf_labels, "pseudo-depth directory feeding the depth predictor");
    inf->add_option("--masks", inf_masks, "instance masks replacing the dataset's (e.g. after compensation)");
    inf->add_flag("--align-depth", inf_align, "treat drop-in depth as relative and align it to the ground");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score detections against ground truth");
    std::string ev_det, ev_gt;
    double ev_gate = 0.5;
    ev->add_option("--detections", ev_det, "detections CSV")->required();
    ev->add_option("--gt", ev_gt, "ground truth CSV")->required();
    ev->add_option("--gate", ev_gate, "match distance in meters")->check(CLI::PositiveNumber);

    // plot-bev
    auto* bev = app.add_subcommand("plot-bev", "draw detections and ground truth from above");
    std::string bev_det, bev_gt, bev_frame, bev_out;
    int bev_size = 512;
    double bev_gate = 0.5, bev_extent = 10.0;
    bev->add_option("--detections", bev_det, "detections CSV")->required();
    bev->add_option("--gt", bev_gt, "ground truth CSV");
    bev->add_option("-f,--frame", bev_frame, "frame to draw")->required();
    bev->add_option("-o,--out", bev_out, "PNG to write")->required();
    bev->add_option("--size", bev_size);
    bev->add_option("--gate", bev_gate);
    bev->add_option("--extent", bev_extent, "half-width of the plotted square, meters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            if (!sim_focal) sim_focal = 222.0 * scene.image_size / 256.0;
            scene.focal = *sim_focal;
            Dataset data;
            io::FrameLocations gt;
            std::ofstream missed;
            const fs::path root(sim_out);
            io::ensure_parent(root / "truth" / "missed.csv");
            missed.open(root / "truth" / "missed.csv");
            missed << "view,pedestrian\n";
            for (int f = 0; f < frames; ++f) {
                SceneConfig sc = scene;
                sc.seed = scene.seed + static_cast<std::uint64_t>(f);
                sc.frame = std::to_string(f);
                const auto s = generate_scene(sc);
                data.cameras = s.truth.cameras;
                data.frames[sc.frame] = s.views;
                gt[sc.frame] = s.truth.locations();
                for (std::size_t v = 0; v < s.views.size(); ++v) {
                    io::write_labels_png(root / "truth" / (s.views[v].id + ".png"), s.truth.id_masks[v]);
                    if (sim_depth) io::write_depth(root / "truth" / "depth" / (s.views[v].id + ".f32"), s.truth.depth[v]);
                }
                for (const auto& [v, p] : s.truth.missed) missed << s.views[v].id << ',' << p << '\n';
            }
            data.ground_truth = gt;
            write_dataset(root, data);
            std::cout << "wrote " << frames << " frame(s) of " << scene.cameras << " views to " << root.string() << "\n";
        } else if (init->parsed()) {
            const auto cfg = settings(common);
            const auto data = dataset(cfg);
            const auto& views = pick_frame(data, common.frame);
            auto pred = init_labels.empty() ? nullptr : predictor(cfg, init_labels, views, false);
            const auto gs = initialize_frame(views, cfg, pred.get());
            io::write_gaussians(init_out, gs);
            std::cout << gs.size() << " Gaussians\n";
        } else if (opt->parsed()) {
            const auto cfg = settings(common);
            const auto data = dataset(cfg);
            const auto& views = pick_frame(data, common.frame);
            const auto res = optimize_frame(io::read_gaussians(opt_in), views, cfg,
                                            opt_log.empty() ? std::nullopt : std::optional<fs::path>(opt_log));
            io::write_gaussians(opt_out, res.gaussians);
            std::cout << res.gaussians.size() << " Gaussians, loss " << res.initial.total << " -> " << res.final.total
                      << "\n";
        } else if (pd->parsed()) {
            const auto cfg = settings(common);
            const auto data = dataset(cfg);
            const auto& views = pick_frame(data, common.frame);
            const auto maps = generate_pseudo_depth(io::read_gaussians(pd_in), views, cfg.filter);
            write_pseudo_depth(pd_out, maps);
            std::size_t valid = 0;
            for (const auto& m : maps) valid += m.valid_count();
            std::cout << valid << " valid pseudo-depth pixels\n";
        } else if (comp->parsed()) {
            const auto cfg = settings(common);
            const auto data = dataset(cfg);
            const auto& views = pick_frame(data, common.frame);
            const auto holder = oracle(cfg, comp_truth, views, comp_out);
            if (!holder) throw ConfigError("compensation needs --truth or paths.oracle_command");
            auto pred = predictor(cfg, comp_labels, views, comp_align);
            std::vector<DepthImage> depths;
            for (const auto& v : views) depths.push_back(pred->predict(v));
            std::vector<CompensationResult> results;
            const auto updated = compensate_frame(views, depths, *holder->oracle, cfg.compensation, &results);
            write_masks(comp_out, updated);
            int added = 0, failures = 0;
            for (const auto& r : results) {
                added += static_cast<int>(r.added.size());
                failures += r.oracle_failures;
            }
            std::cout << added << " masks added, " << failures << " oracle failures\n";
        } else if (train->parsed()) {
            auto cfg = settings(common);
            if (!train_out.empty()) cfg.output_dir = train_out;
            const auto data = dataset(cfg);
            const auto views = all_views(data);
            const auto holder = oracle(cfg, train_truth, views, cfg.output_dir);
            if (!holder) std::cerr << "warning: no segmentation oracle; masks will not be compensated\n";
            auto base = std::make_unique<BaselinePredictor>(cfg.baseline());
            const BaselinePredictor& labels = *base;
            std::unique_ptr<DepthPredictor> pred = std::move(base);
            if (!cfg.depth_dropin.empty())
                pred = std::make_unique<DirectoryPredictor>(cfg.depth_dropin, std::move(pred), false, cfg.baseline());
            const auto report = run_training_loop(data, cfg, *pred, holder ? holder->oracle.get() : nullptr,
                                                  cfg.output_dir, &std::cerr);
            // Predictor state and the masks it was trained with, for infer --labels/--masks.
            std::vector<PseudoDepthMap> state;
            for (const auto& [id, depth] : labels.labels()) {
                Mask valid(depth.width(), depth.height(), 0);
                for (std::size_t i = 0; i < depth.size(); ++i) valid[i] = std::isfinite(depth[i]);
                state.push_back({id, depth, valid});
            }
            write_pseudo_depth(cfg.output_dir / "predictor", state);
            for (const auto& [frame, fviews] : report.final_views) write_masks(cfg.output_dir / "masks", fviews);
            fs::create_directories(cfg.output_dir);
            std::ofstream(cfg.output_dir / "config.json") << dump_config(cfg);
            for (std::size_t l = 0; l < report.valid_per_loop.size(); ++l)
                std::cout << "loop " << l + 1 << ": " << report.valid_per_loop[l] << " valid pseudo-depth pixels\n";
        } else if (inf->parsed()) {
            const auto cfg = settings(common);
            auto data = dataset(cfg);
            replace_masks(data, inf_masks);
            const fs::path out(inf_out);
            io::FrameDetections detections;
            std::vector<EvalResult> evals;
            for (const auto& [frame, views] : data.frames) {
                if (!common.frame.empty() && frame != common.frame) continue;
                auto pred = predictor(cfg, inf_labels, views, inf_align);
                const std::vector<Eigen::Vector2d>* gt = nullptr;
                if (data.ground_truth && data.ground_truth->contains(frame)) gt = &data.ground_truth->at(frame);
                const auto res = run_inference(views, *pred, cfg, gt, &std::cerr);
                detections[frame] = res.detections;
                std::cout << "frame " << frame << ": " << res.detections.size() << " detections\n";
                if (res.evaluation) {
                    print_eval("frame " + frame, *res.evaluation);
                    evals.push_back(*res.evaluation);
                }
                const std::vector<Eigen::Vector2d> none;
                io::write_rgb_png(out / "bev" / (frame + ".png"),
                                  plot_bev(res.detections, gt ? *gt : none, cfg.ground.range, cfg.gate));
            }
            if (!common.frame.empty() && detections.empty()) throw DataError("no frame '" + common.frame + "'");
            io::write_detections_csv(out / "detections.csv", detections);
            if (evals.size() > 1) print_eval("all frames", aggregate(evals, cfg.gate));
        } else if (ev->parsed()) {
            const auto dets = io::read_detections_csv(ev_det);
            const auto gt = io::read_ground_truth_csv(ev_gt);
            std::vector<EvalResult> evals;
            for (const auto& [frame, points] : gt) {
                const auto it = dets.find(frame);
                evals.push_back(evaluate(it == dets.end() ? DetectionSet{} : it->second, points, ev_gate));
                print_eval("frame " + frame, evals.back());
            }
            for (const auto& [frame, d] : dets)
                if (!gt.contains(frame)) std::cerr << "warning: detections for frame " << frame << " have no ground truth\n";
            print_eval("all frames", aggregate(evals, ev_gate));
        } else if (bev->parsed()) {
            const auto dets = io::read_detections_csv(bev_det);
            std::vector<Eigen::Vector2d> gt;
            if (!bev_gt.empty()) {
                const auto all = io::read_ground_truth_csv(bev_gt);
                if (all.contains(bev_frame)) gt = all.at(bev_frame);
            }
            const auto it = dets.find(bev_frame);
            const GroundRange range{-bev_extent, bev_extent, -bev_extent, bev_extent};
            io::write_rgb_png(bev_out, plot_bev(it == dets.end() ? DetectionSet{} : it->second, gt, range, bev_gate, bev_size));
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
