#pragma once

#include "pedsplat/compensation.hpp"
#include "pedsplat/config.hpp"
#include "pedsplat/depthfilter.hpp"
#include "pedsplat/depthmodel.hpp"
#include "pedsplat/io.hpp"
#include "pedsplat/matching.hpp"
#include "pedsplat/metrics.hpp"
#include "pedsplat/optimizer.hpp"
#include "pedsplat/view.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace pedsplat {

/// On-disk layout:
///   calibration.json
///   images/<frame>/<camera>.png   8-bit RGB
///   masks/<frame>/<camera>.png    16-bit instance labels
///   depth/<frame>/<camera>.f32    optional depth frames (drop-in predictor input)
///   gt.csv                        optional ground truth, frame,x,y
struct Dataset {
    std::vector<Camera> cameras;
    std::map<std::string, std::vector<CameraView>> frames;
    std::optional<io::FrameLocations> ground_truth;
};

/// Views whose mask file is missing are skipped with a warning on `log`.
Dataset load_dataset(const std::filesystem::path& root, std::ostream* log = nullptr);
void write_dataset(const std::filesystem::path& root, const Dataset& data);
void write_masks(const std::filesystem::path& dir, std::span<const CameraView> views);

/// Pseudo-depth export: <dir>/<frame>/<camera>.f32 plus <camera>_valid.png.
void write_pseudo_depth(const std::filesystem::path& dir, std::span<const PseudoDepthMap> maps);
std::vector<PseudoDepthMap> read_pseudo_depth(const std::filesystem::path& dir, std::span<const CameraView> views);

// Stages of one training loop on one frame.

/// With no predictor, samples along superpixel rays; otherwise around the
/// predictor's per-superpixel median depth. Background-projecting Gaussians are culled.
std::vector<Gaussian3D> initialize_frame(std::span<const CameraView> views, const PipelineConfig& cfg,
                                         DepthPredictor* predictor);
OptimResult optimize_frame(std::vector<Gaussian3D> gaussians, std::span<const CameraView> views,
                           const PipelineConfig& cfg, std::optional<std::filesystem::path> log_path = {});
/// Compensates every view against all others; returns the updated views.
std::vector<CameraView> compensate_frame(std::span<const CameraView> views, std::span<const DepthImage> depths,
                                         SegmentationOracle& oracle, const CompensationThresholds& th,
                                         std::vector<CompensationResult>* results = nullptr);

struct LoopFrameStats {
    int loop = 0;
    std::string frame;
    std::size_t gaussians = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t valid_pixels = 0;
    int masks_added = 0;
    int oracle_failures = 0;
    bool failed = false;
};

struct TrainingReport {
    std::vector<LoopFrameStats> stats;
    std::vector<std::size_t> valid_per_loop; // summed over frames
    /// Instance masks in effect during each loop, [loop - 1][frame].
    std::vector<std::map<std::string, std::vector<LabelImage>>> masks_per_loop;
    std::map<std::string, std::vector<CameraView>> final_views;
};

/// Iterative self-training: per loop and frame, initialize, optimize, filter
/// pseudo-depth, update the predictor and (except after the last loop)
/// compensate masks for the next loop. Frame failures are logged and skipped;
/// configuration errors abort. Artifacts go under `out` when given.
TrainingReport run_training_loop(const Dataset& data, const PipelineConfig& cfg, DepthPredictor& predictor,
                                 SegmentationOracle* oracle, const std::optional<std::filesystem::path>& out = {},
                                 std::ostream* log = nullptr);

struct InferenceResult {
    DetectionSet detections;
    LabeledScene scene;
    std::optional<EvalResult> evaluation;
    std::size_t points = 0;
};

/// Predicts depth per view, back-projects foreground pixels into one point
/// cloud, converts it to Gaussians, matches identities across views and
/// localizes. Views without masks are skipped; fewer than two usable views is
/// a ConfigError.
InferenceResult run_inference(std::span<const CameraView> views, DepthPredictor& predictor, const PipelineConfig& cfg,
                              const std::vector<Eigen::Vector2d>* ground_truth = nullptr,
                              std::ostream* log = nullptr);

/// Bird's-eye scatter plot: ground truth as green circles (gate radius),
/// detections as red crosses.
RgbImage plot_bev(const DetectionSet& detections, std::span<const Eigen::Vector2d> ground_truth,
                  const GroundRange& range, double gate, int size = 512);

} // namespace pedsplat
