#pragma once

#include "pedsplat/compensation.hpp"
#include "pedsplat/depthfilter.hpp"
#include "pedsplat/depthmodel.hpp"
#include "pedsplat/gaussian.hpp"
#include "pedsplat/localization.hpp"
#include "pedsplat/matching.hpp"
#include "pedsplat/optimizer.hpp"
#include "pedsplat/superpixel.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace pedsplat {

/// Loop >= 2 initialization around the predictor's depth.
struct DepthInitConfig {
    int samples = 8;
    double half_width = 0.3;
    double initial_opacity = 0.1;
};

struct GroundConfig {
    GroundRange range{-10.0, 10.0, -10.0, 10.0};
    double step = 0.02;
    bool backdrop = true; // frozen ground Gaussians as occluders during optimization
    int gaussian_stride = 4;
    int gaussian_band = 3;
};

struct PipelineConfig {
    int loops = 3;
    int superpixels = 30; // K per pedestrian mask
    SlicParams slic;
    RaySamplingConfig ray_sampling;
    DepthInitConfig depth_init;
    LossWeights loss;
    OptimConfig optim;
    GroundConfig ground;
    FilterParams filter;
    MatchingParams matching;
    LocalizationParams localization;
    CompensationThresholds compensation;
    int pixel_stride = 1; // inference back-projection stride
    double gate = 0.5;    // evaluation distance gate, meters

    std::filesystem::path data_dir;
    std::filesystem::path output_dir = "out";
    std::filesystem::path depth_dropin; // empty: baseline predictor only
    std::string oracle_command;         // empty: no external segmenter

    void validate() const;
    BaselineConfig baseline() const { return {ground.range, ground.step, superpixels}; }
};

/// Parses a JSON config. Missing keys keep their defaults; unknown keys are
/// errors. Throws ConfigError.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string dump_config(const PipelineConfig& cfg);

/// Applies PEDSPLAT_* overrides: the rest of the variable name, lower-cased,
/// is the key path with "__" between levels, e.g. PEDSPLAT_OPTIM__ITERATIONS=50
/// or PEDSPLAT_LOOPS=2. Values are parsed as JSON, falling back to a string.
PipelineConfig apply_env_overrides(const PipelineConfig& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

} // namespace pedsplat
