#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/gaussian.hpp"
#include "pedsplat/image.hpp"
#include "pedsplat/localization.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pedsplat::io {

namespace fs = std::filesystem;

/// Calibration JSON: {"cameras": [{"name", "fx", "fy", "cx", "cy", "width",
/// "height", "rotation": [9, row-major camera-to-world], "translation": [3]}]}.
std::vector<Camera> read_calibration(const fs::path& path);
void write_calibration(const fs::path& path, const std::vector<Camera>& cameras);

/// Depth frame: "PSDF", u32 version (1), u32 width, u32 height, then
/// width*height little-endian float32 values, row-major, NaN = invalid.
DepthImage read_depth(const fs::path& path);
void write_depth(const fs::path& path, const DepthImage& depth);

RgbImage read_rgb_png(const fs::path& path);
void write_rgb_png(const fs::path& path, const RgbImage& image);

/// Instance labels as 16-bit grayscale PNG (8-bit files are accepted on read).
LabelImage read_labels_png(const fs::path& path);
void write_labels_png(const fs::path& path, const LabelImage& labels);

/// Binary mask as 8-bit PNG: 0 or 255 on write, nonzero = set on read.
Mask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const Mask& mask);

/// Gaussian table: "PSGS", u32 version (1), u64 count, then per Gaussian 14
/// float64 (mean xyz, log_scales xyz, quaternion wxyz, opacity_logit, rgb)
/// followed by int32 ped_id (-1 = none). Little-endian.
std::vector<Gaussian3D> read_gaussians(const fs::path& path);
void write_gaussians(const fs::path& path, const std::vector<Gaussian3D>& gaussians);

/// Detections CSV: frame,x,y,confidence,id.
using FrameDetections = std::map<std::string, DetectionSet>;
FrameDetections read_detections_csv(const fs::path& path);
void write_detections_csv(const fs::path& path, const FrameDetections& detections);

/// Ground truth CSV: frame,x,y.
using FrameLocations = std::map<std::string, std::vector<Eigen::Vector2d>>;
FrameLocations read_ground_truth_csv(const fs::path& path);
void write_ground_truth_csv(const fs::path& path, const FrameLocations& locations);

/// Creates parent directories as needed.
void ensure_parent(const fs::path& path);

} // namespace pedsplat::io
