#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/image.hpp"
#include "pedsplat/view.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pedsplat {

struct SegmentationRequest {
    std::string view_id;
    const RgbImage* image = nullptr;
    std::vector<Eigen::Vector2d> points; // positive point prompts, pixels
    PixelBox box;                        // box prompt
};

/// Promptable segmenter (points + box -> mask of the same size as the image).
class SegmentationOracle {
public:
    virtual ~SegmentationOracle() = default;
    virtual Mask segment(const SegmentationRequest& request) = 0;
};

/// Delegates to an external program: `command request.json response.png`. The
/// request holds the view id, image size, prompts and box; the program writes
/// an 8-bit mask PNG (nonzero = foreground).
class FileExchangeOracle : public SegmentationOracle {
public:
    FileExchangeOracle(std::string command, std::filesystem::path work_dir);
    Mask segment(const SegmentationRequest& request) override;

private:
    std::string command_;
    std::filesystem::path work_dir_;
    int calls_ = 0;
};

struct CompensationThresholds {
    int min_points = 50;        // fewer projected points -> skip
    double max_overlap = 0.5;   // fraction of projected points already on ref foreground
    double eps = 10.0;          // outlier clustering radius, pixels
    int min_pts = 5;

    void validate() const;
};

/// Reprojects the pixels of `instance` (with positive `depth`) from `src` into
/// `ref`, keeps in-frame results in front of the camera, and returns the
/// largest density cluster of the projected points.
std::vector<Eigen::Vector2d> project_instance(const Camera& src, const DepthImage& depth, const Mask& instance,
                                              const Camera& ref, const CompensationThresholds& th);

struct CompensationResult {
    LabelImage instances;          // input labels plus appended masks
    std::vector<std::uint16_t> added; // labels of appended masks
    int skipped_count = 0;
    int skipped_overlap = 0;
    int oracle_failures = 0;
};

/// Recovers masks missing from `ref` using every instance of every source view.
/// `depths[i]` is the depth of `sources[i]`. Existing masks are never modified;
/// new masks only claim background pixels.
CompensationResult compensate(const CameraView& ref, std::span<const CameraView> sources,
                              std::span<const DepthImage> depths, SegmentationOracle& oracle,
                              const CompensationThresholds& th = {});

} // namespace pedsplat
