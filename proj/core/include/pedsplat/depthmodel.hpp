#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/depthfilter.hpp"
#include "pedsplat/image.hpp"
#include "pedsplat/superpixel.hpp"
#include "pedsplat/view.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>

namespace pedsplat {

/// Monocular depth predictor. predict returns metric depth, positive and finite
/// on the view's foreground; update feeds it the latest pseudo-depth labels.
class DepthPredictor {
public:
    virtual ~DepthPredictor() = default;
    virtual DepthImage predict(const CameraView& view) = 0;
    virtual void update(std::span<const PseudoDepthMap> labels) { (void)labels; }
};

struct ScaleAlignment {
    double scale = 1.0;
    DepthImage depth;
};

/// Median of metric / relative depth over ground pixels where both are
/// positive; returns the scaled relative depth. Throws DataError when no such
/// pixel exists.
ScaleAlignment align_scale(const DepthImage& relative, const DepthImage& metric_ground, const Mask& ground_mask);

/// Depth along each foreground ray to the vertical line through the
/// instance's standing point (the ground hit of its lowest pixel). NaN where
/// the standing point cannot be found.
DepthImage standing_depth(const Camera& camera, const Mask& instance);

struct BaselineConfig {
    GroundRange ground{-10.0, 10.0, -10.0, 10.0};
    double ground_step = 0.02;
    int superpixels = 30;
};

/// Deterministic stand-in for a fine-tuned network. Ground pixels take the
/// ground-plane depth; each pedestrian superpixel takes the median of the
/// accumulated valid pseudo-depth inside it, empty superpixels copy the
/// nearest filled one of the same instance, and instances without labels fall
/// back to standing_depth.
class BaselinePredictor : public DepthPredictor {
public:
    explicit BaselinePredictor(BaselineConfig cfg = {});
    DepthImage predict(const CameraView& view) override;
    /// Newer valid labels overwrite older ones per pixel.
    void update(std::span<const PseudoDepthMap> labels) override;

    const std::map<std::string, DepthImage>& labels() const { return labels_; }

private:
    BaselineConfig cfg_;
    std::map<std::string, DepthImage> labels_;
    std::map<std::string, DepthImage> ground_cache_;
};

/// Reads `<root>/<frame>/<camera>.f32` when present and otherwise defers to
/// `fallback`. With `align` the file is treated as relative depth and scaled
/// to the ground plane.
class DirectoryPredictor : public DepthPredictor {
public:
    DirectoryPredictor(std::filesystem::path root, std::unique_ptr<DepthPredictor> fallback, bool align = false,
                       BaselineConfig ground = {});
    DepthImage predict(const CameraView& view) override;
    void update(std::span<const PseudoDepthMap> labels) override;

private:
    std::filesystem::path root_;
    std::unique_ptr<DepthPredictor> fallback_;
    bool align_;
    BaselineConfig ground_;
};

} // namespace pedsplat
