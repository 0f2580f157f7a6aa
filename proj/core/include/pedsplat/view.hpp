#pragma once

#include "pedsplat/camera.hpp"
#include "pedsplat/image.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pedsplat {

/// One calibrated camera observation of a frame: image, per-view instance masks
/// (label image, 0 = background) and an optional depth frame.
struct CameraView {
    std::string id; // "<frame>/<camera>"
    Camera camera;
    RgbImage image;
    LabelImage instances;
    std::optional<DepthImage> depth;

    Mask foreground() const { return foreground_of(instances); }
};

std::string view_id(const std::string& frame, const std::string& camera);

} // namespace pedsplat
