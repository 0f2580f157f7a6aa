#pragma once

#include "pedsplat/gaussian.hpp"
#include "pedsplat/view.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace pedsplat {

struct LabeledScene {
    std::vector<Gaussian3D> gaussians; // ped_id set where assigned
    /// Per view, instance label in that view -> pedestrian id.
    std::vector<std::map<std::uint16_t, int>> mask_ids;
};

struct MatchingParams {
    double min_visibility = 0.05; // blend-weight threshold for candidacy
    /// Erode masks by this many pixels before the projected-mean test, so
    /// silhouette-edge Gaussians of a neighbor do not leak in.
    int erosion = 1;
    /// When a mask's candidates carry several ids, every other id holding at
    /// least this fraction of the candidates is merged into the winner.
    /// Values above 1 disable merging.
    double merge_share = 0.1;
    /// Depth band, in meters, within which splats do not occlude each other
    /// in the visibility test. Fused clouds sample one surface from several
    /// views, and without the band each view's own samples hide the others.
    double surface_tolerance = 0.05;

    void validate() const;
};

/// Cross-view identity assignment. Views are visited in order; for each mask
/// the candidates are Gaussians whose projected mean lies in the (eroded) mask and
/// whose blend weight inside it exceeds the visibility threshold. The mask and all
/// its candidates take the most frequent id among labeled candidates (ties to the
/// smaller id), or a fresh id when no candidate is labeled. Ids already given to
/// another mask of the same view do not vote. Masks with no labeled interior
/// candidates retry with the full mask after the rest of the view is matched.
/// Ids with a large enough share of a mask's candidates are merged into the
/// winner unless both own masks in a common view.
LabeledScene match_labels(std::vector<Gaussian3D> gaussians, std::span<const CameraView> views,
                          const MatchingParams& params = {});

/// Relabels a view's instance image with pedestrian ids (unassigned masks -> 0).
LabelImage id_image(const LabelImage& instances, const std::map<std::uint16_t, int>& ids);

} // namespace pedsplat
