#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "freeflow/align/background.hpp"
#include "freeflow/align/features.hpp"
#include "freeflow/align/homography.hpp"
#include "freeflow/align/offset.hpp"

namespace ff::align {

/// Resolutions plus the stereo constants needed to turn disparity into depth.
struct StereoGeometry {
    int visual_width = 1280;
    int visual_height = 960;
    int thermal_width = 336;
    int thermal_height = 252;
    double thermal_focal = 168.0;
    double baseline = 0.06;

    double scaleX() const { return static_cast<double>(thermal_width) / visual_width; }
    double scaleY() const { return static_cast<double>(thermal_height) / visual_height; }
};

struct AlignConfig {
    AffineOffset manual;  ///< thermal -> visual fallback map
    double visual_tau = 12.0;
    double thermal_tau = 1.5;
    int background_window = kDefaultBackgroundWindow;
    int background_min_frames = kDefaultBackgroundMinFrames;
    FeatureParams features;
    MatchParams matching;
    RansacParams ransac;
    double region_margin = 0.10;  ///< visual region growth, fraction of box size
    int search_margin_x = 16;     ///< thermal pixels
    int search_margin_y = 8;
    int min_inliers = 4;
    double prior_tolerance = 0.5;    ///< accepted disparity deviation, fraction of the prior disparity
    double prior_tolerance_px = 3.0; ///< lower bound on that deviation, thermal pixels
    /// Depth is reported only from at least this many inliers, and only when it lies within
    /// `depth_prior_agreement` (relative) of the region's prior. The homography is kept either way.
    int depth_min_inliers = 10;
    double depth_prior_agreement = 0.15;

    /// Manual offset fitted by overlaying the two sensors for a target at `calibration_distance`.
    static AlignConfig forGeometry(const StereoGeometry& g, double calibration_distance = 2.0);
};

/// z = focal * baseline / disparity; nullopt unless disparity > 0.
std::optional<double> depthFromDisparity(double disparity, double focal, double baseline);

struct PersonRegion {
    int id = 0;
    BBox box;  ///< visual pixels
    /// Rough depth (e.g. from box height). When set, matches whose disparity is far from the
    /// disparity at this depth are dropped before RANSAC, which keeps other people out of the fit.
    std::optional<double> distance_prior;
    /// Boxes of people in front of this one; matches starting inside them are ignored.
    std::vector<BBox> occluders;
};

struct PersonAlignment {
    int id = 0;
    bool dynamic = false;        ///< homography accepted; otherwise the manual offset is active
    bool low_confidence = true;  ///< set whenever the manual-offset fallback is used
    Homography homography;       ///< visual (full resolution) -> thermal, valid when dynamic
    AffineOffset fallback;
    std::optional<double> distance;  ///< meters, from disparity
    double disparity = 0.0;          ///< thermal pixels
    int features_visual = 0;
    int features_thermal = 0;
    int matches = 0;

    Point2 toThermal(Point2 visual) const;
    /// Bounding box of the mapped corners, in thermal pixels.
    BBox mapBox(const BBox& visual) const;
};

struct AlignmentResult {
    std::map<int, PersonAlignment> persons;

    const PersonAlignment* find(int id) const;
    /// Aligned thermal lookup: thermal value under visual point `p` for person `id`.
    std::optional<float> alignedThermal(const ThermalGrid& thermal, int id, Point2 p) const;
};

/// Background models for both sensors; single writer, updated in frame order.
class AlignmentState {
public:
    AlignmentState(const StereoGeometry& geometry, const AlignConfig& config);

    const StereoGeometry& geometry() const { return geometry_; }
    const AlignConfig& config() const { return config_; }
    bool warmedUp() const { return frames_ >= config_.background_min_frames; }
    int frames() const { return frames_; }

    /// Pushes the frame into both models, skipping pixels near the given person boxes.
    void update(const GrayImage& visual, const ThermalGrid& thermal, std::span<const BBox> person_boxes);

    /// Thermal search rectangle for a visual region (manual offset plus search margins).
    PixelRect thermalSearchRect(const BBox& visual_box) const;
    PixelRect visualRegionRect(const BBox& visual_box) const;

    BackgroundModel<std::uint8_t>& visualBackground() { return visual_bg_; }
    BackgroundModel<float>& thermalBackground() { return thermal_bg_; }

private:
    StereoGeometry geometry_;
    AlignConfig config_;
    BackgroundModel<std::uint8_t> visual_bg_;
    BackgroundModel<float> thermal_bg_;
    int frames_ = 0;
};

/// Dynamic per-person alignment: masks -> features -> matches -> homography, falling back to
/// the manual offset (flagged low confidence) when fewer than `min_inliers` inliers survive.
/// RANSAC is seeded from `seed` and the person id. `threads` > 1 spreads persons over workers.
AlignmentResult alignPair(const GrayImage& visual, const ThermalGrid& thermal, std::span<const PersonRegion> regions,
                          AlignmentState& state, std::uint64_t seed, int threads = 1);

/// Intermediate images of one region, exposed for diagnostics and tests.
struct RegionImages {
    GrayImage visual;  ///< visual region resampled to thermal resolution, masked and stretched
    Mask visual_mask;
    int visual_origin_x = 0, visual_origin_y = 0;  ///< thermal-resolution coordinates of pixel (0, 0)
    GrayImage thermal;
    Mask thermal_mask;
    int thermal_origin_x = 0, thermal_origin_y = 0;
};

RegionImages buildRegionImages(const GrayImage& visual, const ThermalGrid& thermal, const BBox& box, AlignmentState& state);

}  // namespace ff::align
