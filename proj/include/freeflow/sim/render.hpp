#pragma once

#include <optional>

#include "freeflow/domain.hpp"
#include "freeflow/sim/scenario.hpp"

namespace ff::sim {

struct FramePair {
    int seq = 0;
    double timestamp = 0.0;
    GrayImage visual;
    ThermalGrid thermal;
};

/// Surface classes of the billboard body model. Visual gray level and thermal source
/// temperature increase together across materials.
enum class Material { None, Glasses, Hat, Hair, ClothA, ClothB, Mask, ClothC, SkinFace, SkinCore };

/// Fixed body dimensions, meters.
struct BodyModel {
    static constexpr double kHeadWidth = 0.16;
    static constexpr double kHeadHeight = 0.22;
    static constexpr double kBodyWidth = 0.44;
    static constexpr double kBodyTop = 0.20;  ///< below the head top
    static constexpr double kBodyBottom = 1.25;
    static constexpr double kCellSize = 0.09;
    static constexpr double kCameraHeight = 1.60;

    // Head-relative fractions (of head width / height).
    static constexpr double kHairline = 0.20;
    static constexpr double kHatLine = 0.26;
    static constexpr double kEyeTop = 0.36;
    static constexpr double kEyeBottom = 0.46;
    static constexpr double kMaskTop = 0.58;
    static constexpr double kMaskBottom = 0.95;
    static constexpr double kFaceLeft = 0.12;
    static constexpr double kFaceRight = 0.88;
    static constexpr double kEyeLeft = 0.18;
    static constexpr double kEyeRight = 0.82;

    static constexpr double kSkinFaceDrop = 0.3;  ///< °C below core for non-forehead facial skin
};

int visualGray(Material m);
/// Source (unattenuated) temperature of a material for a person with the given core temperature.
double sourceTemp(Material m, double core_temp);

/// Measured temperature of a surface at depth d: ambient + (source - ambient) * exp(-kappa * d).
double attenuatedTemp(double source, double ambient, double kappa, double distance);

/// Material at offset (du, dv) meters from the head top center of person `index`.
Material materialAt(const Scenario& s, std::size_t index, double du, double dv);

/// World-space layout of one person at time t.
struct PersonPose {
    std::size_t index = 0;
    double x = 0.0;       ///< lateral, meters
    double z = 0.0;       ///< depth, meters
    double head_top = 0;  ///< world Y of the head top (down positive)
};

PersonPose poseAt(const Scenario& s, std::size_t index, double t);

/// Part boxes projected into the visual frame (unclipped).
struct PartBoxes {
    BBox body;  ///< whole silhouette: head + torso
    BBox head;
    BBox face;
    BBox eye;
};

PartBoxes projectParts(const CameraRig& rig, const PersonPose& pose);

/// True position of the head center in both sensors.
struct HeadTruth {
    Point2 visual;
    Point2 thermal;
    double distance = 0.0;
};

HeadTruth headTruth(const CameraRig& rig, const PersonPose& pose);

/// Renders frame `seq`. Throws std::out_of_range when seq is outside [0, frameCount()).
FramePair renderFramePair(const Scenario& s, int seq);

/// Static visual background (textured, no people).
GrayImage renderBackground(const Scenario& s);

}  // namespace ff::sim
