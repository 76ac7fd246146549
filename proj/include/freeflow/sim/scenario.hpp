#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "freeflow/domain.hpp"

namespace ff::sim {

/// Pinhole pair: the thermal sensor sits `baseline` meters to the right of the visual sensor.
/// World frame is the visual camera frame: X right, Y down, Z forward, meters.
struct CameraRig {
    int visual_width = 1280;
    int visual_height = 960;
    int thermal_width = 336;
    int thermal_height = 252;
    double visual_focal = 640.0;
    double thermal_focal = 168.0;
    double baseline = 0.06;

    /// Thermal pixels per visual pixel (same on both axes for the default rig).
    double scaleX() const { return static_cast<double>(thermal_width) / visual_width; }
    double scaleY() const { return static_cast<double>(thermal_height) / visual_height; }

    Point2 projectVisual(double x, double y, double z) const;
    Point2 projectThermal(double x, double y, double z) const;
    /// Horizontal thermal-pixel parallax of a point at depth z, f_t * B / z.
    double thermalDisparity(double z) const { return thermal_focal * baseline / z; }

    void validate() const;
};

struct Waypoint {
    double t = 0.0;  ///< seconds
    double x = 0.0;  ///< lateral meters
    double z = 0.0;  ///< depth meters
};

struct Accessories {
    bool mask = false;
    bool glasses = false;
    bool hat = false;
    bool operator==(const Accessories&) const = default;
};

struct PersonSpec {
    std::string id;
    double core_temp = 37.0;
    double stature = 1.70;  ///< meters, sets head height relative to the camera
    std::vector<Waypoint> trajectory;
    Accessories accessories;
    AppearanceVector appearance;

    double enterTime() const { return trajectory.front().t; }
    double exitTime() const { return trajectory.back().t; }
    bool activeAt(double t) const { return !trajectory.empty() && t >= enterTime() && t <= exitTime(); }
    /// Linear interpolation along the trajectory; clamps outside the active window.
    Waypoint positionAt(double t) const;
};

/// Piecewise-constant additive thermal offset: each step (t, offset) holds until the next one.
struct DriftProfile {
    std::vector<std::pair<double, double>> steps;
    double at(double t) const;
};

struct BlackBodySpec {
    BBox roi{300.0, 8.0, 16.0, 16.0};  ///< thermal pixels
    double reference_temp = 35.0;
};

struct DetectionNoise {
    double miss_body = 0.0;
    double miss_head = 0.0;
    double miss_face = 0.0;
    double miss_eye = 0.0;
    double bbox_jitter_px = 0.0;
    double appearance_sigma = 0.0;
    bool occlusion = true;

    static DetectionNoise none() { return {}; }
    static DetectionNoise realistic() { return {0.03, 0.05, 0.08, 0.10, 1.5, 0.03, true}; }
};

struct Scenario {
    std::vector<PersonSpec> people;
    double duration = 10.0;
    double frame_rate = 8.0;
    CameraRig geometry;
    double ambient_temp = 22.0;
    double attenuation_kappa = 0.05;
    double thermal_noise_sigma = 0.1;
    DriftProfile drift;
    BlackBodySpec black_body;
    DetectionNoise detection_noise;
    std::uint64_t rng_seed = 0;

    int frameCount() const;
    double frameTime(int seq) const { return seq / frame_rate; }
    void validate() const;
};

/// Knobs for the random scenario generator.
struct GeneratorConfig {
    int people = 10;
    int febrile = 1;
    double febrile_min = 38.5;
    double febrile_max = 39.5;
    double normal_min = 36.1;
    double normal_max = 37.2;
    double warmup = 3.0;            ///< seconds before the first arrival
    double arrival_interval = 1.2;  ///< mean seconds between arrivals
    double arrival_jitter = 0.4;
    double speed_min = 0.9;
    double speed_max = 1.4;
    double lane_half_width = 0.9;
    double start_z = 5.0;
    double end_z = 0.75;
    double stature_min = 1.58;
    double stature_max = 1.82;
    double p_mask = 0.4;
    double p_glasses = 0.3;
    double p_hat = 0.2;
    double tail = 1.0;  ///< seconds kept after the last exit
    int appearance_dim = static_cast<int>(AppearanceVector::kDefaultDim);
    double frame_rate = 8.0;
    double ambient_temp = 22.0;
    double attenuation_kappa = 0.05;
    double thermal_noise_sigma = 0.1;
    DriftProfile drift;
    BlackBodySpec black_body;
    DetectionNoise detection_noise = DetectionNoise::realistic();
    CameraRig geometry;

    void validate() const;
};

/// Same (config, seed) always yields the same scenario.
Scenario generateScenario(const GeneratorConfig& config, std::uint64_t seed);

/// Deterministic RNG seed for an independent stream of one frame.
std::uint64_t streamSeed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace ff::sim
