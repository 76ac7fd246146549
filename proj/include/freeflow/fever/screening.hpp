#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freeflow/align/align.hpp"
#include "freeflow/detection.hpp"

namespace ff::fever {

/// Measurement site; lower value means higher priority.
enum class RegionPriority { EyeForehead = 1, Face = 2, Head = 3 };

const char* toString(RegionPriority p);
RegionPriority priorityFromString(const std::string& s);

/// Fractions of the region box kept for sampling.
struct SamplingArea {
    double width = 1.0;
    double height = 1.0;
};

struct ScreeningConfig {
    std::optional<BBox> roi;  ///< visual pixels; unset means the whole frame
    double zone_min = 0.9;    ///< meters
    double zone_max = 3.7;
    double fever_threshold = 38.0;
    double plausible_min = 30.0;
    double plausible_max = 45.0;
    int min_readings = 3;
    double delta_realert = 0.3;
    double cache_ttl = 10.0;
    /// Eye band: width fraction of the eye box, height as a fraction of the eye box width,
    /// rising from the eye line over the forehead.
    SamplingArea eye_area{0.6, 0.4};
    SamplingArea face_area{0.5, 0.5};
    SamplingArea head_area{0.4, 0.4};
    /// Distance fallback from box height: z = visual_focal * physical height / box height.
    double visual_focal = 640.0;
    double head_height_m = 0.22;
    double face_height_m = 0.176;
    double body_height_m = 1.25;
    double body_width_m = 0.44;
    int visual_width = 1280;  ///< boxes touching the frame edge are clipped and not used for depth
    int visual_height = 960;

    void validate() const;
};

/// All boxes of one tracked person in one frame.
struct PersonObservation {
    int id = 0;
    std::optional<BBox> body;
    std::optional<BBox> face;
    std::optional<BBox> head;
    std::optional<BBox> eye;
};

/// Groups detections by tracking ID (untracked ones are skipped); per kind the most confident wins.
std::map<int, PersonObservation> groupDetections(std::span<const Detection> detections, std::span<const int> ids);

/// Highest-priority region available and its sampling box in visual pixels.
std::optional<std::pair<RegionPriority, BBox>> samplingArea(const PersonObservation& p, const ScreeningConfig& c);

struct Measurement {
    double raw = 0.0;  ///< °C, calibration offset included
    RegionPriority priority = RegionPriority::Head;
    PixelRect pixels;  ///< thermal pixels that were sampled
};

/// Thermal pixels sampled for a visual box: the pixels whose centers fall inside the mapped box,
/// or the single pixel under its center when the box is smaller than one pixel. Empty when the
/// mapped box lies outside the frame.
PixelRect thermalPixels(const BBox& mapped, int width, int height);

/// Maximum thermal pixel (plus `offset`) over the sampling area of the best available region.
/// Nothing is returned when the area maps outside the frame or the value is implausible.
std::optional<Measurement> measureTemperature(const PersonObservation& p, const align::PersonAlignment& alignment,
                                              const ThermalGrid& thermal, double offset, const ScreeningConfig& c);

/// Distance from alignment when available, else from the head, face or body box size. Body
/// dimensions are only used along axes where the box does not touch the frame edge.
struct DistanceEstimate {
    double meters = 0.0;
    bool from_disparity = false;
};
std::optional<DistanceEstimate> estimateDistance(const PersonObservation& p, const align::PersonAlignment* alignment,
                                                 const ScreeningConfig& c);

struct Reading {
    int person_id = 0;
    int frame_seq = 0;
    RegionPriority priority = RegionPriority::Head;
    double raw_temp = 0.0;
    double corrected_temp = 0.0;
    double distance = 0.0;
    bool low_confidence = false;
};

struct ScreeningRecord {
    int person_id = 0;
    std::vector<Reading> readings;
    std::optional<RegionPriority> best_priority_seen;
    std::optional<double> reported_temp;
    std::optional<double> alerted_temp;
    std::optional<RegionPriority> alerted_priority;
    bool entered_zone = false;
    double last_seen = 0.0;
};

enum class AlertReason { First, HigherPriority, Delta };
const char* toString(AlertReason r);

struct Alert {
    int person_id = 0;
    double temp = 0.0;
    RegionPriority priority = RegionPriority::Head;
    int frame_seq = 0;
    AlertReason reason = AlertReason::First;
};

struct Annotation {
    int person_id = 0;
    BBox box;  ///< visual pixels
    std::optional<double> temp;
    bool febrile = false;
    bool in_zone = false;
};

struct ScreeningState {
    int last_seq = -1;
    std::map<int, ScreeningRecord> records;
};

/// Maps (raw °C, distance m) to a corrected temperature. Empty means pass-through.
using Corrector = std::function<double(double raw, double distance)>;

struct FrameInput {
    int seq = 0;
    double time = 0.0;
    std::span<const Detection> detections;
    std::span<const int> ids;  ///< tracking ID per detection
    const align::AlignmentResult* alignment = nullptr;
    const ThermalGrid* thermal = nullptr;
    double offset = 0.0;  ///< calibration offset added to every thermal value
    Corrector corrector;
};

struct FrameOutcome {
    bool discarded = false;
    std::vector<Reading> readings;
    std::vector<Annotation> annotations;
};

/// Drops out-of-order frames without touching the state, skips people outside the ROI, and
/// measures everyone whose distance falls inside the capture zone. Records idle for longer than
/// cache_ttl are dropped.
FrameOutcome processFrame(const FrameInput& in, ScreeningState& state, const ScreeningConfig& c);

/// Recomputes reported temperatures from the best priority seen and emits alerts for records
/// with at least min_readings readings.
std::vector<Alert> refineAndAlert(ScreeningState& state, const ScreeningConfig& c, int frame_seq);

/// Fills annotation labels from the current records.
void labelAnnotations(std::vector<Annotation>& annotations, const ScreeningState& state, const ScreeningConfig& c);

}  // namespace ff::fever
