#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeflow/align/align.hpp"
#include "freeflow/autocal/calibration.hpp"
#include "freeflow/compensate/mlp.hpp"
#include "freeflow/fever/screening.hpp"
#include "freeflow/pipeline/evaluate.hpp"
#include "freeflow/pipeline/source.hpp"
#include "freeflow/track/tracker.hpp"

namespace ff::pipeline {

struct PipelineConfig {
    /// Distance at which the manual thermal-to-visual offset was fitted.
    double manual_calibration_distance = 2.0;
    align::AlignConfig align;  ///< manual offset is derived from the rig unless align_manual_set
    bool align_manual_set = false;
    track::TrackConfig track;
    fever::ScreeningConfig screening;
    autocal::CalibConfig calibration;
    bool calibration_enabled = true;
    std::optional<std::string> compensation_model;  ///< model.json path
    bool write_annotated = false;
    /// When false, metrics.json carries null fps and latency so that repeated runs are byte-identical.
    bool record_timing = true;
    /// Worker threads; 0 runs everything on the calling thread. Unset reads F3S_THREADS.
    std::optional<int> threads;
    std::uint64_t seed = 0;  ///< RANSAC seed base

    void validate() const;
};

nlohmann::json toJson(const PipelineConfig& c);
/// Absent keys keep their defaults. Throws std::invalid_argument on bad values.
PipelineConfig pipelineConfigFromJson(const nlohmann::json& j);

/// Milliseconds spent per stage for one frame.
struct StageLatency {
    double track = 0, align = 0, calibrate = 0, screen = 0, render = 0, total = 0;
};

struct FrameResult {
    int frame_seq = 0;
    std::vector<int> ids;  ///< tracking ID per input detection, track::kUntracked for none
    align::AlignmentResult alignment;
    std::vector<fever::Reading> readings;
    std::vector<PixelRect> sampled;  ///< thermal pixels behind each reading
    std::vector<fever::Alert> alerts;
    double calibration_offset = 0.0;
    std::string annotation_path;
    StageLatency latency;
};

struct RunSummary {
    int frames = 0;
    std::vector<fever::Reading> readings;
    std::vector<LabeledAlert> alerts;
    std::map<int, std::string> truth_of_track;  ///< majority truth label per tracking ID
    autocal::CalibTrace calibration;
    double fps = 0.0;
    double latency_p50 = 0.0;
    double latency_p95 = 0.0;
    std::optional<Metrics> metrics;  ///< present when the source has ground truth
    int threads = 0;
};

/// Called after every frame, in frame order, with the input frame and its result.
using FrameObserver = std::function<void(const Frame&, const FrameResult&)>;

align::StereoGeometry stereoOf(const sim::CameraRig& rig);
/// The configured manual offset, or the one fitted for the rig at manual_calibration_distance.
align::AffineOffset manualOffsetFor(const PipelineConfig& c, const sim::CameraRig& rig);

/// Worker thread count: the config value, else F3S_THREADS, else 0.
int resolveThreads(const PipelineConfig& c);

/// Runs every frame in order. With `out_dir`, writes readings.csv, readings_gt.csv, alerts.jsonl,
/// metrics.json and, if enabled, annotated/frame_%06d.ppm.
RunSummary runPipeline(const FrameSource& source, const PipelineConfig& config, const compensate::MLP* model,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                       const FrameObserver& observer = {});

/// Loads the configured model, if any, and runs.
RunSummary runPipeline(const FrameSource& source, const PipelineConfig& config,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Nearest-rank percentile (q in [0, 100]); 0 for empty input.
double percentile(std::vector<double> values, double q);

}  // namespace ff::pipeline
