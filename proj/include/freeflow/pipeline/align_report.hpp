#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "freeflow/align/offset.hpp"
#include "freeflow/pipeline/pipeline.hpp"
#include "freeflow/sim/scenario.hpp"

namespace ff::pipeline {

/// Head-center registration error of one person in one frame, in visual pixels. Each error is
/// where the thermal content of the true head center lands in the visual frame minus the true
/// visual position: "before" uses resolution scaling only, "manual" the static offset, and
/// "dynamic" whichever map is active for the person (the homography, or the fallback offset).
struct AlignmentErrorRow {
    int frame = 0;
    int person_id = 0;
    std::string truth_id;
    double distance_m = 0.0;
    bool dynamic = false;
    double x_before = 0, y_before = 0;
    double x_manual = 0, y_manual = 0;
    double x_dynamic = 0, y_dynamic = 0;
};

/// Rows for every aligned person whose tracking ID can be tied to a scenario person through the
/// frame's detections.
std::vector<AlignmentErrorRow> alignmentErrors(const Frame& frame, const FrameResult& result,
                                               const sim::Scenario& scenario, const align::AffineOffset& manual);

/// CSV: distance_ft,x_err_before,y_err_before,x_err_manual,y_err_manual,x_err_dynamic,y_err_dynamic.
void writeAlignmentReport(const std::filesystem::path& path, std::span<const AlignmentErrorRow> rows);

}  // namespace ff::pipeline
