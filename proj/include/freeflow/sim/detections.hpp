#pragma once

#include <string>
#include <vector>

#include "freeflow/detection.hpp"
#include "freeflow/domain.hpp"
#include "freeflow/sim/scenario.hpp"

namespace ff::sim {

using ff::Detection;
using ff::DetectionKind;

/// Simulated detector output for frame `seq`, ordered by person then kind (body, head, face, eye).
std::vector<Detection> emitDetections(const Scenario& s, int seq, const DetectionNoise& noise);
inline std::vector<Detection> emitDetections(const Scenario& s, int seq) {
    return emitDetections(s, seq, s.detection_noise);
}

struct GroundTruthRow {
    int frame = 0;
    std::string person_id;
    double core_temp_c = 0.0;
    double distance_m = 0.0;
    bool visible = false;
};

/// One row per person whose trajectory is active at frame `seq`.
std::vector<GroundTruthRow> groundTruth(const Scenario& s, int seq);

}  // namespace ff::sim
