#pragma once

#include <string>

#include "freeflow/domain.hpp"

namespace ff {

enum class DetectionKind { Body, Face, Head, Eye };

const char* toString(DetectionKind k);
/// Throws std::invalid_argument for unknown names.
DetectionKind detectionKindFromString(const std::string& s);

/// One detector output box for one frame.
struct Detection {
    int frame_seq = 0;
    DetectionKind kind = DetectionKind::Body;
    BBox bbox;
    double confidence = 1.0;
    AppearanceVector appearance;
    std::string truth_id;  ///< ground truth only; trackers must not read it

    bool operator==(const Detection& o) const;
};

}  // namespace ff
