#include "freeflow/detection.hpp"

#include <stdexcept>

namespace ff {

const char* toString(DetectionKind k) {
    switch (k) {
        case DetectionKind::Body: return "body";
        case DetectionKind::Face: return "face";
        case DetectionKind::Head: return "head";
        case DetectionKind::Eye: return "eye";
    }
    return "?";
}

DetectionKind detectionKindFromString(const std::string& s) {
    if (s == "body") return DetectionKind::Body;
    if (s == "face") return DetectionKind::Face;
    if (s == "head") return DetectionKind::Head;
    if (s == "eye") return DetectionKind::Eye;
    throw std::invalid_argument("unknown detection kind '" + s + "'");
}

bool Detection::operator==(const Detection& o) const {
    return frame_seq == o.frame_seq && kind == o.kind && bbox.x() == o.bbox.x() && bbox.y() == o.bbox.y() &&
           bbox.w() == o.bbox.w() && bbox.h() == o.bbox.h() && confidence == o.confidence &&
           appearance == o.appearance && truth_id == o.truth_id;
}

}  // namespace ff
