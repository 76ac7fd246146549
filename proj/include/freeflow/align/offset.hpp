#pragma once

#include "freeflow/domain.hpp"

namespace ff::align {

/// Static scale-then-translate map from thermal to visual pixels:
/// (x, y) -> (x * s_x + t_x, y * s_y + t_y).
struct AffineOffset {
    double t_x = 0.0;
    double t_y = 0.0;
    double s_x = 1.0;
    double s_y = 1.0;

    /// Throws std::invalid_argument unless both scales are positive and finite.
    void validate() const;
};

Point2 manualOffsetMap(Point2 p, const AffineOffset& o);
/// Inverse of manualOffsetMap (visual -> thermal).
Point2 manualOffsetUnmap(Point2 p, const AffineOffset& o);

}  // namespace ff::align
