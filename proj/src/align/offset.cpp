#include "freeflow/align/offset.hpp"

#include <cmath>
#include <stdexcept>

namespace ff::align {

void AffineOffset::validate() const {
    if (!(s_x > 0.0) || !(s_y > 0.0) || !std::isfinite(s_x) || !std::isfinite(s_y))
        throw std::invalid_argument("AffineOffset: scale factors must be positive");
    if (!std::isfinite(t_x) || !std::isfinite(t_y)) throw std::invalid_argument("AffineOffset: non-finite offset");
}

Point2 manualOffsetMap(Point2 p, const AffineOffset& o) { return {p.x * o.s_x + o.t_x, p.y * o.s_y + o.t_y}; }

Point2 manualOffsetUnmap(Point2 p, const AffineOffset& o) { return {(p.x - o.t_x) / o.s_x, (p.y - o.t_y) / o.s_y}; }

}  // namespace ff::align
