#include "freeflow/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ff {

BBox::BBox(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
        throw std::invalid_argument("BBox: non-finite coordinate");
    if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("BBox: width and height must be positive");
}

BBox BBox::unite(const BBox& o) const {
    return fromCorners(std::min(x_, o.x_), std::min(y_, o.y_), std::max(right(), o.right()),
                       std::max(bottom(), o.bottom()));
}

BBox BBox::expanded(double fraction) const {
    return {x_ - fraction * w_, y_ - fraction * h_, w_ * (1.0 + 2.0 * fraction), h_ * (1.0 + 2.0 * fraction)};
}

double intersectionArea(const BBox& a, const BBox& b) {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih;
}

double iou(const BBox& a, const BBox& b) {
    const double inter = intersectionArea(a, b);
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

AppearanceVector::AppearanceVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("AppearanceVector: empty");
    double sq = 0.0;
    for (double v : values_) {
        if (!std::isfinite(v)) throw std::invalid_argument("AppearanceVector: non-finite component");
        sq += v * v;
    }
    if (sq <= 0.0) throw std::invalid_argument("AppearanceVector: zero vector");
    // Already unit length (e.g. read back from disk): leave the bits alone so round trips are exact.
    if (std::abs(sq - 1.0) <= 1e-14) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : values_) v *= inv;
}

double similarity(const AppearanceVector& a, const AppearanceVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("similarity: dimension mismatch");
    const auto va = a.values();
    const auto vb = b.values();
    const double dot = std::inner_product(va.begin(), va.end(), vb.begin(), 0.0);
    return std::clamp(dot, -1.0, 1.0);
}

PixelRect PixelRect::covering(const BBox& box, int w, int h) {
    // pixel i has its center at i + 0.5
    PixelRect r{static_cast<int>(std::ceil(box.x() - 0.5)), static_cast<int>(std::ceil(box.y() - 0.5)),
                static_cast<int>(std::floor(box.right() - 0.5)) + 1,
                static_cast<int>(std::floor(box.bottom() - 0.5)) + 1};
    return r.clipped(w, h);
}

PixelRect PixelRect::clipped(int w, int h) const {
    PixelRect r{std::clamp(x0, 0, w), std::clamp(y0, 0, h), std::clamp(x1, 0, w), std::clamp(y1, 0, h)};
    if (r.x1 < r.x0) r.x1 = r.x0;
    if (r.y1 < r.y0) r.y1 = r.y0;
    return r;
}

}  // namespace ff
