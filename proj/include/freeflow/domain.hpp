#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ff {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned box in pixel units, (x, y) is the top-left corner.
class BBox {
public:
    BBox() = default;
    /// Throws std::invalid_argument unless w > 0, h > 0 and all fields are finite.
    BBox(double x, double y, double w, double h);

    double x() const { return x_; }
    double y() const { return y_; }
    double w() const { return w_; }
    double h() const { return h_; }
    double right() const { return x_ + w_; }
    double bottom() const { return y_ + h_; }
    double area() const { return w_ * h_; }
    Point2 center() const { return {x_ + 0.5 * w_, y_ + 0.5 * h_}; }
    bool contains(Point2 p) const { return p.x >= x_ && p.x <= right() && p.y >= y_ && p.y <= bottom(); }

    /// Smallest box containing both.
    BBox unite(const BBox& o) const;
    /// Box grown by `fraction` of its size on every side.
    BBox expanded(double fraction) const;

    bool operator==(const BBox&) const = default;

    static BBox fromCorners(double x0, double y0, double x1, double y1) { return {x0, y0, x1 - x0, y1 - y0}; }

private:
    double x_ = 0.0, y_ = 0.0, w_ = 1.0, h_ = 1.0;
};

double intersectionArea(const BBox& a, const BBox& b);

/// Intersection over union, in [0, 1].
double iou(const BBox& a, const BBox& b);

/// Unit-norm feature vector standing in for a detector's appearance embedding.
class AppearanceVector {
public:
    static constexpr std::size_t kDefaultDim = 32;

    AppearanceVector() = default;
    /// Normalizes `values` to unit length. Throws on empty, non-finite or all-zero input.
    explicit AppearanceVector(std::vector<double> values);

    std::size_t dim() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    std::span<const double> values() const { return values_; }

    bool operator==(const AppearanceVector&) const = default;

private:
    std::vector<double> values_;
};

/// Cosine similarity of two appearance vectors. Throws std::invalid_argument on dimension mismatch.
double similarity(const AppearanceVector& a, const AppearanceVector& b);

/// Dense row-major raster.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{}) : width_(width), height_(height), data_(checkedSize(width, height), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return data_.empty(); }
    bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<T> row(int y) { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }
    std::span<const T> row(int y) const { return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    static std::size_t checkedSize(int w, int h) {
        if (w < 0 || h < 0) throw std::invalid_argument("negative image size");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GrayImage = Image<std::uint8_t>;
using ThermalGrid = Image<float>;
using Mask = Image<std::uint8_t>;

/// Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    bool operator==(const PixelRect&) const = default;

    /// Pixels whose centers fall inside `box`, clipped to a w x h raster.
    static PixelRect covering(const BBox& box, int w, int h);
    PixelRect clipped(int w, int h) const;
};

}  // namespace ff
