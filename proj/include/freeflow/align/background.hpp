#pragma once

#include <span>
#include <vector>

#include "freeflow/domain.hpp"

namespace ff::align {

inline constexpr int kDefaultBackgroundWindow = 16;
inline constexpr int kDefaultBackgroundMinFrames = 8;

/// Per-pixel median over the last `window` frames. Throws std::invalid_argument when fewer
/// than `min_frames` frames are given or sizes differ.
GrayImage estimateBackground(std::span<const GrayImage> frames, int window = kDefaultBackgroundWindow,
                             int min_frames = kDefaultBackgroundMinFrames);
ThermalGrid estimateBackground(std::span<const ThermalGrid> frames, int window = kDefaultBackgroundWindow,
                               int min_frames = kDefaultBackgroundMinFrames);

/// |frame - background| > tau, followed by one 3x3 dilation. Throws on size mismatch.
Mask foregroundMask(const GrayImage& frame, const GrayImage& background, double tau);
Mask foregroundMask(const ThermalGrid& frame, const ThermalGrid& background, double tau);

/// One pass of 3x3 binary dilation.
Mask dilate(const Mask& m);

/// Running per-pixel median with selective update: pixels inside excluded rectangles keep
/// their history. Medians are computed lazily and cached until a pixel's window changes.
template <typename T>
class BackgroundModel {
public:
    BackgroundModel() = default;
    BackgroundModel(int width, int height, int window = kDefaultBackgroundWindow);

    int width() const { return width_; }
    int height() const { return height_; }
    int window() const { return window_; }
    int frames() const { return frames_; }

    /// Pushes every pixel not covered by `exclude`.
    void update(const Image<T>& frame, std::span<const PixelRect> exclude = {});

    /// Number of samples held for pixel (x, y).
    int samples(int x, int y) const { return count_[index(x, y)]; }

    /// Median background over `rect` (clipped), returned as a rect-sized image. Pixels without
    /// samples report the value from `fallback` so they never register as foreground.
    /// Refreshes the median cache, so it is a writer like update().
    Image<T> median(PixelRect rect, const Image<T>& fallback);

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    T medianAt(std::size_t i);

    int width_ = 0;
    int height_ = 0;
    int window_ = kDefaultBackgroundWindow;
    int frames_ = 0;
    std::vector<T> ring_;
    std::vector<std::uint8_t> head_;
    std::vector<std::uint8_t> count_;
    std::vector<T> cache_;
    std::vector<std::uint8_t> dirty_;
};

extern template class BackgroundModel<std::uint8_t>;
extern template class BackgroundModel<float>;

}  // namespace ff::align
