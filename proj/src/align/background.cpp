#include "freeflow/align/background.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace ff::align {

namespace {

template <typename T>
T middle(std::span<T> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    if constexpr (std::is_integral_v<T>) {
        return static_cast<T>((static_cast<int>(v[n / 2 - 1]) + static_cast<int>(v[n / 2]) + 1) / 2);
    } else {
        return static_cast<T>(0.5 * (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])));
    }
}

template <typename T>
Image<T> medianOf(std::span<const Image<T>> frames, int window, int min_frames) {
    if (window <= 0 || min_frames <= 0) throw std::invalid_argument("estimateBackground: window and min_frames must be positive");
    if (frames.empty() || static_cast<int>(frames.size()) < min_frames)
        throw std::invalid_argument("estimateBackground: need at least " + std::to_string(min_frames) + " frames");
    const std::size_t take = std::min(frames.size(), static_cast<std::size_t>(window));
    const auto recent = frames.subspan(frames.size() - take);
    const int w = recent.front().width();
    const int h = recent.front().height();
    for (const auto& f : recent)
        if (f.width() != w || f.height() != h) throw std::invalid_argument("estimateBackground: frame size mismatch");
    Image<T> out(w, h);
    std::vector<T> buf(take);
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        for (std::size_t k = 0; k < take; ++k) buf[k] = recent[k].data()[i];
        out.data()[i] = middle(std::span<T>(buf));
    }
    return out;
}

template <typename T>
Mask thresholdDiff(const Image<T>& frame, const Image<T>& background, double tau) {
    if (frame.width() != background.width() || frame.height() != background.height())
        throw std::invalid_argument("foregroundMask: dimension mismatch");
    Mask m(frame.width(), frame.height());
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        const double d = std::abs(static_cast<double>(frame.data()[i]) - static_cast<double>(background.data()[i]));
        m.data()[i] = d > tau ? 1 : 0;
    }
    return dilate(m);
}

}  // namespace

GrayImage estimateBackground(std::span<const GrayImage> frames, int window, int min_frames) {
    return medianOf(frames, window, min_frames);
}

ThermalGrid estimateBackground(std::span<const ThermalGrid> frames, int window, int min_frames) {
    return medianOf(frames, window, min_frames);
}

Mask dilate(const Mask& m) {
    const int w = m.width();
    const int h = m.height();
    Mask horiz(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            horiz(x, y) = (m(x, y) || (x > 0 && m(x - 1, y)) || (x + 1 < w && m(x + 1, y))) ? 1 : 0;
    Mask out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out(x, y) = (horiz(x, y) || (y > 0 && horiz(x, y - 1)) || (y + 1 < h && horiz(x, y + 1))) ? 1 : 0;
    return out;
}

Mask foregroundMask(const GrayImage& frame, const GrayImage& background, double tau) {
    return thresholdDiff(frame, background, tau);
}

Mask foregroundMask(const ThermalGrid& frame, const ThermalGrid& background, double tau) {
    return thresholdDiff(frame, background, tau);
}

template <typename T>
BackgroundModel<T>::BackgroundModel(int width, int height, int window)
    : width_(width), height_(height), window_(window) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("BackgroundModel: size must be positive");
    if (window <= 0 || window > 255) throw std::invalid_argument("BackgroundModel: window must be in [1, 255]");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    ring_.assign(n * static_cast<std::size_t>(window), T{});
    head_.assign(n, 0);
    count_.assign(n, 0);
    cache_.assign(n, T{});
    dirty_.assign(n, 1);
}

template <typename T>
void BackgroundModel<T>::update(const Image<T>& frame, std::span<const PixelRect> exclude) {
    if (frame.width() != width_ || frame.height() != height_) throw std::invalid_argument("BackgroundModel: frame size mismatch");
    std::vector<std::uint8_t> skip;
    if (!exclude.empty()) {
        skip.assign(static_cast<std::size_t>(width_) * height_, 0);
        for (const auto& r0 : exclude) {
            const PixelRect r = r0.clipped(width_, height_);
            for (int y = r.y0; y < r.y1; ++y) std::fill_n(skip.begin() + static_cast<std::ptrdiff_t>(index(r.x0, y)), r.width(), 1);
        }
    }
    const auto win = static_cast<std::size_t>(window_);
    for (std::size_t i = 0; i < count_.size(); ++i) {
        if (!skip.empty() && skip[i]) continue;
        const T v = frame.data()[i];
        T& slot = ring_[i * win + head_[i]];
        if (count_[i] < window_) {
            ++count_[i];
            dirty_[i] = 1;
        } else if (slot != v) {
            dirty_[i] = 1;
        }
        slot = v;
        head_[i] = static_cast<std::uint8_t>((head_[i] + 1) % window_);
    }
    ++frames_;
}

template <typename T>
T BackgroundModel<T>::medianAt(std::size_t i) {
    if (dirty_[i]) {
        std::array<T, 255> buf;
        const std::size_t n = count_[i];
        std::copy_n(ring_.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(window_)), n, buf.begin());
        cache_[i] = middle(std::span<T>(buf.data(), n));
        dirty_[i] = 0;
    }
    return cache_[i];
}

template <typename T>
Image<T> BackgroundModel<T>::median(PixelRect rect, const Image<T>& fallback) {
    const PixelRect r = rect.clipped(width_, height_);
    Image<T> out(r.width(), r.height());
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            const std::size_t i = index(x, y);
            out(x - r.x0, y - r.y0) = count_[i] == 0 ? fallback(x, y) : medianAt(i);
        }
    }
    return out;
}

template class BackgroundModel<std::uint8_t>;
template class BackgroundModel<float>;

}  // namespace ff::align
