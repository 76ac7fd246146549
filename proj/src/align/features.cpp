#include "freeflow/align/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ff::align {

namespace {

constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
                                                       {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

// Summed-area table with a zero border; out-of-image pixels count as zero.
class Integral {
public:
    explicit Integral(const GrayImage& img) : w_(img.width()), h_(img.height()), sum_(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0) {
        for (int y = 0; y < h_; ++y) {
            std::int64_t acc = 0;
            for (int x = 0; x < w_; ++x) {
                acc += img(x, y);
                at(x + 1, y + 1) = at(x + 1, y) + acc;
            }
        }
    }

    // sum over [x0, x1) x [y0, y1) after clipping
    std::int64_t box(int x0, int y0, int x1, int y1) const {
        x0 = std::clamp(x0, 0, w_);
        x1 = std::clamp(x1, 0, w_);
        y0 = std::clamp(y0, 0, h_);
        y1 = std::clamp(y1, 0, h_);
        if (x1 <= x0 || y1 <= y0) return 0;
        return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
    }

private:
    std::int64_t& at(int x, int y) { return sum_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
    std::int64_t at(int x, int y) const { return sum_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

    int w_, h_;
    std::vector<std::int64_t> sum_;
};

double orientationAt(const GrayImage& img, int cx, int cy, int radius) {
    double m01 = 0.0, m10 = 0.0;
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy) {
        const int y = cy + dy;
        if (y < 0 || y >= img.height()) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > r2) continue;
            const int x = cx + dx;
            if (x < 0 || x >= img.width()) continue;
            const double v = img(x, y);
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    return std::atan2(m01, m10);
}

Descriptor describe(const Integral& integral, int cx, int cy, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Descriptor d{};
    const auto& pattern = briefPattern();
    auto smoothed = [&](int px, int py) {
        const int x = cx + static_cast<int>(std::lround(c * px - s * py));
        const int y = cy + static_cast<int>(std::lround(s * px + c * py));
        return integral.box(x - 2, y - 2, x + 3, y + 3);
    };
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const auto& p = pattern[i];
        if (smoothed(p[0], p[1]) < smoothed(p[2], p[3])) d[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    return d;
}

}  // namespace

int hammingDistance(const Descriptor& a, const Descriptor& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(a[i] ^ b[i]);
    return d;
}

const std::array<std::array<std::int8_t, 4>, 256>& briefPattern() {
    static const auto pattern = [] {
        std::array<std::array<std::int8_t, 4>, 256> p{};
        std::mt19937 rng(0x0B21EFu);
        std::normal_distribution<double> g(0.0, 31.0 / 5.0);
        auto draw = [&] {
            for (;;) {
                const double x = std::round(g(rng));
                const double y = std::round(g(rng));
                if (x * x + y * y <= 13.0 * 13.0) return std::array<std::int8_t, 2>{static_cast<std::int8_t>(x), static_cast<std::int8_t>(y)};
            }
        };
        for (auto& e : p) {
            std::array<std::int8_t, 2> a, b;
            do {
                a = draw();
                b = draw();
            } while (a == b);
            e = {a[0], a[1], b[0], b[1]};
        }
        return p;
    }();
    return pattern;
}

int fastScore(const GrayImage& img, int x, int y, int threshold) {
    if (x < 3 || y < 3 || x >= img.width() - 3 || y >= img.height() - 3) return 0;
    const int c = img(x, y);
    std::array<int, 16> state{};  // +1 brighter, -1 darker, 0 similar
    std::array<int, 16> diff{};
    for (std::size_t i = 0; i < kCircle.size(); ++i) {
        const int v = img(x + kCircle[i][0], y + kCircle[i][1]);
        diff[i] = v - c;
        state[i] = v > c + threshold ? 1 : (v < c - threshold ? -1 : 0);
    }
    for (const int sign : {1, -1}) {
        int run = 0;
        bool corner = false;
        for (int i = 0; i < 32 && !corner; ++i) {
            if (state[static_cast<std::size_t>(i % 16)] == sign) {
                if (++run >= 9) corner = true;
            } else {
                run = 0;
            }
        }
        if (corner) {
            int score = 0;
            for (std::size_t i = 0; i < 16; ++i)
                if (state[i] == sign) score += std::abs(diff[i]) - threshold;
            return std::max(score, 1);
        }
    }
    return 0;
}

std::vector<Feature> detectFeatures(const GrayImage& image, const Mask& mask, const FeatureParams& params) {
    if (image.width() != mask.width() || image.height() != mask.height())
        throw std::invalid_argument("detectFeatures: mask size differs from image");
    const int w = image.width();
    const int h = image.height();
    Image<int> score(w, h, 0);
    for (int y = 3; y < h - 3; ++y)
        for (int x = 3; x < w - 3; ++x)
            if (mask(x, y)) score(x, y) = fastScore(image, x, y, params.fast_threshold);

    struct Candidate {
        int x, y, s;
    };
    std::vector<Candidate> corners;
    for (int y = 3; y < h - 3; ++y) {
        for (int x = 3; x < w - 3; ++x) {
            const int s = score(x, y);
            if (s == 0) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int o = score(x + dx, y + dy);
                    // ties resolve toward the earlier raster position
                    if (o > s || (o == s && (dy < 0 || (dy == 0 && dx < 0)))) {
                        peak = false;
                        break;
                    }
                }
            if (peak) corners.push_back({x, y, s});
        }
    }
    std::stable_sort(corners.begin(), corners.end(), [](const Candidate& a, const Candidate& b) { return a.s > b.s; });
    if (static_cast<int>(corners.size()) > params.max_features) corners.resize(static_cast<std::size_t>(params.max_features));

    const Integral integral(image);
    std::vector<Feature> out;
    out.reserve(corners.size());
    for (const auto& c : corners) {
        Feature f;
        f.location = {c.x + 0.5, c.y + 0.5};
        f.response = c.s;
        f.orientation = orientationAt(image, c.x, c.y, params.patch_radius);
        f.descriptor = describe(integral, c.x, c.y, f.orientation);
        out.push_back(f);
    }
    return out;
}

std::vector<Match> matchDescriptors(const std::vector<Descriptor>& a, const std::vector<Descriptor>& b,
                                    const MatchParams& params) {
    std::vector<Match> out;
    if (a.empty() || b.empty()) return out;
    constexpr int kInf = std::numeric_limits<int>::max();
    std::vector<int> best_b_for_a(a.size(), -1), best_d_a(a.size(), kInf), second_d_a(a.size(), kInf);
    std::vector<int> best_a_for_b(b.size(), -1), best_d_b(b.size(), kInf);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const int d = hammingDistance(a[i], b[j]);
            if (d < best_d_a[i]) {
                second_d_a[i] = best_d_a[i];
                best_d_a[i] = d;
                best_b_for_a[i] = static_cast<int>(j);
            } else if (d < second_d_a[i]) {
                second_d_a[i] = d;
            }
            if (d < best_d_b[j]) {
                best_d_b[j] = d;
                best_a_for_b[j] = static_cast<int>(i);
            }
        }
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int j = best_b_for_a[i];
        if (best_a_for_b[static_cast<std::size_t>(j)] != static_cast<int>(i)) continue;
        if (best_d_a[i] > params.max_distance) continue;
        if (second_d_a[i] != kInf && !(best_d_a[i] < params.ratio * second_d_a[i])) continue;
        out.push_back({static_cast<int>(i), j, best_d_a[i]});
    }
    return out;
}

std::vector<Match> matchDescriptors(const std::vector<Feature>& a, const std::vector<Feature>& b, const MatchParams& params) {
    std::vector<Descriptor> da, db;
    da.reserve(a.size());
    db.reserve(b.size());
    for (const auto& f : a) da.push_back(f.descriptor);
    for (const auto& f : b) db.push_back(f.descriptor);
    return matchDescriptors(da, db, params);
}

}  // namespace ff::align
