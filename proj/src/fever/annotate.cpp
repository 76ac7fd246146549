#include "freeflow/fever/annotate.hpp"

#include <array>
#include <cmath>
#include <cstdio>

namespace ff::fever {

namespace {

constexpr Rgb kNormal{40, 220, 40};
constexpr Rgb kFebrile{235, 30, 30};
constexpr Rgb kOutside{220, 200, 40};

// Rows top to bottom, five bits each, most significant bit on the left.
using Glyph = std::array<std::uint8_t, 7>;

const Glyph* glyph(char ch) {
    static const std::array<Glyph, 10> digits{{
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
        {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
        {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
        {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
        {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
        {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
    }};
    static const Glyph dot{0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
    static const Glyph dash{0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
    static const Glyph c{0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E};
    if (ch >= '0' && ch <= '9') return &digits[static_cast<std::size_t>(ch - '0')];
    if (ch == '.') return &dot;
    if (ch == '-') return &dash;
    if (ch == 'C') return &c;
    return nullptr;
}

void put(RgbImage& img, int x, int y, Rgb c) {
    if (img.inside(x, y)) img(x, y) = c;
}

void drawBox(RgbImage& img, const BBox& b, Rgb c, int thickness) {
    int x0 = static_cast<int>(std::lround(b.x())), y0 = static_cast<int>(std::lround(b.y()));
    int x1 = static_cast<int>(std::lround(b.right())) - 1, y1 = static_cast<int>(std::lround(b.bottom())) - 1;
    for (int t = 0; t < thickness; ++t) {
        for (int x = x0 + t; x <= x1 - t; ++x) {
            put(img, x, y0 + t, c);
            put(img, x, y1 - t, c);
        }
        for (int y = y0 + t; y <= y1 - t; ++y) {
            put(img, x0 + t, y, c);
            put(img, x1 - t, y, c);
        }
    }
}

}  // namespace

RgbImage toRgb(const GrayImage& gray) {
    RgbImage out(gray.width(), gray.height());
    for (std::size_t i = 0; i < gray.data().size(); ++i) {
        auto v = gray.data()[i];
        out.data()[i] = {v, v, v};
    }
    return out;
}

std::string temperatureLabel(double celsius) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fC", celsius);
    return buf;
}

void drawText(RgbImage& img, int x, int y, const std::string& text, Rgb color, int scale) {
    for (std::size_t k = 0; k < text.size(); ++k) {
        const Glyph* g = glyph(text[k]);
        if (!g) continue;
        int gx = x + static_cast<int>(k) * 6 * scale;
        for (int row = 0; row < 7; ++row)
            for (int col = 0; col < 5; ++col)
                if ((*g)[static_cast<std::size_t>(row)] & (0x10 >> col))
                    for (int dy = 0; dy < scale; ++dy)
                        for (int dx = 0; dx < scale; ++dx) put(img, gx + col * scale + dx, y + row * scale + dy, color);
    }
}

RgbImage renderAnnotations(const GrayImage& frame, std::span<const Annotation> annotations) {
    RgbImage out = toRgb(frame);
    for (const auto& a : annotations) {
        Rgb color = a.febrile ? kFebrile : a.in_zone ? kNormal : kOutside;
        drawBox(out, a.box, color, a.febrile ? 2 : 1);
        if (!a.temp) continue;
        constexpr int kScale = 2;
        int ty = static_cast<int>(std::lround(a.box.y())) - 8 * kScale;
        if (ty < 0) ty = static_cast<int>(std::lround(a.box.y())) + 3;
        drawText(out, static_cast<int>(std::lround(a.box.x())), ty, temperatureLabel(*a.temp), color, kScale);
    }
    return out;
}

}  // namespace ff::fever
