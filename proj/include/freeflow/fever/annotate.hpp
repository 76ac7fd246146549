#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "freeflow/fever/screening.hpp"

namespace ff::fever {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

using RgbImage = Image<Rgb>;

RgbImage toRgb(const GrayImage& gray);

/// Draws each annotation's box (2 px thick and red when febrile, 1 px otherwise) and its
/// temperature label, e.g. "36.9C", into a color copy of the frame.
RgbImage renderAnnotations(const GrayImage& frame, std::span<const Annotation> annotations);

/// Formats a temperature label with one decimal and a trailing C.
std::string temperatureLabel(double celsius);

/// Blits text with the built-in 5x7 font (digits, '.', '-', 'C'); unknown characters are blank.
void drawText(RgbImage& img, int x, int y, const std::string& text, Rgb color, int scale = 2);

}  // namespace ff::fever
