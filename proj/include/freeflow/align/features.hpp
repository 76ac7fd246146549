#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "freeflow/domain.hpp"

namespace ff::align {

/// 256-bit binary descriptor.
using Descriptor = std::array<std::uint64_t, 4>;

int hammingDistance(const Descriptor& a, const Descriptor& b);

struct Feature {
    Point2 location;          ///< pixel center coordinates (x + 0.5, y + 0.5)
    double orientation = 0;   ///< radians, intensity-centroid angle
    double response = 0;      ///< FAST score
    Descriptor descriptor{};
};

struct FeatureParams {
    int fast_threshold = 20;
    int max_features = 500;
    int patch_radius = 15;  ///< orientation and sampling patch radius
};

/// FAST-9 corners inside `mask`, oriented by intensity centroid, with steered BRIEF descriptors.
/// Strongest first; ties broken by raster order. Throws when mask and image sizes differ.
std::vector<Feature> detectFeatures(const GrayImage& image, const Mask& mask, const FeatureParams& params = {});

/// FAST-9 segment test at (x, y); returns the corner score or 0 when not a corner.
int fastScore(const GrayImage& image, int x, int y, int threshold);

/// The fixed 256 sampling pairs (x1, y1, x2, y2) of the descriptor, within radius 13.
const std::array<std::array<std::int8_t, 4>, 256>& briefPattern();

struct Match {
    int index_a = 0;
    int index_b = 0;
    int distance = 0;
    bool operator==(const Match&) const = default;
};

struct MatchParams {
    double ratio = 0.8;
    int max_distance = 64;
};

/// Brute-force Hamming matching: keeps mutual best matches that pass the ratio test
/// (best < ratio * second best) and lie within max_distance. Sorted by index_a.
std::vector<Match> matchDescriptors(const std::vector<Descriptor>& a, const std::vector<Descriptor>& b,
                                    const MatchParams& params = {});
std::vector<Match> matchDescriptors(const std::vector<Feature>& a, const std::vector<Feature>& b,
                                    const MatchParams& params = {});

}  // namespace ff::align
