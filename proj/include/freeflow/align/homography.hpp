#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "freeflow/domain.hpp"

namespace ff::align {

struct Correspondence {
    Point2 src;
    Point2 dst;
};

/// Projective map with h(2,2) == 1 and RANSAC diagnostics.
struct Homography {
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    int inlier_count = 0;
    double mean_residual = 0.0;   ///< mean reprojection error over inliers, pixels
    std::vector<int> inliers;     ///< indices into the input correspondences

    Point2 apply(Point2 p) const;
};

Point2 applyHomography(const Eigen::Matrix3d& h, Point2 p);

struct RansacParams {
    int max_iterations = 1000;
    double inlier_threshold = 3.0;  ///< reprojection error, pixels
    double confidence = 0.99;
    std::uint64_t seed = 0;
};

class InsufficientCorrespondences : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Least-squares DLT on Hartley-normalized points, scaled so h(2,2) == 1.
/// Returns nullopt for degenerate input. Needs at least four correspondences.
std::optional<Eigen::Matrix3d> fitHomographyDlt(std::span<const Correspondence> pts);

/// RANSAC over 4-point hypotheses followed by a least-squares refit on the inliers.
/// Throws InsufficientCorrespondences (< 4 points) or DegenerateConfiguration.
Homography estimateHomography(std::span<const Correspondence> pts, const RansacParams& params = {});

}  // namespace ff::align
