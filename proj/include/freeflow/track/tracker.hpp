#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "freeflow/detection.hpp"

namespace ff::track {

struct TrackConfig {
    double iou_threshold = 0.3;
    double body_similarity_threshold = 0.7;
    double face_match_threshold = 0.8;
    double ttl = 10.0;  ///< seconds

    /// Throws std::invalid_argument unless thresholds lie in (0, 1] and ttl > 0.
    void validate() const;
};

struct TrackedPerson {
    int id = 0;
    std::optional<BBox> body_box;
    std::optional<BBox> face_box;
    std::optional<BBox> head_box;
    std::optional<AppearanceVector> body_appearance;
    std::optional<AppearanceVector> face_appearance;
    double last_seen = 0.0;
};

/// Recently seen people keyed by tracking ID. IDs come from a monotone counter starting at 1.
class TrackCache {
public:
    const std::map<int, TrackedPerson>& persons() const { return persons_; }
    std::map<int, TrackedPerson>& persons() { return persons_; }
    std::size_t size() const { return persons_.size(); }
    const TrackedPerson* find(int id) const;
    int newId() { return next_id_++; }
    int peekNextId() const { return next_id_; }

private:
    std::map<int, TrackedPerson> persons_;
    int next_id_ = 1;
};

inline constexpr int kUntracked = -1;

/// Assigns tracking IDs to one frame's detections and refreshes the cache. Returns one ID per
/// detection (same order). Bodies match cached people on IoU and appearance; faces match on
/// appearance and override the ID of the body that contains them; heads take the ID of the face
/// they contain, else of the body containing them. Eyes inherit from the enclosing face, head or
/// body and stay kUntracked when nothing encloses them. A box contains another when it holds the
/// inner box's center and covers at least 80% of its area. Among bodies, the one whose top edge is
/// nearest the part's top (relative to body height) wins; otherwise the smallest box wins.
std::vector<int> assignIds(std::span<const Detection> detections, TrackCache& cache, const TrackConfig& config,
                           double now);

/// Drops people not seen for more than ttl seconds. Returns removed IDs in ascending order.
std::vector<int> expireStale(TrackCache& cache, double now, const TrackConfig& config);

}  // namespace ff::track
