#pragma once

#include <map>
#include <set>
#include <string>

#include "freeflow/sim/detections.hpp"
#include "freeflow/track/tracker.hpp"

namespace ff::test {

struct IdAudit {
    std::map<std::string, std::set<int>> ids_of;
    std::map<int, std::set<std::string>> people_of;
    int overlapping_frames = 0;
};

// Runs the tracker over noise-free detections and records which IDs each truth person received.
inline IdAudit auditIds(const sim::Scenario& s) {
    auto noise = sim::DetectionNoise::none();
    noise.occlusion = false;
    track::TrackCache cache;
    track::TrackConfig cfg;
    IdAudit audit;
    for (int seq = 0; seq < s.frameCount(); ++seq) {
        auto dets = sim::emitDetections(s, seq, noise);
        double now = s.frameTime(seq);
        auto ids = track::assignIds(dets, cache, cfg, now);
        bool overlap = false;
        for (const auto& a : dets)
            for (const auto& b : dets)
                if (a.kind == DetectionKind::Body && b.kind == DetectionKind::Body && a.truth_id < b.truth_id &&
                    intersectionArea(a.bbox, b.bbox) > 0)
                    overlap = true;
        audit.overlapping_frames += overlap;
        for (std::size_t i = 0; i < dets.size(); ++i) {
            if (ids[i] == track::kUntracked) continue;
            audit.ids_of[dets[i].truth_id].insert(ids[i]);
            audit.people_of[ids[i]].insert(dets[i].truth_id);
        }
        track::expireStale(cache, now, cfg);
    }
    return audit;
}

}  // namespace ff::test
