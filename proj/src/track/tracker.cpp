#include "freeflow/track/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace ff::track {

namespace {

struct Candidate {
    double score;
    std::size_t det;
    int id;
};

/// Greedy one-to-one assignment: best score first, then lowest detection index, then lowest ID.
std::vector<std::pair<std::size_t, int>> assignGreedy(std::vector<Candidate> c) {
    std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.score, a.det, a.id) < std::tie(a.score, b.det, b.id);
    });
    std::vector<std::pair<std::size_t, int>> out;
    std::vector<std::size_t> used_det;
    std::vector<int> used_id;
    for (const auto& x : c) {
        if (std::find(used_det.begin(), used_det.end(), x.det) != used_det.end()) continue;
        if (std::find(used_id.begin(), used_id.end(), x.id) != used_id.end()) continue;
        used_det.push_back(x.det);
        used_id.push_back(x.id);
        out.emplace_back(x.det, x.id);
    }
    return out;
}

/// Detection of `kind` that contains the center of `inner` and covers at least kMinCover of it.
/// Parts sit at the top of their own body, so among bodies the one whose top edge is nearest
/// the part's top (relative to body height) wins; otherwise, and on ties, the smallest box, then
/// the lowest index. The cover test stops a small, distant box from claiming parts of a nearer person.
constexpr double kMinCover = 0.8;

bool contains(const BBox& outer, const BBox& inner) {
    return outer.contains(inner.center()) && intersectionArea(outer, inner) >= kMinCover * inner.area();
}

std::optional<std::size_t> enclosing(std::span<const Detection> dets, DetectionKind kind, const BBox& inner) {
    auto key = [&](const BBox& b) {
        double top = kind == DetectionKind::Body ? std::abs(inner.y() - b.y()) / b.h() : 0.0;
        return std::pair{top, b.area()};
    };
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const BBox& b = dets[i].bbox;
        if (dets[i].kind != kind || !contains(b, inner)) continue;
        if (!best || key(b) < key(dets[*best].bbox)) best = i;
    }
    return best;
}

}  // namespace

void TrackConfig::validate() const {
    auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!unit(iou_threshold) || !unit(body_similarity_threshold) || !unit(face_match_threshold))
        throw std::invalid_argument("track config: thresholds must lie in (0, 1]");
    if (!(ttl > 0.0)) throw std::invalid_argument("track config: ttl must be positive");
}

const TrackedPerson* TrackCache::find(int id) const {
    auto it = persons_.find(id);
    return it == persons_.end() ? nullptr : &it->second;
}

std::vector<int> assignIds(std::span<const Detection> dets, TrackCache& cache, const TrackConfig& config, double now) {
    std::vector<int> ids(dets.size(), kUntracked);

    // Pass 1: bodies.
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].kind != DetectionKind::Body) continue;
        for (const auto& [id, p] : cache.persons()) {
            if (!p.body_box || !p.body_appearance || dets[i].appearance.empty()) continue;
            double overlap = iou(dets[i].bbox, *p.body_box);
            double sim = similarity(dets[i].appearance, *p.body_appearance);
            if (overlap >= config.iou_threshold && sim >= config.body_similarity_threshold)
                cands.push_back({overlap * sim, i, id});
        }
    }
    for (auto [i, id] : assignGreedy(std::move(cands))) ids[i] = id;
    for (std::size_t i = 0; i < dets.size(); ++i)
        if (dets[i].kind == DetectionKind::Body && ids[i] == kUntracked) ids[i] = cache.newId();

    // Pass 2: faces. A face match wins over the enclosing body's ID.
    cands.clear();
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].kind != DetectionKind::Face) continue;
        for (const auto& [id, p] : cache.persons()) {
            if (!p.face_appearance || dets[i].appearance.empty()) continue;
            double sim = similarity(dets[i].appearance, *p.face_appearance);
            if (sim >= config.face_match_threshold) cands.push_back({sim, i, id});
        }
    }
    for (auto [i, id] : assignGreedy(std::move(cands))) ids[i] = id;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].kind != DetectionKind::Face) continue;
        auto body = enclosing(dets, DetectionKind::Body, dets[i].bbox);
        if (ids[i] != kUntracked) {
            // Overlapping people: keep the body that already carries this face's ID.
            for (std::size_t j = 0; j < dets.size(); ++j)
                if (dets[j].kind == DetectionKind::Body && ids[j] == ids[i] && contains(dets[j].bbox, dets[i].bbox))
                    body = j;
            if (body && ids[*body] != ids[i]) {
                // Another body already holding this ID loses it.
                for (std::size_t j = 0; j < dets.size(); ++j)
                    if (j != *body && dets[j].kind == DetectionKind::Body && ids[j] == ids[i]) ids[j] = cache.newId();
                ids[*body] = ids[i];
            }
        } else {
            ids[i] = body ? ids[*body] : cache.newId();
        }
    }

    // Pass 3: heads prefer the face they contain, then the body that contains them.
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].kind != DetectionKind::Head) continue;
        std::optional<std::size_t> face;
        for (std::size_t j = 0; j < dets.size(); ++j)
            if (dets[j].kind == DetectionKind::Face && contains(dets[i].bbox, dets[j].bbox)) {
                face = j;
                break;
            }
        auto body = enclosing(dets, DetectionKind::Body, dets[i].bbox);
        ids[i] = face ? ids[*face] : body ? ids[*body] : cache.newId();
    }

    // Eyes ride along with whatever encloses them.
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].kind != DetectionKind::Eye) continue;
        for (auto kind : {DetectionKind::Face, DetectionKind::Head, DetectionKind::Body})
            if (auto j = enclosing(dets, kind, dets[i].bbox)) {
                ids[i] = ids[*j];
                break;
            }
    }

    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (ids[i] == kUntracked) continue;
        auto& p = cache.persons()[ids[i]];
        p.id = ids[i];
        p.last_seen = std::max(p.last_seen, now);
        const auto& d = dets[i];
        switch (d.kind) {
            case DetectionKind::Body:
                p.body_box = d.bbox;
                if (!d.appearance.empty()) p.body_appearance = d.appearance;
                break;
            case DetectionKind::Face:
                p.face_box = d.bbox;
                if (!d.appearance.empty()) p.face_appearance = d.appearance;
                break;
            case DetectionKind::Head: p.head_box = d.bbox; break;
            case DetectionKind::Eye: break;
        }
    }
    return ids;
}

std::vector<int> expireStale(TrackCache& cache, double now, const TrackConfig& config) {
    std::vector<int> removed;
    for (auto it = cache.persons().begin(); it != cache.persons().end();) {
        if (now - it->second.last_seen > config.ttl) {
            removed.push_back(it->first);
            it = cache.persons().erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

}  // namespace ff::track
