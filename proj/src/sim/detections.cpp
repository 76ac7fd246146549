#include "freeflow/sim/detections.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <stdexcept>

#include "freeflow/sim/render.hpp"

namespace ff::sim {

namespace {

constexpr std::array kPartOrder{DetectionKind::Body, DetectionKind::Head, DetectionKind::Face, DetectionKind::Eye};

struct Visibility {
    bool in_view = false;
    std::array<double, 4> coverage{};  ///< per kPartOrder entry, fraction hidden by nearer bodies
    PartBoxes parts;
};

Visibility visibility(const Scenario& s, std::size_t index, double t, bool occlusion) {
    const auto& rig = s.geometry;
    Visibility v;
    const PersonPose pose = poseAt(s, index, t);
    v.parts = projectParts(rig, pose);
    const Point2 hc = v.parts.head.center();
    v.in_view = pose.z > 0.3 && hc.x >= 0.0 && hc.y >= 0.0 && hc.x < rig.visual_width && hc.y < rig.visual_height;
    if (!occlusion || !v.in_view) return v;
    const std::array<const BBox*, 4> boxes{&v.parts.body, &v.parts.head, &v.parts.face, &v.parts.eye};
    for (std::size_t j = 0; j < s.people.size(); ++j) {
        if (j == index || !s.people[j].activeAt(t)) continue;
        const PersonPose other = poseAt(s, j, t);
        if (other.z >= pose.z) continue;
        const BBox occluder = projectParts(rig, other).body;
        for (std::size_t k = 0; k < boxes.size(); ++k)
            v.coverage[k] = std::max(v.coverage[k], intersectionArea(*boxes[k], occluder) / boxes[k]->area());
    }
    return v;
}

std::optional<BBox> clipToFrame(const BBox& b, const CameraRig& rig) {
    const double x0 = std::max(0.0, b.x());
    const double y0 = std::max(0.0, b.y());
    const double x1 = std::min<double>(rig.visual_width, b.right());
    const double y1 = std::min<double>(rig.visual_height, b.bottom());
    if (x1 - x0 < 2.0 || y1 - y0 < 2.0) return std::nullopt;
    return BBox::fromCorners(x0, y0, x1, y1);
}

}  // namespace

std::vector<Detection> emitDetections(const Scenario& s, int seq, const DetectionNoise& noise) {
    if (seq < 0 || seq >= s.frameCount()) throw std::out_of_range("emitDetections: frame index out of range");
    const double t = s.frameTime(seq);
    std::mt19937_64 rng(streamSeed(s.rng_seed, 2, static_cast<std::uint64_t>(seq)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Detection> out;
    for (std::size_t i = 0; i < s.people.size(); ++i) {
        const auto& person = s.people[i];
        if (!person.activeAt(t)) continue;
        const Visibility vis = visibility(s, i, t, noise.occlusion);

        // fixed draw count per active person keeps the stream aligned across configurations
        std::array<double, 4> miss_draw{};
        for (double& d : miss_draw) d = unit(rng);
        std::array<std::array<double, 4>, 4> jitter{};
        for (auto& j : jitter)
            for (double& d : j) d = gauss(rng);
        std::array<std::vector<double>, 4> app_noise;
        for (auto& a : app_noise) {
            a.resize(person.appearance.dim());
            for (double& d : a) d = gauss(rng);
        }
        if (!vis.in_view) continue;

        const std::array<double, 4> miss{noise.miss_body, noise.miss_head, noise.miss_face, noise.miss_eye};
        const std::array<const BBox*, 4> boxes{&vis.parts.body, &vis.parts.head, &vis.parts.face, &vis.parts.eye};
        bool face_present = false;
        for (std::size_t k = 0; k < kPartOrder.size(); ++k) {
            const DetectionKind kind = kPartOrder[k];
            if (vis.coverage[k] >= 0.5) continue;
            if (miss_draw[k] < miss[k]) continue;
            if (kind == DetectionKind::Face && person.accessories.mask && person.accessories.hat) continue;
            if (kind == DetectionKind::Eye && (person.accessories.glasses || !face_present)) continue;
            const BBox& truth = *boxes[k];
            if (kind != DetectionKind::Body) {
                const Point2 c = truth.center();
                if (c.x < 0 || c.y < 0 || c.x >= s.geometry.visual_width || c.y >= s.geometry.visual_height) continue;
            }
            const double sj = noise.bbox_jitter_px;
            const double w = std::max(2.0, truth.w() + sj * jitter[k][2]);
            const double h = std::max(2.0, truth.h() + sj * jitter[k][3]);
            auto clipped = clipToFrame(BBox(truth.x() + sj * jitter[k][0], truth.y() + sj * jitter[k][1], w, h), s.geometry);
            if (!clipped) continue;

            std::vector<double> app(person.appearance.values().begin(), person.appearance.values().end());
            for (std::size_t d = 0; d < app.size(); ++d) app[d] += noise.appearance_sigma * app_noise[k][d];

            Detection det;
            det.frame_seq = seq;
            det.kind = kind;
            det.bbox = *clipped;
            det.confidence = 0.95 - 0.3 * vis.coverage[k];
            det.appearance = AppearanceVector(std::move(app));
            det.truth_id = person.id;
            out.push_back(std::move(det));
            if (kind == DetectionKind::Face) face_present = true;
        }
    }
    return out;
}

std::vector<GroundTruthRow> groundTruth(const Scenario& s, int seq) {
    if (seq < 0 || seq >= s.frameCount()) throw std::out_of_range("groundTruth: frame index out of range");
    const double t = s.frameTime(seq);
    std::vector<GroundTruthRow> rows;
    for (std::size_t i = 0; i < s.people.size(); ++i) {
        const auto& p = s.people[i];
        if (!p.activeAt(t)) continue;
        const Visibility vis = visibility(s, i, t, s.detection_noise.occlusion);
        const bool hidden = vis.coverage[0] >= 0.5 && vis.coverage[1] >= 0.5;
        rows.push_back({seq, p.id, p.core_temp, poseAt(s, i, t).z, vis.in_view && !hidden});
    }
    return rows;
}

}  // namespace ff::sim
