#include "freeflow/pipeline/align_report.hpp"

#include <cstdio>
#include <fstream>
#include <map>

#include "freeflow/errors.hpp"
#include "freeflow/sim/render.hpp"

namespace ff::pipeline {

namespace {

constexpr double kFeetPerMeter = 1.0 / 0.3048;

}  // namespace

std::vector<AlignmentErrorRow> alignmentErrors(const Frame& frame, const FrameResult& result,
                                               const sim::Scenario& scenario, const align::AffineOffset& manual) {
    std::map<int, std::string> truth;
    for (auto kind : {DetectionKind::Body, DetectionKind::Head, DetectionKind::Face})
        for (std::size_t i = 0; i < frame.detections.size() && i < result.ids.size(); ++i)
            if (frame.detections[i].kind == kind && result.ids[i] != track::kUntracked &&
                !frame.detections[i].truth_id.empty())
                truth.emplace(result.ids[i], frame.detections[i].truth_id);

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < scenario.people.size(); ++i) index[scenario.people[i].id] = i;

    const auto& rig = scenario.geometry;
    const double sx = rig.scaleX(), sy = rig.scaleY();
    std::vector<AlignmentErrorRow> rows;
    for (const auto& [id, pa] : result.alignment.persons) {
        auto t = truth.find(id);
        if (t == truth.end()) continue;
        auto idx = index.find(t->second);
        if (idx == index.end()) continue;
        const auto ht = sim::headTruth(rig, sim::poseAt(scenario, idx->second, frame.pair.timestamp));

        AlignmentErrorRow r;
        r.frame = frame.pair.seq;
        r.person_id = id;
        r.truth_id = t->second;
        r.distance_m = ht.distance;
        r.dynamic = pa.dynamic;
        auto err = [&](Point2 mapped, double& ex, double& ey) {
            ex = (ht.thermal.x - mapped.x) / sx;
            ey = (ht.thermal.y - mapped.y) / sy;
        };
        err({ht.visual.x * sx, ht.visual.y * sy}, r.x_before, r.y_before);
        err(align::manualOffsetUnmap(ht.visual, manual), r.x_manual, r.y_manual);
        err(pa.toThermal(ht.visual), r.x_dynamic, r.y_dynamic);
        rows.push_back(std::move(r));
    }
    return rows;
}

void writeAlignmentReport(const std::filesystem::path& path, std::span<const AlignmentErrorRow> rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "distance_ft,x_err_before,y_err_before,x_err_manual,y_err_manual,x_err_dynamic,y_err_dynamic\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", r.distance_m * kFeetPerMeter, r.x_before,
                      r.y_before, r.x_manual, r.y_manual, r.x_dynamic, r.y_dynamic);
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace ff::pipeline
