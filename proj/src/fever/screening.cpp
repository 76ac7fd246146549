#include "freeflow/fever/screening.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ff::fever {

const char* toString(RegionPriority p) {
    switch (p) {
        case RegionPriority::EyeForehead: return "eye_forehead";
        case RegionPriority::Face: return "face";
        case RegionPriority::Head: return "head";
    }
    return "?";
}

RegionPriority priorityFromString(const std::string& s) {
    if (s == "eye_forehead") return RegionPriority::EyeForehead;
    if (s == "face") return RegionPriority::Face;
    if (s == "head") return RegionPriority::Head;
    throw std::invalid_argument("unknown region priority '" + s + "'");
}

const char* toString(AlertReason r) {
    switch (r) {
        case AlertReason::First: return "first";
        case AlertReason::HigherPriority: return "higher_priority";
        case AlertReason::Delta: return "delta";
    }
    return "?";
}

void ScreeningConfig::validate() const {
    if (!(zone_min < zone_max)) throw std::invalid_argument("screening: capture zone min must be below max");
    if (!(plausible_min < plausible_max)) throw std::invalid_argument("screening: plausible range min must be below max");
    if (!(fever_threshold > plausible_min && fever_threshold < plausible_max))
        throw std::invalid_argument("screening: fever threshold must lie inside the plausible range");
    if (min_readings < 1) throw std::invalid_argument("screening: min_readings must be at least 1");
    if (!(delta_realert >= 0)) throw std::invalid_argument("screening: delta_realert must be non-negative");
    if (!(cache_ttl > 0)) throw std::invalid_argument("screening: cache_ttl must be positive");
    for (const auto* a : {&eye_area, &face_area, &head_area})
        if (!(a->width > 0 && a->width <= 1 && a->height > 0 && a->height <= 1))
            throw std::invalid_argument("screening: sampling fractions must lie in (0, 1]");
    if (!(visual_focal > 0 && head_height_m > 0 && face_height_m > 0 && body_height_m > 0 && body_width_m > 0))
        throw std::invalid_argument("screening: distance heuristic constants must be positive");
}

std::map<int, PersonObservation> groupDetections(std::span<const Detection> dets, std::span<const int> ids) {
    if (dets.size() != ids.size()) throw std::invalid_argument("groupDetections: one ID per detection required");
    std::map<int, PersonObservation> out;
    std::map<std::pair<int, DetectionKind>, double> conf;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (ids[i] < 0) continue;
        auto key = std::make_pair(ids[i], dets[i].kind);
        auto it = conf.find(key);
        if (it != conf.end() && it->second >= dets[i].confidence) continue;
        conf[key] = dets[i].confidence;
        auto& p = out[ids[i]];
        p.id = ids[i];
        switch (dets[i].kind) {
            case DetectionKind::Body: p.body = dets[i].bbox; break;
            case DetectionKind::Face: p.face = dets[i].bbox; break;
            case DetectionKind::Head: p.head = dets[i].bbox; break;
            case DetectionKind::Eye: p.eye = dets[i].bbox; break;
        }
    }
    return out;
}

namespace {

BBox central(const BBox& b, const SamplingArea& a) {
    double w = b.w() * a.width, h = b.h() * a.height;
    return {b.x() + 0.5 * (b.w() - w), b.y() + 0.5 * (b.h() - h), w, h};
}

}  // namespace

std::optional<std::pair<RegionPriority, BBox>> samplingArea(const PersonObservation& p, const ScreeningConfig& c) {
    if (p.eye) {
        const BBox& e = *p.eye;
        double w = e.w() * c.eye_area.width, h = e.w() * c.eye_area.height;
        double eye_line = e.y() + 0.5 * e.h();
        return std::make_pair(RegionPriority::EyeForehead, BBox(e.x() + 0.5 * (e.w() - w), eye_line - h, w, h));
    }
    if (p.face) return std::make_pair(RegionPriority::Face, central(*p.face, c.face_area));
    if (p.head) return std::make_pair(RegionPriority::Head, central(*p.head, c.head_area));
    return std::nullopt;
}

PixelRect thermalPixels(const BBox& mapped, int width, int height) {
    PixelRect r = PixelRect::covering(mapped, width, height);
    if (!r.empty()) return r;
    Point2 m = mapped.center();
    int x = static_cast<int>(std::floor(m.x)), y = static_cast<int>(std::floor(m.y));
    if (x < 0 || y < 0 || x >= width || y >= height) return {};
    return {x, y, x + 1, y + 1};
}

std::optional<Measurement> measureTemperature(const PersonObservation& p, const align::PersonAlignment& alignment,
                                              const ThermalGrid& thermal, double offset, const ScreeningConfig& c) {
    auto area = samplingArea(p, c);
    if (!area) return std::nullopt;
    PixelRect px = thermalPixels(alignment.mapBox(area->second), thermal.width(), thermal.height());
    if (px.empty()) return std::nullopt;
    float best = thermal(px.x0, px.y0);
    for (int y = px.y0; y < px.y1; ++y)
        for (int x = px.x0; x < px.x1; ++x) best = std::max(best, thermal(x, y));
    double raw = best + offset;
    if (!(raw >= c.plausible_min && raw <= c.plausible_max)) return std::nullopt;
    return Measurement{raw, area->first, px};
}

std::optional<DistanceEstimate> estimateDistance(const PersonObservation& p, const align::PersonAlignment* a,
                                                 const ScreeningConfig& c) {
    if (a && a->distance) return DistanceEstimate{*a->distance, true};
    if (p.head) return DistanceEstimate{c.visual_focal * c.head_height_m / p.head->h(), false};
    if (p.face) return DistanceEstimate{c.visual_focal * c.face_height_m / p.face->h(), false};
    if (p.body) {
        const BBox& b = *p.body;
        constexpr double kEdge = 0.5;
        if (b.y() > kEdge && b.bottom() < c.visual_height - kEdge)
            return DistanceEstimate{c.visual_focal * c.body_height_m / b.h(), false};
        if (b.x() > kEdge && b.right() < c.visual_width - kEdge)
            return DistanceEstimate{c.visual_focal * c.body_width_m / b.w(), false};
    }
    return std::nullopt;
}

FrameOutcome processFrame(const FrameInput& in, ScreeningState& state, const ScreeningConfig& c) {
    FrameOutcome out;
    if (in.seq <= state.last_seq) {
        out.discarded = true;
        return out;
    }
    state.last_seq = in.seq;

    for (const auto& [id, p] : groupDetections(in.detections, in.ids)) {
        const BBox& anchor = p.body ? *p.body : p.head ? *p.head : p.face ? *p.face : *p.eye;
        if (c.roi && !c.roi->contains(anchor.center())) continue;

        const align::PersonAlignment* pa = in.alignment ? in.alignment->find(id) : nullptr;
        auto dist = estimateDistance(p, pa, c);
        Annotation ann{id, anchor, std::nullopt, false, false};
        ann.in_zone = dist && dist->meters >= c.zone_min && dist->meters <= c.zone_max;
        out.annotations.push_back(ann);
        if (!ann.in_zone || !pa || !in.thermal) continue;

        auto m = measureTemperature(p, *pa, *in.thermal, in.offset, c);
        if (!m) continue;
        Reading r;
        r.person_id = id;
        r.frame_seq = in.seq;
        r.priority = m->priority;
        r.raw_temp = m->raw;
        r.corrected_temp = in.corrector ? in.corrector(m->raw, dist->meters) : m->raw;
        r.distance = dist->meters;
        r.low_confidence = pa->low_confidence || !dist->from_disparity;

        auto& rec = state.records[id];
        rec.person_id = id;
        rec.entered_zone = true;
        rec.readings.push_back(r);
        out.readings.push_back(r);
    }

    for (const auto& a : out.annotations) {
        auto it = state.records.find(a.person_id);
        if (it != state.records.end()) it->second.last_seen = in.time;
    }
    std::erase_if(state.records, [&](const auto& kv) { return in.time - kv.second.last_seen > c.cache_ttl; });
    return out;
}

std::vector<Alert> refineAndAlert(ScreeningState& state, const ScreeningConfig& c, int frame_seq) {
    std::vector<Alert> alerts;
    for (auto& [id, rec] : state.records) {
        if (static_cast<int>(rec.readings.size()) < c.min_readings) continue;
        RegionPriority best = rec.readings.front().priority;
        for (const auto& r : rec.readings) best = std::min(best, r.priority);
        double reported = -1e300;
        for (const auto& r : rec.readings)
            if (r.priority == best) reported = std::max(reported, r.corrected_temp);
        rec.best_priority_seen = best;
        rec.reported_temp = reported;

        if (reported < c.fever_threshold) continue;
        std::optional<AlertReason> reason;
        if (!rec.alerted_temp)
            reason = AlertReason::First;
        else if (best < *rec.alerted_priority)
            reason = AlertReason::HigherPriority;
        else if (reported - *rec.alerted_temp >= c.delta_realert - 1e-9)
            reason = AlertReason::Delta;
        if (!reason) continue;
        rec.alerted_temp = reported;
        rec.alerted_priority = best;
        alerts.push_back({id, reported, best, frame_seq, *reason});
    }
    return alerts;
}

void labelAnnotations(std::vector<Annotation>& annotations, const ScreeningState& state, const ScreeningConfig& c) {
    for (auto& a : annotations) {
        auto it = state.records.find(a.person_id);
        if (it == state.records.end() || it->second.readings.empty()) continue;
        const auto& rec = it->second;
        a.temp = rec.reported_temp ? *rec.reported_temp : rec.readings.back().corrected_temp;
        a.febrile = rec.reported_temp && *rec.reported_temp >= c.fever_threshold;
    }
}

}  // namespace ff::fever
