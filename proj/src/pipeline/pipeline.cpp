#include "freeflow/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>

#include "freeflow/errors.hpp"
#include "freeflow/fever/annotate.hpp"

namespace ff::pipeline {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double msSince(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename T>
void read(const json& j, const char* key, T& field) {
    if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

json boxJson(const BBox& b) { return json::array({b.x(), b.y(), b.w(), b.h()}); }

BBox boxFromJson(const json& j) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != 4) throw std::invalid_argument("box must be [x, y, w, h]");
    return {v[0], v[1], v[2], v[3]};
}

}  // namespace

align::StereoGeometry stereoOf(const sim::CameraRig& rig) {
    return {rig.visual_width, rig.visual_height, rig.thermal_width, rig.thermal_height, rig.thermal_focal, rig.baseline};
}

align::AffineOffset manualOffsetFor(const PipelineConfig& c, const sim::CameraRig& rig) {
    if (c.align_manual_set) return c.align.manual;
    return align::AlignConfig::forGeometry(stereoOf(rig), c.manual_calibration_distance).manual;
}

void PipelineConfig::validate() const {
    if (!(manual_calibration_distance > 0)) throw std::invalid_argument("pipeline: calibration distance must be positive");
    track.validate();
    screening.validate();
    calibration.validate();
    align.manual.validate();
    if (threads && *threads < 0) throw std::invalid_argument("pipeline: threads must be non-negative");
}

json toJson(const PipelineConfig& c) {
    json a{{"visual_tau", c.align.visual_tau},
           {"thermal_tau", c.align.thermal_tau},
           {"background_window", c.align.background_window},
           {"background_min_frames", c.align.background_min_frames},
           {"fast_threshold", c.align.features.fast_threshold},
           {"max_features", c.align.features.max_features},
           {"ratio", c.align.matching.ratio},
           {"max_hamming", c.align.matching.max_distance},
           {"ransac_iterations", c.align.ransac.max_iterations},
           {"ransac_threshold_px", c.align.ransac.inlier_threshold},
           {"ransac_confidence", c.align.ransac.confidence},
           {"region_margin", c.align.region_margin},
           {"search_margin_x", c.align.search_margin_x},
           {"search_margin_y", c.align.search_margin_y},
           {"min_inliers", c.align.min_inliers},
           {"prior_tolerance", c.align.prior_tolerance},
           {"prior_tolerance_px", c.align.prior_tolerance_px},
           {"depth_min_inliers", c.align.depth_min_inliers},
           {"depth_prior_agreement", c.align.depth_prior_agreement}};
    if (c.align_manual_set)
        a["manual_offset"] = {{"t_x", c.align.manual.t_x}, {"t_y", c.align.manual.t_y},
                              {"s_x", c.align.manual.s_x}, {"s_y", c.align.manual.s_y}};
    const auto& s = c.screening;
    json sc{{"roi", s.roi ? boxJson(*s.roi) : json(nullptr)},
            {"capture_zone_m", {s.zone_min, s.zone_max}},
            {"fever_threshold_c", s.fever_threshold},
            {"plausible_range_c", {s.plausible_min, s.plausible_max}},
            {"min_readings", s.min_readings},
            {"delta_realert_c", s.delta_realert},
            {"cache_ttl_s", s.cache_ttl},
            {"eye_area", {s.eye_area.width, s.eye_area.height}},
            {"face_area", {s.face_area.width, s.face_area.height}},
            {"head_area", {s.head_area.width, s.head_area.height}}};
    json cal{{"enabled", c.calibration_enabled},
             {"roi", boxJson(c.calibration.roi)},
             {"reference_c", c.calibration.reference_temp},
             {"k_p", c.calibration.k_p},
             {"settling_period_s", c.calibration.settling_period},
             {"error_threshold_c", c.calibration.error_threshold}};
    json tr{{"iou_threshold", c.track.iou_threshold},
            {"body_similarity_threshold", c.track.body_similarity_threshold},
            {"face_match_threshold", c.track.face_match_threshold},
            {"ttl_s", c.track.ttl}};
    return json{{"manual_calibration_distance_m", c.manual_calibration_distance},
                {"align", a},
                {"track", tr},
                {"screening", sc},
                {"calibration", cal},
                {"compensation_model", c.compensation_model ? json(*c.compensation_model) : json(nullptr)},
                {"write_annotated", c.write_annotated},
                {"record_timing", c.record_timing},
                {"threads", c.threads ? json(*c.threads) : json(nullptr)},
                {"seed", c.seed}};
}

PipelineConfig pipelineConfigFromJson(const json& j) {
    PipelineConfig c;
    try {
        read(j, "manual_calibration_distance_m", c.manual_calibration_distance);
        if (j.contains("align")) {
            const auto& a = j.at("align");
            read(a, "visual_tau", c.align.visual_tau);
            read(a, "thermal_tau", c.align.thermal_tau);
            read(a, "background_window", c.align.background_window);
            read(a, "background_min_frames", c.align.background_min_frames);
            read(a, "fast_threshold", c.align.features.fast_threshold);
            read(a, "max_features", c.align.features.max_features);
            read(a, "ratio", c.align.matching.ratio);
            read(a, "max_hamming", c.align.matching.max_distance);
            read(a, "ransac_iterations", c.align.ransac.max_iterations);
            read(a, "ransac_threshold_px", c.align.ransac.inlier_threshold);
            read(a, "ransac_confidence", c.align.ransac.confidence);
            read(a, "region_margin", c.align.region_margin);
            read(a, "search_margin_x", c.align.search_margin_x);
            read(a, "search_margin_y", c.align.search_margin_y);
            read(a, "min_inliers", c.align.min_inliers);
            read(a, "prior_tolerance", c.align.prior_tolerance);
            read(a, "prior_tolerance_px", c.align.prior_tolerance_px);
            read(a, "depth_min_inliers", c.align.depth_min_inliers);
            read(a, "depth_prior_agreement", c.align.depth_prior_agreement);
            if (a.contains("manual_offset")) {
                const auto& m = a.at("manual_offset");
                read(m, "t_x", c.align.manual.t_x);
                read(m, "t_y", c.align.manual.t_y);
                read(m, "s_x", c.align.manual.s_x);
                read(m, "s_y", c.align.manual.s_y);
                c.align_manual_set = true;
            }
        }
        if (j.contains("track")) {
            const auto& t = j.at("track");
            read(t, "iou_threshold", c.track.iou_threshold);
            read(t, "body_similarity_threshold", c.track.body_similarity_threshold);
            read(t, "face_match_threshold", c.track.face_match_threshold);
            read(t, "ttl_s", c.track.ttl);
        }
        if (j.contains("screening")) {
            const auto& s = j.at("screening");
            auto& o = c.screening;
            if (s.contains("roi") && !s.at("roi").is_null()) o.roi = boxFromJson(s.at("roi"));
            auto pair = [&](const char* key, double& lo, double& hi) {
                if (!s.contains(key)) return;
                auto v = s.at(key).get<std::vector<double>>();
                if (v.size() != 2) throw std::invalid_argument(std::string(key) + " must have two values");
                lo = v[0];
                hi = v[1];
            };
            pair("capture_zone_m", o.zone_min, o.zone_max);
            pair("plausible_range_c", o.plausible_min, o.plausible_max);
            pair("eye_area", o.eye_area.width, o.eye_area.height);
            pair("face_area", o.face_area.width, o.face_area.height);
            pair("head_area", o.head_area.width, o.head_area.height);
            read(s, "fever_threshold_c", o.fever_threshold);
            read(s, "min_readings", o.min_readings);
            read(s, "delta_realert_c", o.delta_realert);
            read(s, "cache_ttl_s", o.cache_ttl);
        }
        if (j.contains("calibration")) {
            const auto& k = j.at("calibration");
            read(k, "enabled", c.calibration_enabled);
            if (k.contains("roi")) c.calibration.roi = boxFromJson(k.at("roi"));
            read(k, "reference_c", c.calibration.reference_temp);
            read(k, "k_p", c.calibration.k_p);
            read(k, "settling_period_s", c.calibration.settling_period);
            read(k, "error_threshold_c", c.calibration.error_threshold);
        }
        if (j.contains("compensation_model") && !j.at("compensation_model").is_null())
            c.compensation_model = j.at("compensation_model").get<std::string>();
        read(j, "write_annotated", c.write_annotated);
        read(j, "record_timing", c.record_timing);
        if (j.contains("threads") && !j.at("threads").is_null()) c.threads = j.at("threads").get<int>();
        read(j, "seed", c.seed);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

int resolveThreads(const PipelineConfig& c) {
    if (c.threads) return *c.threads;
    if (const char* env = std::getenv("F3S_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0 && v <= 256) return static_cast<int>(v);
    }
    return 0;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

namespace {

void writeReadings(const std::filesystem::path& path, const std::vector<fever::Reading>& readings) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw DataError("cannot write " + path.string());
    std::fprintf(f, "frame,person_id,priority,raw_c,corrected_c,distance_m,low_confidence\n");
    for (const auto& r : readings)
        std::fprintf(f, "%d,%d,%s,%.4f,%.4f,%.4f,%d\n", r.frame_seq, r.person_id, fever::toString(r.priority), r.raw_temp,
                     r.corrected_temp, r.distance, r.low_confidence ? 1 : 0);
    std::fclose(f);
}

void writeReadingsWithTruth(const std::filesystem::path& path, const std::vector<fever::Reading>& readings,
                            const std::map<int, std::string>& truth_of_track,
                            const std::vector<sim::GroundTruthRow>& truth) {
    std::map<std::pair<int, std::string>, const sim::GroundTruthRow*> index;
    for (const auto& r : truth) index[{r.frame, r.person_id}] = &r;
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw DataError("cannot write " + path.string());
    std::fprintf(f, "frame,person_id,truth_id,priority,raw_c,corrected_c,distance_m,true_distance_m,core_temp_c\n");
    for (const auto& r : readings) {
        auto t = truth_of_track.find(r.person_id);
        if (t == truth_of_track.end()) continue;
        auto g = index.find({r.frame_seq, t->second});
        if (g == index.end()) continue;
        std::fprintf(f, "%d,%d,%s,%s,%.4f,%.4f,%.4f,%.4f,%.4f\n", r.frame_seq, r.person_id, t->second.c_str(),
                     fever::toString(r.priority), r.raw_temp, r.corrected_temp, r.distance, g->second->distance_m,
                     g->second->core_temp_c);
    }
    std::fclose(f);
}

void writeMetrics(const std::filesystem::path& path, const RunSummary& s, bool record_timing) {
    json j;
    if (s.metrics) {
        j = toJson(*s.metrics);
    } else {
        j = json{{"tp", nullptr}, {"fp", nullptr}, {"tn", nullptr}, {"fn", nullptr},
                 {"sensitivity", nullptr}, {"specificity", nullptr}, {"vacuous_sensitivity", nullptr}};
    }
    if (record_timing) {
        j["fps"] = s.fps;
        j["latency_ms"] = {{"p50", s.latency_p50}, {"p95", s.latency_p95}};
    } else {
        j["fps"] = nullptr;
        j["latency_ms"] = {{"p50", nullptr}, {"p95", nullptr}};
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void writeAnnotated(const std::filesystem::path& path, const fever::RgbImage& img) {
    GrayImage r(img.width(), img.height()), g(img.width(), img.height()), b(img.width(), img.height());
    for (std::size_t i = 0; i < img.data().size(); ++i) {
        r.data()[i] = img.data()[i].r;
        g.data()[i] = img.data()[i].g;
        b.data()[i] = img.data()[i].b;
    }
    sim::writePpm(path, r, g, b);
}

/// Alignment region per tracked person (body box, else head, else face) with a box-height depth prior.
std::vector<align::PersonRegion> regionsOf(const std::map<int, fever::PersonObservation>& people,
                                           const fever::ScreeningConfig& sc) {
    std::vector<align::PersonRegion> out;
    for (const auto& [id, p] : people) {
        std::optional<double> prior;
        if (auto d = fever::estimateDistance(p, nullptr, sc)) prior = d->meters;
        if (p.body)
            out.push_back({id, *p.body, prior, {}});
        else if (p.head)
            out.push_back({id, *p.head, prior, {}});
        else if (p.face)
            out.push_back({id, *p.face, prior, {}});
    }
    for (auto& r : out)
        for (const auto& o : out)
            if (o.id != r.id && o.distance_prior && r.distance_prior && *o.distance_prior < *r.distance_prior &&
                intersectionArea(o.box, r.box) > 0)
                r.occluders.push_back(o.box);
    return out;
}

}  // namespace

RunSummary runPipeline(const FrameSource& source, const PipelineConfig& config, const compensate::MLP* model,
                       const std::optional<std::filesystem::path>& out_dir, const FrameObserver& observer) {
    config.validate();
    const sim::CameraRig rig = source.geometry();
    const align::StereoGeometry geometry = stereoOf(rig);
    align::AlignConfig acfg = config.align;
    acfg.manual = manualOffsetFor(config, rig);
    fever::ScreeningConfig scfg = config.screening;
    scfg.visual_focal = rig.visual_focal;
    scfg.visual_width = rig.visual_width;
    scfg.visual_height = rig.visual_height;

    align::AlignmentState align_state(geometry, acfg);
    track::TrackCache cache;
    fever::ScreeningState screen_state;
    autocal::CalibState calib(config.calibration);

    const int threads = resolveThreads(config);
    fever::Corrector corrector;
    if (model)
        corrector = [&, model](double raw, double distance) {
            return compensate::correctTemperature(model, raw, distance, scfg.plausible_min, scfg.plausible_max).value;
        };

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        if (config.write_annotated) std::filesystem::create_directories(*out_dir / "annotated");
    }

    RunSummary summary;
    summary.threads = threads;
    std::map<int, std::map<std::string, int>> votes;
    std::vector<double> totals;

    const int n = source.frameCount();
    const auto run_start = Clock::now();
    std::future<Frame> next;
    if (threads > 0 && n > 0) next = std::async(std::launch::async, [&] { return source.frame(0); });

    for (int seq = 0; seq < n; ++seq) {
        Frame frame = threads > 0 ? next.get() : source.frame(seq);
        if (threads > 0 && seq + 1 < n) next = std::async(std::launch::async, [&, s = seq + 1] { return source.frame(s); });

        const auto t0 = Clock::now();
        FrameResult result;
        result.frame_seq = frame.pair.seq;
        const double now = frame.pair.timestamp;

        auto t = Clock::now();
        auto ids = track::assignIds(frame.detections, cache, config.track, now);
        track::expireStale(cache, now, config.track);
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] != track::kUntracked && !frame.detections[i].truth_id.empty())
                ++votes[ids[i]][frame.detections[i].truth_id];
        result.ids = ids;
        result.latency.track = msSince(t);

        t = Clock::now();
        auto people = fever::groupDetections(frame.detections, ids);
        auto regions = regionsOf(people, scfg);
        align::AlignmentResult alignment;
        if (align_state.warmedUp()) {
            alignment = align::alignPair(frame.pair.visual, frame.pair.thermal, regions, align_state,
                                         config.seed ^ (static_cast<std::uint64_t>(frame.pair.seq) << 20), threads);
        } else {
            for (const auto& r : regions) {
                align::PersonAlignment pa;
                pa.id = r.id;
                pa.fallback = acfg.manual;
                alignment.persons[r.id] = pa;
            }
        }
        result.alignment = alignment;
        std::vector<BBox> boxes;
        for (const auto& r : regions) boxes.push_back(r.box);
        align_state.update(frame.pair.visual, frame.pair.thermal, boxes);
        result.latency.align = msSince(t);

        t = Clock::now();
        if (config.calibration_enabled) {
            autocal::CalibSample cs;
            cs.time = now;
            cs.measured = autocal::monitorBlackBody(frame.pair.thermal, calib);
            cs.error = cs.measured - calib.config.reference_temp;
            cs.signal = autocal::controllerStep(calib, cs.measured, now);
            cs.offset_after = calib.correction_offset;
            summary.calibration.push_back(cs);
        }
        result.calibration_offset = calib.correction_offset;
        result.latency.calibrate = msSince(t);

        t = Clock::now();
        fever::FrameInput in;
        in.seq = frame.pair.seq;
        in.time = now;
        in.detections = frame.detections;
        in.ids = ids;
        in.alignment = &alignment;
        in.thermal = &frame.pair.thermal;
        in.offset = calib.correction_offset;
        in.corrector = corrector;
        auto outcome = fever::processFrame(in, screen_state, scfg);
        result.readings = outcome.readings;
        for (const auto& r : outcome.readings) {
            auto m = fever::measureTemperature(people.at(r.person_id), *alignment.find(r.person_id), frame.pair.thermal,
                                               in.offset, scfg);
            result.sampled.push_back(m ? m->pixels : PixelRect{});
        }
        result.alerts = fever::refineAndAlert(screen_state, scfg, frame.pair.seq);
        fever::labelAnnotations(outcome.annotations, screen_state, scfg);
        result.latency.screen = msSince(t);

        if (out_dir && config.write_annotated) {
            t = Clock::now();
            char name[32];
            std::snprintf(name, sizeof name, "frame_%06d.ppm", frame.pair.seq);
            result.annotation_path = (*out_dir / "annotated" / name).string();
            writeAnnotated(result.annotation_path, fever::renderAnnotations(frame.pair.visual, outcome.annotations));
            result.latency.render = msSince(t);
        }
        result.latency.total = msSince(t0);
        totals.push_back(result.latency.total);

        for (const auto& a : result.alerts) {
            std::string truth;
            if (auto v = votes.find(a.person_id); v != votes.end()) {
                int best = -1;
                for (const auto& [label, count] : v->second)
                    if (count > best) {
                        best = count;
                        truth = label;
                    }
            }
            summary.alerts.push_back({a, truth});
        }
        summary.readings.insert(summary.readings.end(), result.readings.begin(), result.readings.end());
        ++summary.frames;
        if (observer) observer(frame, result);
    }

    const double wall = std::chrono::duration<double>(Clock::now() - run_start).count();
    summary.fps = wall > 0 ? summary.frames / wall : 0.0;
    summary.latency_p50 = percentile(totals, 50);
    summary.latency_p95 = percentile(totals, 95);
    for (const auto& [id, v] : votes) {
        int best = -1;
        for (const auto& [label, count] : v)
            if (count > best) {
                best = count;
                summary.truth_of_track[id] = label;
            }
    }
    if (!source.groundTruth().empty())
        summary.metrics = evaluate(summary.alerts, source.groundTruth(), scfg.fever_threshold);

    if (out_dir) {
        writeReadings(*out_dir / "readings.csv", summary.readings);
        if (!source.groundTruth().empty())
            writeReadingsWithTruth(*out_dir / "readings_gt.csv", summary.readings, summary.truth_of_track,
                                   source.groundTruth());
        writeAlertsJsonl(*out_dir / "alerts.jsonl", summary.alerts);
        writeMetrics(*out_dir / "metrics.json", summary, config.record_timing);
    }
    return summary;
}

RunSummary runPipeline(const FrameSource& source, const PipelineConfig& config,
                       const std::optional<std::filesystem::path>& out_dir) {
    std::optional<compensate::MLP> model;
    if (config.compensation_model) {
        try {
            model = compensate::loadModel(*config.compensation_model);
        } catch (const std::exception& e) {
            throw DataError(e.what());
        }
    }
    return runPipeline(source, config, model ? &*model : nullptr, out_dir);
}

}  // namespace ff::pipeline
