#include "freeflow/sim/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ff::sim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream openIn(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open " + p.string());
    return in;
}

std::ofstream openOut(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
}

std::string framePath(const char* prefix, int seq, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06d.%s", prefix, seq, ext);
    return buf;
}

// PNM header token reader that skips '#' comments.
std::string pnmToken(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

json rigJson(const CameraRig& r) {
    return {{"visual_resolution", {r.visual_width, r.visual_height}},
            {"thermal_resolution", {r.thermal_width, r.thermal_height}},
            {"visual_focal", r.visual_focal},
            {"thermal_focal", r.thermal_focal},
            {"baseline", r.baseline}};
}

CameraRig rigFromJson(const json& j, CameraRig r = {}) {
    if (j.contains("visual_resolution")) {
        r.visual_width = j.at("visual_resolution").at(0).get<int>();
        r.visual_height = j.at("visual_resolution").at(1).get<int>();
    }
    if (j.contains("thermal_resolution")) {
        r.thermal_width = j.at("thermal_resolution").at(0).get<int>();
        r.thermal_height = j.at("thermal_resolution").at(1).get<int>();
    }
    r.visual_focal = j.value("visual_focal", r.visual_focal);
    r.thermal_focal = j.value("thermal_focal", r.thermal_focal);
    r.baseline = j.value("baseline", r.baseline);
    return r;
}

json noiseJson(const DetectionNoise& n) {
    return {{"miss_body", n.miss_body}, {"miss_head", n.miss_head},         {"miss_face", n.miss_face},
            {"miss_eye", n.miss_eye},   {"bbox_jitter_px", n.bbox_jitter_px}, {"appearance_sigma", n.appearance_sigma},
            {"occlusion", n.occlusion}};
}

DetectionNoise noiseFromJson(const json& j, DetectionNoise n = {}) {
    n.miss_body = j.value("miss_body", n.miss_body);
    n.miss_head = j.value("miss_head", n.miss_head);
    n.miss_face = j.value("miss_face", n.miss_face);
    n.miss_eye = j.value("miss_eye", n.miss_eye);
    n.bbox_jitter_px = j.value("bbox_jitter_px", n.bbox_jitter_px);
    n.appearance_sigma = j.value("appearance_sigma", n.appearance_sigma);
    n.occlusion = j.value("occlusion", n.occlusion);
    return n;
}

json driftJson(const DriftProfile& d) {
    json arr = json::array();
    for (const auto& [t, off] : d.steps) arr.push_back({t, off});
    return arr;
}

DriftProfile driftFromJson(const json& j) {
    DriftProfile d;
    for (const auto& e : j) d.steps.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
    return d;
}

json blackBodyJson(const BlackBodySpec& b) {
    return {{"roi", {b.roi.x(), b.roi.y(), b.roi.w(), b.roi.h()}}, {"reference_temp", b.reference_temp}};
}

BlackBodySpec blackBodyFromJson(const json& j, BlackBodySpec b = {}) {
    if (j.contains("roi")) {
        const auto& r = j.at("roi");
        b.roi = BBox(r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>());
    }
    b.reference_temp = j.value("reference_temp", b.reference_temp);
    return b;
}

std::vector<double> toVector(std::span<const double> v) { return {v.begin(), v.end()}; }

}  // namespace

fs::path visualFramePath(const fs::path& dir, int seq) { return dir / "frames" / framePath("visual", seq, "pgm"); }
fs::path thermalFramePath(const fs::path& dir, int seq) { return dir / "frames" / framePath("thermal", seq, "bin"); }

void writePgm(const fs::path& path, const GrayImage& img) {
    auto out = openOut(path);
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
    if (!out) throw DataError("write failed: " + path.string());
}

GrayImage readPgm(const fs::path& path) {
    auto in = openIn(path);
    if (pnmToken(in) != "P5") throw DataError("not a binary PGM: " + path.string());
    int w = 0, h = 0, maxv = 0;
    try {
        w = std::stoi(pnmToken(in));
        h = std::stoi(pnmToken(in));
        maxv = std::stoi(pnmToken(in));
    } catch (const std::exception&) {
        throw DataError("malformed PGM header: " + path.string());
    }
    if (w <= 0 || h <= 0 || maxv != 255) throw DataError("unsupported PGM: " + path.string());
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.data().data()), static_cast<std::streamsize>(img.data().size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data().size())) throw DataError("truncated PGM: " + path.string());
    return img;
}

void writePpm(const fs::path& path, const Image<std::uint8_t>& r, const Image<std::uint8_t>& g,
              const Image<std::uint8_t>& b) {
    auto out = openOut(path);
    out << "P6\n" << r.width() << ' ' << r.height() << "\n255\n";
    std::vector<char> buf(static_cast<std::size_t>(r.width()) * 3);
    for (int y = 0; y < r.height(); ++y) {
        for (int x = 0; x < r.width(); ++x) {
            buf[static_cast<std::size_t>(x) * 3] = static_cast<char>(r(x, y));
            buf[static_cast<std::size_t>(x) * 3 + 1] = static_cast<char>(g(x, y));
            buf[static_cast<std::size_t>(x) * 3 + 2] = static_cast<char>(b(x, y));
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    if (!out) throw DataError("write failed: " + path.string());
}

void writeThermal(const fs::path& path, const ThermalGrid& grid) {
    auto out = openOut(path);
    out << grid.width() << ' ' << grid.height() << '\n';
    std::vector<unsigned char> bytes(grid.data().size() * 4);
    for (std::size_t i = 0; i < grid.data().size(); ++i) {
        std::uint32_t u;
        std::memcpy(&u, &grid.data()[i], 4);
        for (int k = 0; k < 4; ++k) bytes[i * 4 + k] = static_cast<unsigned char>((u >> (8 * k)) & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

ThermalGrid readThermal(const fs::path& path) {
    auto in = openIn(path);
    std::string header;
    if (!std::getline(in, header)) throw DataError("missing thermal header: " + path.string());
    std::istringstream hs(header);
    int w = 0, h = 0;
    if (!(hs >> w >> h) || w <= 0 || h <= 0) throw DataError("malformed thermal header: " + path.string());
    ThermalGrid grid(w, h);
    std::vector<unsigned char> bytes(grid.data().size() * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw DataError("truncated thermal grid: " + path.string());
    for (std::size_t i = 0; i < grid.data().size(); ++i) {
        std::uint32_t u = 0;
        for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(bytes[i * 4 + k]) << (8 * k);
        std::memcpy(&grid.data()[i], &u, 4);
    }
    return grid;
}

json toJson(const Scenario& s) {
    json people = json::array();
    for (const auto& p : s.people) {
        json traj = json::array();
        for (const auto& w : p.trajectory) traj.push_back({w.t, w.x, w.z});
        people.push_back({{"id", p.id},
                          {"core_temp", p.core_temp},
                          {"stature", p.stature},
                          {"trajectory", traj},
                          {"accessories", {{"mask", p.accessories.mask}, {"glasses", p.accessories.glasses}, {"hat", p.accessories.hat}}},
                          {"appearance_identity", toVector(p.appearance.values())}});
    }
    return {{"rng_seed", s.rng_seed},
            {"duration", s.duration},
            {"frame_rate", s.frame_rate},
            {"geometry", rigJson(s.geometry)},
            {"ambient_temp", s.ambient_temp},
            {"attenuation_kappa", s.attenuation_kappa},
            {"thermal_noise_sigma", s.thermal_noise_sigma},
            {"drift", driftJson(s.drift)},
            {"black_body", blackBodyJson(s.black_body)},
            {"detection_noise", noiseJson(s.detection_noise)},
            {"people", people}};
}

Scenario scenarioFromJson(const json& j) {
    try {
        Scenario s;
        s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        s.duration = j.at("duration").get<double>();
        s.frame_rate = j.at("frame_rate").get<double>();
        s.geometry = rigFromJson(j.at("geometry"));
        s.ambient_temp = j.at("ambient_temp").get<double>();
        s.attenuation_kappa = j.at("attenuation_kappa").get<double>();
        s.thermal_noise_sigma = j.at("thermal_noise_sigma").get<double>();
        s.drift = driftFromJson(j.at("drift"));
        s.black_body = blackBodyFromJson(j.at("black_body"));
        s.detection_noise = noiseFromJson(j.at("detection_noise"));
        for (const auto& pj : j.at("people")) {
            PersonSpec p;
            p.id = pj.at("id").get<std::string>();
            p.core_temp = pj.at("core_temp").get<double>();
            p.stature = pj.at("stature").get<double>();
            for (const auto& w : pj.at("trajectory"))
                p.trajectory.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
            const auto& a = pj.at("accessories");
            p.accessories = {a.at("mask").get<bool>(), a.at("glasses").get<bool>(), a.at("hat").get<bool>()};
            p.appearance = AppearanceVector(pj.at("appearance_identity").get<std::vector<double>>());
            s.people.push_back(std::move(p));
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed scenario: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("invalid scenario: ") + e.what());
    }
}

json toJson(const Detection& d) {
    return {{"frame", d.frame_seq},
            {"kind", toString(d.kind)},
            {"bbox", {d.bbox.x(), d.bbox.y(), d.bbox.w(), d.bbox.h()}},
            {"confidence", d.confidence},
            {"appearance", toVector(d.appearance.values())},
            {"truth_id", d.truth_id}};
}

Detection detectionFromJson(const json& j) {
    Detection d;
    d.frame_seq = j.at("frame").get<int>();
    d.kind = detectionKindFromString(j.at("kind").get<std::string>());
    const auto& b = j.at("bbox");
    d.bbox = BBox(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>());
    d.confidence = j.at("confidence").get<double>();
    d.appearance = AppearanceVector(j.at("appearance").get<std::vector<double>>());
    d.truth_id = j.value("truth_id", std::string{});
    return d;
}

GeneratorConfig generatorConfigFromJson(const json& j) {
    GeneratorConfig c;
    try {
        c.people = j.value("people", c.people);
        c.febrile = j.value("febrile", c.febrile);
        c.febrile_min = j.value("febrile_min", c.febrile_min);
        c.febrile_max = j.value("febrile_max", c.febrile_max);
        c.normal_min = j.value("normal_min", c.normal_min);
        c.normal_max = j.value("normal_max", c.normal_max);
        c.warmup = j.value("warmup", c.warmup);
        c.arrival_interval = j.value("arrival_interval", c.arrival_interval);
        c.arrival_jitter = j.value("arrival_jitter", c.arrival_jitter);
        c.speed_min = j.value("speed_min", c.speed_min);
        c.speed_max = j.value("speed_max", c.speed_max);
        c.lane_half_width = j.value("lane_half_width", c.lane_half_width);
        c.start_z = j.value("start_z", c.start_z);
        c.end_z = j.value("end_z", c.end_z);
        c.stature_min = j.value("stature_min", c.stature_min);
        c.stature_max = j.value("stature_max", c.stature_max);
        c.p_mask = j.value("p_mask", c.p_mask);
        c.p_glasses = j.value("p_glasses", c.p_glasses);
        c.p_hat = j.value("p_hat", c.p_hat);
        c.tail = j.value("tail", c.tail);
        c.appearance_dim = j.value("appearance_dim", c.appearance_dim);
        c.frame_rate = j.value("frame_rate", c.frame_rate);
        c.ambient_temp = j.value("ambient_temp", c.ambient_temp);
        c.attenuation_kappa = j.value("attenuation_kappa", c.attenuation_kappa);
        c.thermal_noise_sigma = j.value("thermal_noise_sigma", c.thermal_noise_sigma);
        if (j.contains("drift")) c.drift = driftFromJson(j.at("drift"));
        if (j.contains("black_body")) c.black_body = blackBodyFromJson(j.at("black_body"), c.black_body);
        if (j.contains("detection_noise")) c.detection_noise = noiseFromJson(j.at("detection_noise"), c.detection_noise);
        if (j.contains("geometry")) c.geometry = rigFromJson(j.at("geometry"), c.geometry);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed generator config: ") + e.what());
    }
    return c;
}

json toJson(const GeneratorConfig& c) {
    return {{"people", c.people},
            {"febrile", c.febrile},
            {"febrile_min", c.febrile_min},
            {"febrile_max", c.febrile_max},
            {"normal_min", c.normal_min},
            {"normal_max", c.normal_max},
            {"warmup", c.warmup},
            {"arrival_interval", c.arrival_interval},
            {"arrival_jitter", c.arrival_jitter},
            {"speed_min", c.speed_min},
            {"speed_max", c.speed_max},
            {"lane_half_width", c.lane_half_width},
            {"start_z", c.start_z},
            {"end_z", c.end_z},
            {"stature_min", c.stature_min},
            {"stature_max", c.stature_max},
            {"p_mask", c.p_mask},
            {"p_glasses", c.p_glasses},
            {"p_hat", c.p_hat},
            {"tail", c.tail},
            {"appearance_dim", c.appearance_dim},
            {"frame_rate", c.frame_rate},
            {"ambient_temp", c.ambient_temp},
            {"attenuation_kappa", c.attenuation_kappa},
            {"thermal_noise_sigma", c.thermal_noise_sigma},
            {"drift", driftJson(c.drift)},
            {"black_body", blackBodyJson(c.black_body)},
            {"detection_noise", noiseJson(c.detection_noise)},
            {"geometry", rigJson(c.geometry)}};
}

void writeGroundTruthCsv(const fs::path& path, const std::vector<GroundTruthRow>& rows) {
    auto out = openOut(path);
    out << "frame,person_id,core_temp_c,distance_m,visible\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%d\n", r.frame, r.person_id.c_str(), r.core_temp_c,
                      r.distance_m, r.visible ? 1 : 0);
        out << buf;
    }
}

std::vector<GroundTruthRow> readGroundTruthCsv(const fs::path& path) {
    auto in = openIn(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("frame,person_id", 0) != 0) throw DataError("bad groundtruth header: " + path.string());
    std::vector<GroundTruthRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string f, id, core, dist, vis;
        if (!std::getline(ls, f, ',') || !std::getline(ls, id, ',') || !std::getline(ls, core, ',') ||
            !std::getline(ls, dist, ',') || !std::getline(ls, vis))
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        try {
            rows.push_back({std::stoi(f), id, std::stod(core), std::stod(dist), std::stoi(vis) != 0});
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": unparsable value");
        }
    }
    return rows;
}

void writeDataset(const Scenario& scenario, const fs::path& dir) {
    scenario.validate();
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) throw DataError("cannot create " + (dir / "frames").string() + ": " + ec.message());
    {
        auto out = openOut(dir / "scenario.json");
        out << toJson(scenario).dump(2) << '\n';
    }
    auto det_out = openOut(dir / "detections.jsonl");
    std::vector<GroundTruthRow> gt;
    for (int seq = 0; seq < scenario.frameCount(); ++seq) {
        const FramePair fp = renderFramePair(scenario, seq);
        writePgm(visualFramePath(dir, seq), fp.visual);
        writeThermal(thermalFramePath(dir, seq), fp.thermal);
        for (const auto& d : emitDetections(scenario, seq)) det_out << toJson(d).dump() << '\n';
        auto rows = groundTruth(scenario, seq);
        gt.insert(gt.end(), rows.begin(), rows.end());
    }
    writeGroundTruthCsv(dir / "groundtruth.csv", gt);
}

Dataset readDataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
    Dataset ds;
    ds.dir = dir;
    {
        auto in = openIn(dir / "scenario.json");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw DataError("malformed " + (dir / "scenario.json").string() + ": " + e.what());
        }
        ds.scenario = scenarioFromJson(j);
    }
    ds.detections.assign(static_cast<std::size_t>(ds.frameCount()), {});
    {
        const fs::path p = dir / "detections.jsonl";
        auto in = openIn(p);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                Detection d = detectionFromJson(json::parse(line));
                if (d.frame_seq < 0 || d.frame_seq >= ds.frameCount())
                    throw DataError(p.string() + ":" + std::to_string(lineno) + ": frame out of range");
                ds.detections[static_cast<std::size_t>(d.frame_seq)].push_back(std::move(d));
            } catch (const json::exception& e) {
                throw DataError(p.string() + ":" + std::to_string(lineno) + ": " + e.what());
            } catch (const std::invalid_argument& e) {
                throw DataError(p.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    }
    ds.groundtruth = readGroundTruthCsv(dir / "groundtruth.csv");
    return ds;
}

FramePair Dataset::loadFrame(int seq) const {
    if (seq < 0 || seq >= frameCount()) throw DataError("frame " + std::to_string(seq) + " out of range");
    FramePair fp;
    fp.seq = seq;
    fp.timestamp = scenario.frameTime(seq);
    fp.visual = readPgm(visualFramePath(dir, seq));
    fp.thermal = readThermal(thermalFramePath(dir, seq));
    const auto& rig = scenario.geometry;
    if (fp.visual.width() != rig.visual_width || fp.visual.height() != rig.visual_height ||
        fp.thermal.width() != rig.thermal_width || fp.thermal.height() != rig.thermal_height)
        throw DataError("frame " + std::to_string(seq) + " does not match rig resolution");
    return fp;
}

}  // namespace ff::sim
