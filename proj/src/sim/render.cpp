#include "freeflow/sim/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ff::sim {

int visualGray(Material m) {
    switch (m) {
        case Material::Glasses: return 95;
        case Material::Hat: return 115;
        case Material::Hair: return 135;
        case Material::ClothA: return 155;
        case Material::ClothB: return 175;
        case Material::Mask: return 190;
        case Material::ClothC: return 205;
        case Material::SkinFace: return 225;
        case Material::SkinCore: return 240;
        case Material::None: break;
    }
    return 0;
}

double sourceTemp(Material m, double core_temp) {
    switch (m) {
        case Material::Glasses: return 25.0;
        case Material::Hat: return 26.5;
        case Material::Hair: return 28.0;
        case Material::ClothA: return 29.0;
        case Material::ClothB: return 30.0;
        case Material::Mask: return 31.0;
        case Material::ClothC: return 32.0;
        case Material::SkinFace: return core_temp - BodyModel::kSkinFaceDrop;
        case Material::SkinCore: return core_temp;
        case Material::None: break;
    }
    return 0.0;
}

double attenuatedTemp(double source, double ambient, double kappa, double distance) {
    return ambient + (source - ambient) * std::exp(-kappa * distance);
}

Material materialAt(const Scenario& s, std::size_t index, double du, double dv) {
    using B = BodyModel;
    const auto& acc = s.people[index].accessories;
    const double ry = dv / B::kHeadHeight;
    const double rx = (du + 0.5 * B::kHeadWidth) / B::kHeadWidth;

    if (acc.hat && ry >= B::kHatLine - 0.06 && ry <= B::kHatLine && std::abs(du) <= 0.11) return Material::Hat;

    const double ex = du / (0.5 * B::kHeadWidth);
    const double ey = (dv - 0.5 * B::kHeadHeight) / (0.5 * B::kHeadHeight);
    if (ex * ex + ey * ey <= 1.0) {
        if (acc.hat && ry < B::kHatLine) return Material::Hat;
        if (!acc.hat && ry < B::kHairline) return Material::Hair;
        if (acc.glasses && ry >= B::kEyeTop && ry <= B::kEyeBottom && rx >= 0.15 && rx <= 0.85) return Material::Glasses;
        if (acc.mask && ry >= B::kMaskTop && ry <= B::kMaskBottom && rx >= B::kFaceLeft && rx <= B::kFaceRight)
            return Material::Mask;
        return ry < B::kEyeBottom ? Material::SkinCore : Material::SkinFace;
    }

    if (std::abs(du) <= 0.5 * B::kBodyWidth && dv >= B::kBodyTop && dv <= B::kBodyBottom) {
        const auto ci = static_cast<std::uint64_t>(std::floor((du + 0.5 * B::kBodyWidth) / B::kCellSize));
        const auto cj = static_cast<std::uint64_t>(std::floor((dv - B::kBodyTop) / B::kCellSize));
        switch (streamSeed(s.rng_seed ^ (index * 0x100000001B3ULL), 7, ci * 64 + cj) % 3) {
            case 0: return Material::ClothA;
            case 1: return Material::ClothB;
            default: return Material::ClothC;
        }
    }
    return Material::None;
}

PersonPose poseAt(const Scenario& s, std::size_t index, double t) {
    const auto& p = s.people[index];
    const Waypoint w = p.positionAt(t);
    return {index, w.x, w.z, BodyModel::kCameraHeight - p.stature};
}

namespace {

BBox projectWorldRect(const CameraRig& rig, double z, double x0, double y0, double x1, double y1) {
    const Point2 a = rig.projectVisual(x0, y0, z);
    const Point2 b = rig.projectVisual(x1, y1, z);
    return BBox::fromCorners(a.x, a.y, b.x, b.y);
}

struct ActivePerson {
    PersonPose pose;
    double core = 0.0;
};

std::vector<ActivePerson> activeFarToNear(const Scenario& s, double t) {
    std::vector<ActivePerson> out;
    for (std::size_t i = 0; i < s.people.size(); ++i)
        if (s.people[i].activeAt(t)) out.push_back({poseAt(s, i, t), s.people[i].core_temp});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.pose.z > b.pose.z; });
    return out;
}

}  // namespace

PartBoxes projectParts(const CameraRig& rig, const PersonPose& pose) {
    using B = BodyModel;
    const double hx0 = pose.x - 0.5 * B::kHeadWidth;
    const double top = pose.head_top;
    auto headRel = [&](double rx0, double ry0, double rx1, double ry1) {
        return projectWorldRect(rig, pose.z, hx0 + rx0 * B::kHeadWidth, top + ry0 * B::kHeadHeight,
                                hx0 + rx1 * B::kHeadWidth, top + ry1 * B::kHeadHeight);
    };
    PartBoxes parts;
    parts.body = projectWorldRect(rig, pose.z, pose.x - 0.5 * B::kBodyWidth, top, pose.x + 0.5 * B::kBodyWidth,
                                  top + B::kBodyBottom);
    parts.head = headRel(0.0, 0.0, 1.0, 1.0);
    parts.face = headRel(B::kFaceLeft, B::kHairline, B::kFaceRight, 1.0);
    parts.eye = headRel(B::kEyeLeft, B::kEyeTop, B::kEyeRight, B::kEyeBottom);
    return parts;
}

HeadTruth headTruth(const CameraRig& rig, const PersonPose& pose) {
    const double y = pose.head_top + 0.5 * BodyModel::kHeadHeight;
    return {rig.projectVisual(pose.x, y, pose.z), rig.projectThermal(pose.x, y, pose.z), pose.z};
}

GrayImage renderBackground(const Scenario& s) {
    const auto& rig = s.geometry;
    GrayImage img(rig.visual_width, rig.visual_height);
    constexpr int kBlock = 32;
    for (int y = 0; y < img.height(); ++y) {
        auto row = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            const auto h = streamSeed(s.rng_seed, 3, static_cast<std::uint64_t>(y / kBlock) * 4096 + x / kBlock);
            row[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(52 + h % 17);
        }
    }
    return img;
}

FramePair renderFramePair(const Scenario& s, int seq) {
    if (seq < 0 || seq >= s.frameCount()) throw std::out_of_range("renderFramePair: frame index out of range");
    const auto& rig = s.geometry;
    const double t = s.frameTime(seq);
    FramePair fp;
    fp.seq = seq;
    fp.timestamp = t;
    fp.visual = renderBackground(s);
    fp.thermal = ThermalGrid(rig.thermal_width, rig.thermal_height, static_cast<float>(s.ambient_temp));

    const auto people = activeFarToNear(s, t);
    using B = BodyModel;

    // visual: painter's order, point sampled at pixel centers
    for (const auto& ap : people) {
        const auto& pose = ap.pose;
        const BBox ext = projectWorldRect(rig, pose.z, pose.x - 0.5 * B::kBodyWidth, pose.head_top,
                                          pose.x + 0.5 * B::kBodyWidth, pose.head_top + B::kBodyBottom);
        const PixelRect r = PixelRect::covering(ext, rig.visual_width, rig.visual_height);
        const double inv_f = pose.z / rig.visual_focal;
        for (int y = r.y0; y < r.y1; ++y) {
            const double dv = (y + 0.5 - 0.5 * rig.visual_height) * inv_f - pose.head_top;
            auto row = fp.visual.row(y);
            for (int x = r.x0; x < r.x1; ++x) {
                const double du = (x + 0.5 - 0.5 * rig.visual_width) * inv_f - pose.x;
                const Material m = materialAt(s, pose.index, du, dv);
                if (m != Material::None) row[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(visualGray(m));
            }
        }
    }

    // thermal: 3x3 supersampling, nearest person wins per subsample
    const PixelRect bb = PixelRect::covering(s.black_body.roi, rig.thermal_width, rig.thermal_height);
    for (int y = bb.y0; y < bb.y1; ++y)
        for (int x = bb.x0; x < bb.x1; ++x) fp.thermal(x, y) = static_cast<float>(s.black_body.reference_temp);

    if (!people.empty()) {
        PixelRect uni{rig.thermal_width, rig.thermal_height, 0, 0};
        for (const auto& ap : people) {
            const auto& pose = ap.pose;
            const Point2 a = rig.projectThermal(pose.x - 0.5 * B::kBodyWidth, pose.head_top, pose.z);
            const Point2 b = rig.projectThermal(pose.x + 0.5 * B::kBodyWidth, pose.head_top + B::kBodyBottom, pose.z);
            uni.x0 = std::min(uni.x0, static_cast<int>(std::floor(a.x)));
            uni.y0 = std::min(uni.y0, static_cast<int>(std::floor(a.y)));
            uni.x1 = std::max(uni.x1, static_cast<int>(std::ceil(b.x)) + 1);
            uni.y1 = std::max(uni.y1, static_cast<int>(std::ceil(b.y)) + 1);
        }
        uni = uni.clipped(rig.thermal_width, rig.thermal_height);
        constexpr int kSub = 3;
        const double cx = 0.5 * rig.thermal_width;
        const double cy = 0.5 * rig.thermal_height;
        for (int y = uni.y0; y < uni.y1; ++y) {
            for (int x = uni.x0; x < uni.x1; ++x) {
                double sum = 0.0;
                int hits = 0;
                for (int sy = 0; sy < kSub; ++sy) {
                    const double py = y + (sy + 0.5) / kSub;
                    for (int sx = 0; sx < kSub; ++sx) {
                        const double px = x + (sx + 0.5) / kSub;
                        double value = fp.thermal(x, y);
                        for (auto it = people.rbegin(); it != people.rend(); ++it) {
                            const auto& pose = it->pose;
                            const double k = pose.z / rig.thermal_focal;
                            const double du = (px - cx) * k + rig.baseline - pose.x;
                            const double dv = (py - cy) * k - pose.head_top;
                            const Material m = materialAt(s, pose.index, du, dv);
                            if (m != Material::None) {
                                value = attenuatedTemp(sourceTemp(m, it->core), s.ambient_temp, s.attenuation_kappa, pose.z);
                                ++hits;
                                break;
                            }
                        }
                        sum += value;
                    }
                }
                if (hits > 0) fp.thermal(x, y) = static_cast<float>(sum / (kSub * kSub));
            }
        }
    }

    const double drift = s.drift.at(t);
    std::mt19937_64 rng(streamSeed(s.rng_seed, 1, static_cast<std::uint64_t>(seq)));
    std::normal_distribution<double> noise(0.0, s.thermal_noise_sigma > 0.0 ? s.thermal_noise_sigma : 1.0);
    const bool noisy = s.thermal_noise_sigma > 0.0;
    for (float& v : fp.thermal.data()) {
        double val = v + drift;
        if (noisy) val += noise(rng);
        v = static_cast<float>(val);
    }
    return fp;
}

}  // namespace ff::sim
