#include "freeflow/align/align.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <Eigen/QR>
#include <stdexcept>

namespace ff::align {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

template <typename T>
Image<T> crop(const Image<T>& img, PixelRect r) {
    Image<T> out(r.width(), r.height());
    for (int y = r.y0; y < r.y1; ++y)
        std::copy_n(img.row(y).begin() + r.x0, r.width(), out.row(y - r.y0).begin());
    return out;
}

template <typename T>
double medianOf(std::vector<T> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return static_cast<double>(*mid);
}

/// Linear stretch of masked values into [0, 255] from `lo` to the 99th percentile; masked-out
/// cells become 0 so the silhouette outline looks the same in both spectra.
GrayImage stretch(const Image<double>& values, const Mask& mask, double lo) {
    std::vector<double> inside;
    for (std::size_t i = 0; i < values.data().size(); ++i)
        if (mask.data()[i]) inside.push_back(values.data()[i]);
    GrayImage out(values.width(), values.height(), 0);
    if (inside.empty()) return out;
    auto hi_it = inside.begin() + static_cast<std::ptrdiff_t>((inside.size() - 1) * 99 / 100);
    std::nth_element(inside.begin(), hi_it, inside.end());
    double hi = *hi_it;
    if (hi - lo < 1e-9) return out;
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        if (!mask.data()[i]) continue;
        double s = (values.data()[i] - lo) / (hi - lo) * 255.0;
        out.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(s), 0l, 255l));
    }
    return out;
}

}  // namespace

AlignConfig AlignConfig::forGeometry(const StereoGeometry& g, double calibration_distance) {
    if (!(calibration_distance > 0)) throw std::invalid_argument("calibration distance must be positive");
    AlignConfig c;
    c.manual.s_x = 1.0 / g.scaleX();
    c.manual.s_y = 1.0 / g.scaleY();
    // Visual focal length in visual pixels equals thermal focal scaled by s_x.
    c.manual.t_x = g.thermal_focal * c.manual.s_x * g.baseline / calibration_distance;
    c.manual.t_y = 0.0;
    return c;
}

std::optional<double> depthFromDisparity(double disparity, double focal, double baseline) {
    if (!(disparity > 0) || !std::isfinite(disparity) || !(focal > 0) || !(baseline > 0)) return std::nullopt;
    return focal * baseline / disparity;
}

Point2 PersonAlignment::toThermal(Point2 visual) const {
    return dynamic ? homography.apply(visual) : manualOffsetUnmap(visual, fallback);
}

BBox PersonAlignment::mapBox(const BBox& visual) const {
    Point2 c[4] = {toThermal({visual.x(), visual.y()}), toThermal({visual.right(), visual.y()}),
                   toThermal({visual.x(), visual.bottom()}), toThermal({visual.right(), visual.bottom()})};
    double x0 = c[0].x, x1 = c[0].x, y0 = c[0].y, y1 = c[0].y;
    for (const auto& p : c) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return BBox::fromCorners(x0, y0, x1, y1);
}

const PersonAlignment* AlignmentResult::find(int id) const {
    auto it = persons.find(id);
    return it == persons.end() ? nullptr : &it->second;
}

std::optional<float> AlignmentResult::alignedThermal(const ThermalGrid& thermal, int id, Point2 p) const {
    const auto* a = find(id);
    if (!a) return std::nullopt;
    Point2 q = a->toThermal(p);
    int x = static_cast<int>(std::floor(q.x));
    int y = static_cast<int>(std::floor(q.y));
    if (!thermal.inside(x, y)) return std::nullopt;
    return thermal(x, y);
}

AlignmentState::AlignmentState(const StereoGeometry& geometry, const AlignConfig& config)
    : geometry_(geometry),
      config_(config),
      visual_bg_(geometry.visual_width, geometry.visual_height, config.background_window),
      thermal_bg_(geometry.thermal_width, geometry.thermal_height, config.background_window) {
    config_.manual.validate();
}

PixelRect AlignmentState::visualRegionRect(const BBox& box) const {
    return PixelRect::covering(box.expanded(config_.region_margin), geometry_.visual_width, geometry_.visual_height);
}

PixelRect AlignmentState::thermalSearchRect(const BBox& box) const {
    BBox grown = box.expanded(config_.region_margin);
    Point2 a = manualOffsetUnmap({grown.x(), grown.y()}, config_.manual);
    Point2 b = manualOffsetUnmap({grown.right(), grown.bottom()}, config_.manual);
    PixelRect r{static_cast<int>(std::floor(std::min(a.x, b.x))) - config_.search_margin_x,
                static_cast<int>(std::floor(std::min(a.y, b.y))) - config_.search_margin_y,
                static_cast<int>(std::ceil(std::max(a.x, b.x))) + config_.search_margin_x,
                static_cast<int>(std::ceil(std::max(a.y, b.y))) + config_.search_margin_y};
    return r.clipped(geometry_.thermal_width, geometry_.thermal_height);
}

void AlignmentState::update(const GrayImage& visual, const ThermalGrid& thermal, std::span<const BBox> person_boxes) {
    if (visual.width() != geometry_.visual_width || visual.height() != geometry_.visual_height ||
        thermal.width() != geometry_.thermal_width || thermal.height() != geometry_.thermal_height)
        throw std::invalid_argument("alignment state: frame size does not match geometry");
    std::vector<PixelRect> vis, th;
    for (const auto& b : person_boxes) {
        vis.push_back(visualRegionRect(b));
        th.push_back(thermalSearchRect(b));
    }
    visual_bg_.update(visual, vis);
    thermal_bg_.update(thermal, th);
    ++frames_;
}

RegionImages buildRegionImages(const GrayImage& visual, const ThermalGrid& thermal, const BBox& box, AlignmentState& state) {
    const auto& g = state.geometry();
    const auto& cfg = state.config();
    RegionImages out;

    // Visual region, then resampled to the thermal pixel grid.
    PixelRect rv = state.visualRegionRect(box);
    if (!rv.empty()) {
        GrayImage frame = crop(visual, rv);
        GrayImage bg = state.visualBackground().median(rv, visual);
        Mask fg = foregroundMask(frame, bg, cfg.visual_tau);
        double sx = g.scaleX(), sy = g.scaleY();
        int u0 = static_cast<int>(std::floor(rv.x0 * sx)), u1 = static_cast<int>(std::ceil(rv.x1 * sx));
        int v0 = static_cast<int>(std::floor(rv.y0 * sy)), v1 = static_cast<int>(std::ceil(rv.y1 * sy));
        Image<double> vals(u1 - u0, v1 - v0, 0.0);
        out.visual_mask = Mask(u1 - u0, v1 - v0, 0);
        out.visual_origin_x = u0;
        out.visual_origin_y = v0;
        double fill = medianOf(bg.data());
        for (int v = v0; v < v1; ++v) {
            int ya = std::max(rv.y0, static_cast<int>(std::ceil(v / sy - 0.5)));
            int yb = std::min(rv.y1, static_cast<int>(std::ceil((v + 1) / sy - 0.5)));
            for (int u = u0; u < u1; ++u) {
                int xa = std::max(rv.x0, static_cast<int>(std::ceil(u / sx - 0.5)));
                int xb = std::min(rv.x1, static_cast<int>(std::ceil((u + 1) / sx - 0.5)));
                double sum = 0;
                int n = 0, on = 0;
                for (int y = ya; y < yb; ++y)
                    for (int x = xa; x < xb; ++x) {
                        sum += frame(x - rv.x0, y - rv.y0);
                        on += fg(x - rv.x0, y - rv.y0) ? 1 : 0;
                        ++n;
                    }
                bool m = n > 0 && 2 * on >= n;
                vals(u - u0, v - v0) = n > 0 ? sum / n : fill;
                out.visual_mask(u - u0, v - v0) = m ? 1 : 0;
            }
        }
        out.visual = stretch(vals, out.visual_mask, fill);
    }

    PixelRect rt = state.thermalSearchRect(box);
    if (!rt.empty()) {
        ThermalGrid frame = crop(thermal, rt);
        ThermalGrid bg = state.thermalBackground().median(rt, thermal);
        out.thermal_mask = foregroundMask(frame, bg, cfg.thermal_tau);
        out.thermal_origin_x = rt.x0;
        out.thermal_origin_y = rt.y0;
        Image<double> vals(rt.width(), rt.height());
        for (std::size_t i = 0; i < vals.data().size(); ++i) vals.data()[i] = frame.data()[i];
        out.thermal = stretch(vals, out.thermal_mask, medianOf(bg.data()));
    }
    return out;
}

namespace {

/// Both grids sample the same scene at the same scale, so the map must stay near a translation.
bool plausible(const Eigen::Matrix3d& h) {
    double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
    return det > 0.5 && det < 2.0 && std::abs(h(2, 0)) < 0.01 && std::abs(h(2, 1)) < 0.01;
}

std::optional<Eigen::Matrix3d> fitAffine(const std::vector<Correspondence>& pts, const std::vector<int>& use) {
    if (use.size() < 3) return std::nullopt;
    Eigen::MatrixXd a(use.size(), 3);
    Eigen::VectorXd bx(use.size()), by(use.size());
    for (std::size_t k = 0; k < use.size(); ++k) {
        const auto& c = pts[static_cast<std::size_t>(use[k])];
        a.row(static_cast<Eigen::Index>(k)) << c.src.x, c.src.y, 1.0;
        bx(static_cast<Eigen::Index>(k)) = c.dst.x;
        by(static_cast<Eigen::Index>(k)) = c.dst.y;
    }
    auto qr = a.colPivHouseholderQr();
    if (qr.rank() < 3) return std::nullopt;
    Eigen::Vector3d rx = qr.solve(bx), ry = qr.solve(by);
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    h.row(0) = rx.transpose();
    h.row(1) = ry.transpose();
    if (!h.allFinite()) return std::nullopt;
    return h;
}

PersonAlignment solve(const RegionImages& imgs, const PersonRegion& region, const AlignmentState& state, std::uint64_t seed) {
    const auto& g = state.geometry();
    const auto& cfg = state.config();
    PersonAlignment pa;
    pa.id = region.id;
    pa.fallback = cfg.manual;
    if (imgs.visual.empty() || imgs.thermal.empty()) return pa;

    auto fv = detectFeatures(imgs.visual, imgs.visual_mask, cfg.features);
    auto ft = detectFeatures(imgs.thermal, imgs.thermal_mask, cfg.features);
    pa.features_visual = static_cast<int>(fv.size());
    pa.features_thermal = static_cast<int>(ft.size());
    auto matches = matchDescriptors(fv, ft, cfg.matching);
    pa.matches = static_cast<int>(matches.size());
    if (pa.matches < std::max(4, cfg.min_inliers)) return pa;

    std::vector<Correspondence> pts;
    pts.reserve(matches.size());
    for (const auto& m : matches) {
        Point2 a = fv[static_cast<std::size_t>(m.index_a)].location;
        Point2 b = ft[static_cast<std::size_t>(m.index_b)].location;
        pts.push_back({{a.x + imgs.visual_origin_x, a.y + imgs.visual_origin_y},
                       {b.x + imgs.thermal_origin_x, b.y + imgs.thermal_origin_y}});
    }

    if (!region.occluders.empty()) {
        const double sx = g.scaleX(), sy = g.scaleY();
        std::erase_if(pts, [&](const Correspondence& c) {
            Point2 v{c.src.x / sx, c.src.y / sy};
            return std::any_of(region.occluders.begin(), region.occluders.end(),
                               [&](const BBox& b) { return b.contains(v); });
        });
    }
    if (region.distance_prior && *region.distance_prior > 0) {
        double expected = g.thermal_focal * g.baseline / *region.distance_prior;
        double tol = std::max(cfg.prior_tolerance_px, cfg.prior_tolerance * expected);
        std::erase_if(pts, [&](const Correspondence& c) { return std::abs(c.src.x - c.dst.x - expected) > tol; });
        if (static_cast<int>(pts.size()) < std::max(4, cfg.min_inliers)) return pa;
    }

    RansacParams rp = cfg.ransac;
    rp.seed = mix(seed ^ mix(static_cast<std::uint64_t>(region.id)));
    Homography hs;
    try {
        hs = estimateHomography(pts, rp);
    } catch (const std::runtime_error&) {
        return pa;
    }
    if (hs.inlier_count < cfg.min_inliers) return pa;

    // Few, clustered inliers (a person cut by the frame edge) can leave the perspective terms
    // unconstrained; the region is close to planar, so retry with an affine fit on the inliers.
    if (!plausible(hs.h)) {
        auto affine = fitAffine(pts, hs.inliers);
        if (!affine || !plausible(*affine)) return pa;
        hs.h = *affine;
        hs.inliers.clear();
        double sum = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double e = std::hypot(applyHomography(hs.h, pts[i].src).x - pts[i].dst.x,
                                  applyHomography(hs.h, pts[i].src).y - pts[i].dst.y);
            if (e <= rp.inlier_threshold) {
                hs.inliers.push_back(static_cast<int>(i));
                sum += e;
            }
        }
        hs.inlier_count = static_cast<int>(hs.inliers.size());
        hs.mean_residual = hs.inliers.empty() ? 0.0 : sum / hs.inlier_count;
        if (hs.inlier_count < cfg.min_inliers) return pa;
    }

    std::vector<double> disparities;
    for (int i : hs.inliers) {
        const auto& c = pts[static_cast<std::size_t>(i)];
        disparities.push_back(c.src.x - hs.apply(c.src).x);
    }
    double d = medianOf(disparities);
    auto z = depthFromDisparity(d, g.thermal_focal, g.baseline);
    if (!z) return pa;

    Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
    scale(0, 0) = g.scaleX();
    scale(1, 1) = g.scaleY();
    pa.homography = hs;
    pa.homography.h = hs.h * scale;
    pa.dynamic = true;
    pa.low_confidence = false;
    pa.disparity = d;
    bool agrees = !region.distance_prior ||
                  std::abs(*z - *region.distance_prior) <= cfg.depth_prior_agreement * *region.distance_prior;
    if (hs.inlier_count >= cfg.depth_min_inliers && agrees) pa.distance = z;
    return pa;
}

}  // namespace

AlignmentResult alignPair(const GrayImage& visual, const ThermalGrid& thermal, std::span<const PersonRegion> regions,
                          AlignmentState& state, std::uint64_t seed, int threads) {
    // Background medians mutate the state's caches, so region images are built serially.
    std::vector<RegionImages> images;
    images.reserve(regions.size());
    for (const auto& r : regions) images.push_back(buildRegionImages(visual, thermal, r.box, state));

    std::vector<PersonAlignment> solved(regions.size());
    if (threads > 1 && regions.size() > 1) {
        std::vector<std::future<void>> jobs;
        std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), regions.size());
        for (std::size_t w = 0; w < workers; ++w)
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < regions.size(); i += workers)
                    solved[i] = solve(images[i], regions[i], state, seed);
            }));
        for (auto& j : jobs) j.get();
    } else {
        for (std::size_t i = 0; i < regions.size(); ++i) solved[i] = solve(images[i], regions[i], state, seed);
    }

    AlignmentResult result;
    for (auto& p : solved) result.persons[p.id] = std::move(p);
    return result;
}

}  // namespace ff::align
