#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "freeflow/align/align.hpp"
#include "freeflow/align/background.hpp"
#include "freeflow/align/features.hpp"
#include "freeflow/align/homography.hpp"
#include "freeflow/align/offset.hpp"
#include "freeflow/sim/detections.hpp"
#include "freeflow/sim/render.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

using namespace ff;
using namespace ff::align;

namespace {

Eigen::Matrix3d knownHomography() {
    Eigen::Matrix3d h;
    h << 0.95, 0.04, 12.0, -0.03, 1.02, -7.0, 2e-5, -1e-5, 1.0;
    return h;
}

double reprojection(const Eigen::Matrix3d& h, const Correspondence& c) {
    Point2 q = applyHomography(h, c.src);
    return std::hypot(q.x - c.dst.x, q.y - c.dst.y);
}

GrayImage squareImage(int w, int h, int x0, int y0, int side, std::uint8_t bg, std::uint8_t fg) {
    GrayImage img(w, h, bg);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) img(x, y) = fg;
    return img;
}

}  // namespace

// ---- manual offset ----

TEST(ManualOffset, Identity) {
    Point2 q = manualOffsetMap({0, 0}, AffineOffset{});
    EXPECT_DOUBLE_EQ(q.x, 0);
    EXPECT_DOUBLE_EQ(q.y, 0);
}

TEST(ManualOffset, Translation) {
    Point2 q = manualOffsetMap({100, 100}, AffineOffset{75, -25, 1, 1});
    EXPECT_DOUBLE_EQ(q.x, 175);
    EXPECT_DOUBLE_EQ(q.y, 75);
}

TEST(ManualOffset, CornerToCornerScale) {
    Point2 q = manualOffsetMap({336, 252}, AffineOffset{0, 0, 1280.0 / 336.0, 960.0 / 252.0});
    EXPECT_NEAR(q.x, 1280, 1e-9);
    EXPECT_NEAR(q.y, 960, 1e-9);
}

TEST(ManualOffset, AffineCombination) {
    AffineOffset o{19.2, -3.5, 3.8, 3.7};
    Point2 p{10, 20}, q{-40, 7};
    for (double a : {0.0, 0.25, 0.5, 1.0, 1.7}) {
        Point2 mix{a * p.x + (1 - a) * q.x, a * p.y + (1 - a) * q.y};
        Point2 fp = manualOffsetMap(p, o), fq = manualOffsetMap(q, o), fm = manualOffsetMap(mix, o);
        EXPECT_NEAR(fm.x, a * fp.x + (1 - a) * fq.x, 1e-9);
        EXPECT_NEAR(fm.y, a * fp.y + (1 - a) * fq.y, 1e-9);
    }
}

TEST(ManualOffset, UnmapInvertsMap) {
    AffineOffset o{19.2, -3.5, 3.8, 3.7};
    Point2 p{123.4, 56.7};
    Point2 back = manualOffsetUnmap(manualOffsetMap(p, o), o);
    EXPECT_NEAR(back.x, p.x, 1e-9);
    EXPECT_NEAR(back.y, p.y, 1e-9);
}

TEST(ManualOffset, RejectsNonPositiveScale) {
    EXPECT_THROW((AffineOffset{0, 0, 0, 1}.validate()), std::invalid_argument);
    EXPECT_THROW((AffineOffset{0, 0, 1, -2}.validate()), std::invalid_argument);
}

TEST(ManualOffset, FittedAtCalibrationDistance) {
    StereoGeometry g;
    auto c = AlignConfig::forGeometry(g, 2.0);
    // a point at 2 m maps without parallax error: t_x equals the visual-pixel disparity there
    EXPECT_NEAR(c.manual.t_x, 640.0 * 0.06 / 2.0, 1e-9);
    EXPECT_NEAR(c.manual.s_x, 1280.0 / 336.0, 1e-12);
    EXPECT_THROW(AlignConfig::forGeometry(g, 0.0), std::invalid_argument);
}

// ---- background ----

TEST(Background, ConstantFrames) {
    std::vector<GrayImage> frames(10, squareImage(20, 10, 3, 3, 4, 90, 140));
    EXPECT_EQ(estimateBackground(frames), frames[0]);
}

TEST(Background, MovingBlobRecoversStaticLayer) {
    GrayImage scene(64, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x) scene(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) % 200);
    std::vector<GrayImage> frames;
    for (int k = 0; k < 16; ++k) {
        GrayImage f = scene;
        for (int y = 10; y < 20; ++y)
            for (int x = 4 * k; x < 4 * k + 6 && x < 64; ++x) f(x, y) = 255;
        frames.push_back(f);
    }
    auto bg = estimateBackground(frames);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x) EXPECT_LE(std::abs(int(bg(x, y)) - int(scene(x, y))), 2);
}

TEST(Background, TooFewFramesThrows) {
    std::vector<GrayImage> none;
    EXPECT_THROW(estimateBackground(none), std::invalid_argument);
    std::vector<GrayImage> few(3, GrayImage(4, 4));
    EXPECT_THROW(estimateBackground(few), std::invalid_argument);
}

TEST(Background, ModelSkipsExcludedPixels) {
    BackgroundModel<std::uint8_t> m(8, 8, 4);
    for (int k = 0; k < 4; ++k) m.update(GrayImage(8, 8, 50));
    PixelRect ex{2, 2, 4, 4};
    for (int k = 0; k < 4; ++k) m.update(GrayImage(8, 8, 200), std::span<const PixelRect>(&ex, 1));
    GrayImage med = m.median({0, 0, 8, 8}, GrayImage(8, 8, 0));
    EXPECT_EQ(med(3, 3), 50);
    EXPECT_EQ(med(0, 0), 200);
    EXPECT_EQ(m.samples(3, 3), 4);
}

TEST(Foreground, EqualFramesGiveEmptyMask) {
    GrayImage f = squareImage(16, 16, 4, 4, 5, 30, 90);
    Mask m = foregroundMask(f, f, 12);
    EXPECT_TRUE(std::all_of(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v == 0; }));
}

TEST(Foreground, BlobCoveredWithDilationRing) {
    GrayImage bg(20, 20, 80);
    GrayImage f = squareImage(20, 20, 6, 7, 5, 80, 130);
    Mask m = foregroundMask(f, bg, 12);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            bool expected = x >= 5 && x <= 11 && y >= 6 && y <= 12;
            EXPECT_EQ(m(x, y) != 0, expected) << x << "," << y;
        }
}

TEST(Foreground, ZeroThresholdIsDilatedNonzeroDifference) {
    std::mt19937 rng(2);
    GrayImage bg(24, 24, 100), f(24, 24, 100);
    Mask diff(24, 24, 0);
    for (int k = 0; k < 10; ++k) {
        int x = static_cast<int>(rng() % 24), y = static_cast<int>(rng() % 24);
        f(x, y) = 101;
        diff(x, y) = 1;
    }
    Mask m = foregroundMask(f, bg, 0.0);
    Mask want = dilate(diff);
    for (std::size_t i = 0; i < m.data().size(); ++i) EXPECT_EQ(m.data()[i] != 0, want.data()[i] != 0);
}

TEST(Foreground, ThermalAndSizeMismatch) {
    ThermalGrid bg(5, 5, 22.0f), f(5, 5, 22.0f);
    f(2, 2) = 30.0f;
    Mask m = foregroundMask(f, bg, 1.5);
    EXPECT_NE(m(2, 2), 0);
    EXPECT_NE(m(1, 1), 0);
    EXPECT_EQ(m(4, 4), 0);
    EXPECT_THROW(foregroundMask(GrayImage(4, 4), GrayImage(5, 4), 1.0), std::invalid_argument);
}

// ---- features ----

TEST(Features, UniformImageHasNone) {
    GrayImage img(64, 64, 120);
    EXPECT_TRUE(detectFeatures(img, Mask(64, 64, 1)).empty());
}

TEST(Features, SquareCornerDetected) {
    GrayImage img = squareImage(80, 80, 30, 30, 40, 40, 220);
    Mask mask(80, 80, 0);
    for (int y = 22; y < 38; ++y)
        for (int x = 22; x < 38; ++x) mask(x, y) = 1;
    auto fs = detectFeatures(img, mask);
    ASSERT_FALSE(fs.empty());
    bool near = std::any_of(fs.begin(), fs.end(), [](const Feature& f) {
        return std::hypot(f.location.x - 30.0, f.location.y - 30.0) <= 2.0;
    });
    EXPECT_TRUE(near);
    for (const auto& f : fs) {
        EXPECT_NE(mask(int(f.location.x), int(f.location.y)), 0);
    }
}

TEST(Features, FastScoreOnConstructedCorner) {
    GrayImage img = squareImage(40, 40, 20, 20, 20, 10, 250);
    EXPECT_GT(fastScore(img, 20, 20, 20), 0);
    EXPECT_EQ(fastScore(img, 30, 30, 20), 0);  // interior
    EXPECT_EQ(fastScore(img, 5, 5, 20), 0);    // flat background
}

TEST(Features, DeterministicDescriptors) {
    std::mt19937 rng(4);
    GrayImage img(96, 96);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() % 256);
    Mask mask(96, 96, 1);
    auto a = detectFeatures(img, mask), b = detectFeatures(img, mask);
    ASSERT_EQ(a.size(), b.size());
    ASSERT_FALSE(a.empty());
    EXPECT_LE(a.size(), 500u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].descriptor, b[i].descriptor);
        EXPECT_EQ(a[i].location.x, b[i].location.x);
        if (i > 0) {
            EXPECT_GE(a[i - 1].response, a[i].response);
        }
    }
}

TEST(Features, SizeMismatchThrows) { EXPECT_THROW(detectFeatures(GrayImage(10, 10), Mask(9, 10)), std::invalid_argument); }

TEST(Features, HammingDistance) {
    Descriptor z{0, 0, 0, 0}, ones{~0ull, ~0ull, ~0ull, ~0ull};
    EXPECT_EQ(hammingDistance(z, z), 0);
    EXPECT_EQ(hammingDistance(z, ones), 256);
    EXPECT_EQ(hammingDistance(z, Descriptor{0b1011, 0, 1, 0}), 4);
}

// ---- matching ----

TEST(Matcher, IdenticalSetsMatchInOrder) {
    std::mt19937_64 rng(1);
    std::vector<Descriptor> a;
    for (int i = 0; i < 15; ++i) a.push_back(ff::test::randomDescriptor(rng));
    auto m = matchDescriptors(a, a);
    ASSERT_EQ(m.size(), a.size());
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i], (Match{int(i), int(i), 0}));
}

TEST(Matcher, ComplementIsRejected) {
    Descriptor d{0x0123456789abcdefull, 42, 7, 99};
    Descriptor c{~d[0], ~d[1], ~d[2], ~d[3]};
    EXPECT_TRUE(matchDescriptors(std::vector{d}, std::vector{c}).empty());
}

TEST(Matcher, TwentyByTwentyMatchesOracle) {
    std::mt19937_64 rng(20);
    std::vector<Descriptor> a, b;
    ff::test::randomMatchInstance(rng, 20, 20, a, b);
    auto got = matchDescriptors(a, b);
    EXPECT_EQ(got, ff::test::exhaustiveMatches(a, b, {}));
    EXPECT_FALSE(got.empty());
}

TEST(Matcher, SmallInstancesMatchOracle) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> n(0, 32);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Descriptor> a, b;
        ff::test::randomMatchInstance(rng, n(rng), n(rng), a, b);
        MatchParams p;
        if (trial % 4 == 1) p.ratio = 0.6;
        if (trial % 4 == 2) p.max_distance = 20;
        EXPECT_EQ(matchDescriptors(a, b, p), ff::test::exhaustiveMatches(a, b, p)) << "trial " << trial;
    }
}

TEST(Matcher, TiesFailRatioTest) {
    std::mt19937_64 rng(5);
    Descriptor d = ff::test::randomDescriptor(rng);
    EXPECT_TRUE(matchDescriptors(std::vector{d}, std::vector{d, d}).empty());
}

// ---- homography ----

TEST(Homography, IdentityFromEightPoints) {
    std::vector<Correspondence> pts;
    for (int i = 0; i < 8; ++i) {
        Point2 p{10.0 * i + (i % 3) * 7.0, 5.0 * (i * i % 7) + 3.0};
        pts.push_back({p, p});
    }
    auto h = estimateHomography(pts);
    EXPECT_TRUE(h.h.isApprox(Eigen::Matrix3d::Identity(), 1e-9));
    EXPECT_LE((h.h - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Homography, RecoversKnownMapWithoutNoise) {
    Eigen::Matrix3d truth = knownHomography();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 300);
    std::vector<Correspondence> pts;
    for (int i = 0; i < 50; ++i) {
        Point2 p{u(rng), u(rng)};
        pts.push_back({p, applyHomography(truth, p)});
    }
    auto h = estimateHomography(pts);
    EXPECT_LE((h.h - truth).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(h.inlier_count, 50);
    EXPECT_DOUBLE_EQ(h.h(2, 2), 1.0);
}

TEST(Homography, NoisyWithOutliers) {
    Eigen::Matrix3d truth = knownHomography();
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng(100 + trial);
        std::uniform_real_distribution<double> u(0, 300);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<Correspondence> pts;
        std::vector<bool> outlier;
        for (int i = 0; i < 50; ++i) {
            Point2 p{u(rng), u(rng)};
            Point2 q = applyHomography(truth, p);
            bool out = i % 10 < 3;
            if (out) {
                Point2 r;
                do r = {u(rng), u(rng)};
                while (std::hypot(r.x - q.x, r.y - q.y) < 20.0);
                q = r;
            } else {
                q = {q.x + noise(rng), q.y + noise(rng)};
            }
            pts.push_back({p, q});
            outlier.push_back(out);
        }
        RansacParams rp;
        rp.seed = trial;
        auto h = estimateHomography(pts, rp);
        EXPECT_DOUBLE_EQ(h.h(2, 2), 1.0);
        ASSERT_GE(h.inlier_count, 4);
        for (int i : h.inliers) {
            EXPECT_LE(reprojection(h.h, pts[static_cast<std::size_t>(i)]), rp.inlier_threshold);
            EXPECT_FALSE(outlier[static_cast<std::size_t>(i)]) << "outlier " << i << " kept in trial " << trial;
        }
        EXPECT_GE(h.inlier_count, 30);
    }
}

TEST(Homography, DeterministicForSeed) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 200);
    std::vector<Correspondence> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
    for (int i = 0; i < 20; ++i) {
        Point2 p{u(rng), u(rng)};
        pts.push_back({p, applyHomography(knownHomography(), p)});
    }
    RansacParams rp;
    rp.seed = 17;
    auto a = estimateHomography(pts, rp), b = estimateHomography(pts, rp);
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.inliers, b.inliers);
}

TEST(Homography, ErrorPaths) {
    std::vector<Correspondence> three{{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
    EXPECT_THROW(estimateHomography(three), InsufficientCorrespondences);
    std::vector<Correspondence> line;
    for (int i = 0; i < 10; ++i) line.push_back({{double(i), 2.0 * i}, {double(i), 2.0 * i}});
    EXPECT_THROW(estimateHomography(line), DegenerateConfiguration);
    EXPECT_FALSE(fitHomographyDlt(std::span<const Correspondence>(line)).has_value());
}

// ---- depth ----

TEST(Depth, ClosedForm) {
    EXPECT_NEAR(*depthFromDisparity(12.0, 400.0, 0.06), 2.0, 1e-12);
    EXPECT_NEAR(*depthFromDisparity(24.0, 400.0, 0.06), 1.0, 1e-12);
    EXPECT_FALSE(depthFromDisparity(0.0, 400.0, 0.06));
    EXPECT_FALSE(depthFromDisparity(-1.0, 400.0, 0.06));
}

// ---- dynamic alignment on rendered scenes ----

namespace {

struct AlignRun {
    std::vector<PersonAlignment> results;
    std::vector<sim::HeadTruth> truth;
};

// One person standing at depth z from t = 2.5 s; the empty first frames warm the background.
AlignRun alignStanding(double z, double x, int frames_after_entry) {
    auto s = ff::test::quietScene({ff::test::walker("P1", 0, 37.0, {{2.5, x, z}, {9.0, x, z}})}, 2.5 + frames_after_entry / 8.0);
    StereoGeometry g;
    AlignmentState state(g, AlignConfig::forGeometry(g));
    AlignRun run;
    for (int seq = 0; seq < s.frameCount(); ++seq) {
        auto fp = sim::renderFramePair(s, seq);
        std::vector<PersonRegion> regions;
        std::vector<BBox> boxes;
        for (const auto& d : sim::emitDetections(s, seq))
            if (d.kind == DetectionKind::Body) {
                regions.push_back({1, d.bbox, std::nullopt, {}});
                boxes.push_back(d.bbox);
            }
        if (state.warmedUp() && !regions.empty()) {
            auto r = alignPair(fp.visual, fp.thermal, regions, state, static_cast<std::uint64_t>(seq));
            run.results.push_back(r.persons.at(1));
            run.truth.push_back(sim::headTruth(s.geometry, sim::poseAt(s, 0, fp.timestamp)));
        }
        state.update(fp.visual, fp.thermal, boxes);
    }
    return run;
}

double dynamicResidual(const PersonAlignment& pa, const sim::HeadTruth& ht) {
    Point2 q = pa.toThermal(ht.visual);
    return std::hypot((q.x - ht.thermal.x) * 1280.0 / 336.0, (q.y - ht.thermal.y) * 960.0 / 252.0);
}

}  // namespace

TEST(AlignPair, RecoversDepthAtTwoMeters) {
    auto run = alignStanding(2.0, 0.0, 6);
    ASSERT_FALSE(run.results.empty());
    for (std::size_t i = 0; i < run.results.size(); ++i) {
        const auto& pa = run.results[i];
        ASSERT_TRUE(pa.dynamic);
        EXPECT_FALSE(pa.low_confidence);
        ASSERT_TRUE(pa.distance.has_value());
        EXPECT_NEAR(*pa.distance, 2.0, 0.15);
        EXPECT_LE(dynamicResidual(pa, run.truth[i]), 5.0);
        EXPECT_DOUBLE_EQ(pa.homography.h(2, 2), 1.0);
    }
}

TEST(AlignPair, NearRangeBeatsParallax) {
    auto run = alignStanding(0.9144, 0.0, 4);  // 3 ft
    ASSERT_FALSE(run.results.empty());
    StereoGeometry g;
    auto manual = AlignConfig::forGeometry(g).manual;
    for (std::size_t i = 0; i < run.results.size(); ++i) {
        const auto& ht = run.truth[i];
        double raw = std::abs(ht.visual.x - ht.thermal.x * 1280.0 / 336.0);
        Point2 m = manualOffsetUnmap(ht.visual, manual);
        double manual_err = std::abs(m.x - ht.thermal.x) * 1280.0 / 336.0;
        EXPECT_GE(raw, 40.0);
        EXPECT_GT(manual_err, 15.0);
        ASSERT_TRUE(run.results[i].dynamic);
        EXPECT_LE(dynamicResidual(run.results[i], ht), 5.0);
    }
}

TEST(AlignPair, EmptySceneHasNoMappings) {
    StereoGeometry g;
    AlignmentState state(g, AlignConfig::forGeometry(g));
    GrayImage v(1280, 960, 90);
    ThermalGrid t(336, 252, 22.0f);
    for (int k = 0; k < 10; ++k) state.update(v, t, {});
    ASSERT_TRUE(state.warmedUp());
    auto r = alignPair(v, t, {}, state, 0);
    EXPECT_TRUE(r.persons.empty());
}

TEST(AlignPair, FeaturelessBlobFallsBack) {
    StereoGeometry g;
    auto cfg = AlignConfig::forGeometry(g);
    AlignmentState state(g, cfg);
    GrayImage v(1280, 960, 90);
    ThermalGrid t(336, 252, 22.0f);
    for (int k = 0; k < 10; ++k) state.update(v, t, {});
    // low-contrast blob: foreground for the mask (> 12 levels) but below the corner threshold
    for (int y = 300; y < 700; ++y)
        for (int x = 500; x < 700; ++x) v(x, y) = 105;
    for (int y = 80; y < 184; ++y)
        for (int x = 128; x < 180; ++x) t(x, y) = 30.0f;
    PersonRegion region{4, BBox(500, 300, 200, 400), std::nullopt, {}};
    auto r = alignPair(v, t, std::span(&region, 1), state, 0);
    ASSERT_EQ(r.persons.size(), 1u);
    const auto& pa = r.persons.at(4);
    EXPECT_FALSE(pa.dynamic);
    EXPECT_TRUE(pa.low_confidence);
    EXPECT_FALSE(pa.distance.has_value());
    Point2 q = pa.toThermal({600, 500});
    Point2 m = manualOffsetUnmap({600, 500}, cfg.manual);
    EXPECT_DOUBLE_EQ(q.x, m.x);
    EXPECT_DOUBLE_EQ(q.y, m.y);
}

TEST(AlignPair, DeterministicAndThreadIndependent) {
    auto s = ff::test::quietScene({ff::test::walker("P1", 0, 37.0, {{2.5, -0.4, 2.2}, {9.0, -0.4, 2.2}}),
                                   ff::test::walker("P2", 1, 37.0, {{2.5, 0.6, 3.0}, {9.0, 0.6, 3.0}})},
                                  3.0);
    StereoGeometry g;
    auto cfg = AlignConfig::forGeometry(g);
    AlignmentState s1(g, cfg), s2(g, cfg);
    for (int seq = 0; seq < s.frameCount(); ++seq) {
        auto fp = sim::renderFramePair(s, seq);
        std::vector<PersonRegion> regions;
        std::vector<BBox> boxes;
        int id = 1;
        for (const auto& d : sim::emitDetections(s, seq))
            if (d.kind == DetectionKind::Body) {
                regions.push_back({id++, d.bbox, std::nullopt, {}});
                boxes.push_back(d.bbox);
            }
        if (s1.warmedUp() && !regions.empty()) {
            auto a = alignPair(fp.visual, fp.thermal, regions, s1, 5, 0);
            auto b = alignPair(fp.visual, fp.thermal, regions, s2, 5, 2);
            ASSERT_EQ(a.persons.size(), b.persons.size());
            for (const auto& [pid, pa] : a.persons) {
                const auto& pb = b.persons.at(pid);
                EXPECT_EQ(pa.dynamic, pb.dynamic);
                EXPECT_EQ(pa.homography.h, pb.homography.h);
                EXPECT_EQ(pa.distance, pb.distance);
            }
        }
        s1.update(fp.visual, fp.thermal, boxes);
        s2.update(fp.visual, fp.thermal, boxes);
    }
}
