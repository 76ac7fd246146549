#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "freeflow/sim/detections.hpp"
#include "freeflow/track/tracker.hpp"
#include "id_audit.hpp"
#include "scenes.hpp"

using namespace ff;
using namespace ff::track;

namespace {

Detection det(DetectionKind kind, BBox box, AppearanceVector app = {}) {
    Detection d;
    d.kind = kind;
    d.bbox = box;
    d.appearance = std::move(app);
    return d;
}

// Unit vector with cosine `c` against e_0.
AppearanceVector tilted(double c, int dim = 8) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[0] = c;
    v[1] = std::sqrt(1.0 - c * c);
    return AppearanceVector(v);
}

AppearanceVector axis(int k, int dim = 8) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(k)] = 1.0;
    return AppearanceVector(v);
}

void reserveIds(TrackCache& cache, int upto) {
    while (cache.peekNextId() <= upto) cache.newId();
}

}  // namespace

TEST(TrackConfig, Validation) {
    TrackConfig{}.validate();
    EXPECT_THROW((TrackConfig{0.0, 0.7, 0.8, 10}.validate()), std::invalid_argument);
    EXPECT_THROW((TrackConfig{0.3, 1.2, 0.8, 10}.validate()), std::invalid_argument);
    EXPECT_THROW((TrackConfig{0.3, 0.7, 0.8, 0}.validate()), std::invalid_argument);
}

TEST(AssignIds, BodyReusesCachedId) {
    TrackCache cache;
    BBox b0(100, 100, 100, 200);
    auto first = std::vector{det(DetectionKind::Body, b0, axis(0))};
    EXPECT_EQ(assignIds(first, cache, {}, 0.0), std::vector<int>{1});

    // shifted so IoU ~0.9, appearance cosine 0.95
    BBox b1(105, 100, 100, 200);
    EXPECT_NEAR(iou(b0, b1), 0.905, 1e-3);
    auto second = std::vector{det(DetectionKind::Body, b1, tilted(0.95))};
    EXPECT_EQ(assignIds(second, cache, {}, 0.125), std::vector<int>{1});
    EXPECT_EQ(cache.find(1)->body_box, b1);
    EXPECT_DOUBLE_EQ(cache.find(1)->last_seen, 0.125);
}

TEST(AssignIds, EitherThresholdFailingGivesNewId) {
    TrackCache cache;
    assignIds(std::vector{det(DetectionKind::Body, BBox(100, 100, 100, 200), axis(0))}, cache, {}, 0.0);
    auto far = std::vector{det(DetectionKind::Body, BBox(400, 100, 100, 200), axis(0))};
    EXPECT_EQ(assignIds(far, cache, {}, 0.1), std::vector<int>{2});
    auto unlike = std::vector{det(DetectionKind::Body, BBox(100, 100, 100, 200), tilted(0.5))};
    EXPECT_EQ(assignIds(unlike, cache, {}, 0.2), std::vector<int>{3});
}

TEST(AssignIds, FaceOverridesBodyId) {
    TrackCache cache;
    reserveIds(cache, 7);
    BBox body(300, 200, 120, 300);
    auto& p3 = cache.persons()[3];
    p3.id = 3;
    p3.face_appearance = axis(0);
    p3.face_box = BBox(20, 20, 30, 30);
    auto& p7 = cache.persons()[7];
    p7.id = 7;
    p7.body_box = body;
    p7.body_appearance = axis(4);

    BBox face(340, 210, 40, 45);
    auto dets = std::vector{det(DetectionKind::Body, body, axis(4)), det(DetectionKind::Face, face, tilted(0.9))};
    auto ids = assignIds(dets, cache, {}, 1.0);
    EXPECT_EQ(ids, (std::vector<int>{3, 3}));
    EXPECT_EQ(cache.find(3)->body_box, body);
}

TEST(AssignIds, UnmatchedFaceInheritsBody) {
    TrackCache cache;
    BBox body(300, 200, 120, 300), face(340, 210, 40, 45), head(330, 200, 60, 70);
    auto dets = std::vector{det(DetectionKind::Body, body, axis(1)), det(DetectionKind::Face, face, axis(2)),
                            det(DetectionKind::Head, head), det(DetectionKind::Eye, BBox(350, 225, 8, 5))};
    EXPECT_EQ(assignIds(dets, cache, {}, 0.0), (std::vector<int>{1, 1, 1, 1}));
}

TEST(AssignIds, LoneHeadGetsFreshId) {
    TrackCache cache;
    reserveIds(cache, 4);
    auto ids = assignIds(std::vector{det(DetectionKind::Head, BBox(10, 10, 30, 30))}, cache, {}, 0.0);
    EXPECT_EQ(ids, std::vector<int>{5});
    EXPECT_FALSE(cache.find(5)->face_appearance.has_value());
}

TEST(AssignIds, LoneEyeStaysUntracked) {
    TrackCache cache;
    auto ids = assignIds(std::vector{det(DetectionKind::Eye, BBox(10, 10, 8, 5))}, cache, {}, 0.0);
    EXPECT_EQ(ids, std::vector<int>{kUntracked});
    EXPECT_EQ(cache.size(), 0u);
}

TEST(AssignIds, HeadPrefersFaceOverBody) {
    TrackCache cache;
    reserveIds(cache, 2);
    cache.persons()[2].id = 2;
    cache.persons()[2].face_appearance = axis(3);
    BBox body(300, 200, 120, 300);
    // face and head sit outside the body so the face cannot rewrite the body ID
    auto dets = std::vector{det(DetectionKind::Body, body, axis(5)),
                            det(DetectionKind::Face, BBox(600, 100, 40, 40), axis(3)),
                            det(DetectionKind::Head, BBox(590, 90, 60, 60))};
    auto ids = assignIds(dets, cache, {}, 0.0);
    EXPECT_EQ(ids[1], 2);
    EXPECT_EQ(ids[2], 2);
    EXPECT_NE(ids[0], 2);
}

TEST(AssignIds, NoCollisionWhenFaceStealsId) {
    TrackCache cache;
    BBox a(100, 100, 100, 250), b(400, 100, 100, 250);
    assignIds(std::vector{det(DetectionKind::Body, a, axis(0)), det(DetectionKind::Face, BBox(130, 110, 40, 40), axis(6))},
              cache, {}, 0.0);
    // person 1's face now appears inside the other body while person 1's body is still matched
    auto dets = std::vector{det(DetectionKind::Body, a, axis(0)), det(DetectionKind::Body, b, axis(1)),
                            det(DetectionKind::Face, BBox(430, 110, 40, 40), axis(6))};
    auto ids = assignIds(dets, cache, {}, 0.1);
    EXPECT_EQ(ids[2], 1);
    EXPECT_EQ(ids[1], 1);
    EXPECT_NE(ids[0], 1);
}

TEST(ExpireStale, TtlBoundary) {
    TrackCache cache;
    assignIds(std::vector{det(DetectionKind::Head, BBox(0, 0, 10, 10))}, cache, {}, 0.0);
    assignIds(std::vector{det(DetectionKind::Head, BBox(50, 0, 10, 10))}, cache, {}, 2.0);
    EXPECT_EQ(expireStale(cache, 11.0, {}), std::vector<int>{1});
    EXPECT_NE(cache.find(2), nullptr);
    EXPECT_TRUE(expireStale(cache, 11.0, {}).empty());
}

TEST(ExpireStale, EmptyCache) {
    TrackCache cache;
    EXPECT_TRUE(expireStale(cache, 100.0, {}).empty());
}

TEST(ExpireStale, AscendingOrder) {
    TrackCache cache;
    for (int k = 0; k < 5; ++k)
        assignIds(std::vector{det(DetectionKind::Head, BBox(20.0 * k, 0, 10, 10))}, cache, {}, 0.0);
    EXPECT_EQ(expireStale(cache, 20.0, {}), (std::vector<int>{1, 2, 3, 4, 5}));
}

namespace {

void expectNoSwitches(const ff::test::IdAudit& audit, std::size_t people) {
    EXPECT_EQ(audit.ids_of.size(), people);
    for (const auto& [person, ids] : audit.ids_of) EXPECT_EQ(ids.size(), 1u) << person;
    for (const auto& [id, owners] : audit.people_of) EXPECT_EQ(owners.size(), 1u) << "id " << id;
}

}  // namespace

// A steady stream of walkers, one transit at a time, each keeps one ID from entry to exit.
TEST(Tracking, NoIdSwitchesOnSequentialTransits) {
    sim::GeneratorConfig g;
    g.people = 30;
    g.febrile = 2;
    g.arrival_interval = 5.0;
    g.arrival_jitter = 0.0;
    auto audit = ff::test::auditIds(sim::generateScenario(g, 11));
    ASSERT_EQ(audit.overlapping_frames, 0);
    expectNoSwitches(audit, 30);
}

// Several people in view at once, in separate lanes so nobody occludes anybody.
TEST(Tracking, NoIdSwitchesWithConcurrentLanes) {
    using ff::test::walker;
    auto s = ff::test::quietScene({walker("A", 0, 36.8, {{0.5, -0.9, 5.0}, {4.5, -0.9, 0.8}}),
                                   walker("B", 1, 36.6, {{0.5, 0.9, 5.0}, {4.5, 0.9, 0.8}}),
                                   walker("C", 2, 38.9, {{5.0, -0.9, 5.0}, {9.0, -0.9, 0.8}}),
                                   walker("D", 3, 37.0, {{5.5, 0.9, 5.0}, {9.5, 0.9, 0.8}}),
                                   walker("E", 4, 36.9, {{10.0, 0.0, 5.0}, {14.0, 0.0, 0.8}})},
                                  15.0);
    auto audit = ff::test::auditIds(s);
    ASSERT_EQ(audit.overlapping_frames, 0);
    expectNoSwitches(audit, 5);
}

TEST(Tracking, CacheBoundedAfterExpiry) {
    sim::GeneratorConfig g;
    g.people = 15;
    g.febrile = 0;
    g.arrival_interval = 5.0;
    g.arrival_jitter = 0.0;
    auto s = sim::generateScenario(g, 3);
    auto noise = sim::DetectionNoise::none();
    noise.occlusion = false;
    TrackCache cache;
    TrackConfig cfg;
    cfg.ttl = 2.0;
    std::map<std::string, double> last_seen;
    for (int seq = 0; seq < s.frameCount(); ++seq) {
        double now = s.frameTime(seq);
        auto dets = sim::emitDetections(s, seq, noise);
        assignIds(dets, cache, cfg, now);
        for (const auto& d : dets) last_seen[d.truth_id] = now;
        expireStale(cache, now, cfg);
        std::size_t recent = 0;
        for (const auto& [p, t] : last_seen) recent += now - t <= cfg.ttl;
        EXPECT_LE(cache.size(), recent) << "frame " << seq;
        for (const auto& [id, p] : cache.persons()) EXPECT_LE(now - p.last_seen, cfg.ttl);
    }
}
