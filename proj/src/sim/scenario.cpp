#include "freeflow/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ff::sim {

Point2 CameraRig::projectVisual(double x, double y, double z) const {
    return {0.5 * visual_width + visual_focal * x / z, 0.5 * visual_height + visual_focal * y / z};
}

Point2 CameraRig::projectThermal(double x, double y, double z) const {
    return {0.5 * thermal_width + thermal_focal * (x - baseline) / z, 0.5 * thermal_height + thermal_focal * y / z};
}

void CameraRig::validate() const {
    if (visual_width <= 0 || visual_height <= 0 || thermal_width <= 0 || thermal_height <= 0)
        throw std::invalid_argument("camera rig: resolutions must be positive");
    if (!(visual_focal > 0.0) || !(thermal_focal > 0.0)) throw std::invalid_argument("camera rig: focal must be positive");
    if (!(baseline > 0.0)) throw std::invalid_argument("camera rig: baseline must be positive");
}

Waypoint PersonSpec::positionAt(double t) const {
    if (trajectory.empty()) throw std::logic_error("person has no trajectory");
    if (t <= trajectory.front().t) return trajectory.front();
    if (t >= trajectory.back().t) return trajectory.back();
    auto it = std::upper_bound(trajectory.begin(), trajectory.end(), t,
                               [](double v, const Waypoint& w) { return v < w.t; });
    const Waypoint& b = *it;
    const Waypoint& a = *(it - 1);
    const double u = (t - a.t) / (b.t - a.t);
    return {t, a.x + u * (b.x - a.x), a.z + u * (b.z - a.z)};
}

double DriftProfile::at(double t) const {
    double offset = 0.0;
    for (const auto& [start, value] : steps) {
        if (t >= start) offset = value;
        else break;
    }
    return offset;
}

int Scenario::frameCount() const { return static_cast<int>(std::floor(duration * frame_rate + 1e-9)) + 1; }

void Scenario::validate() const {
    if (!(frame_rate > 0.0)) throw std::invalid_argument("scenario: frame_rate must be positive");
    if (!(duration > 0.0)) throw std::invalid_argument("scenario: duration must be positive");
    geometry.validate();
    const auto& roi = black_body.roi;
    if (roi.x() < 0 || roi.y() < 0 || roi.right() > geometry.thermal_width || roi.bottom() > geometry.thermal_height)
        throw std::invalid_argument("scenario: black body roi outside thermal frame");
    for (std::size_t i = 1; i < drift.steps.size(); ++i)
        if (drift.steps[i].first < drift.steps[i - 1].first) throw std::invalid_argument("scenario: drift steps unsorted");
    for (const auto& p : people) {
        if (p.core_temp < 30.0 || p.core_temp > 45.0) throw std::invalid_argument("scenario: core_temp out of [30, 45] for " + p.id);
        if (p.trajectory.size() < 2) throw std::invalid_argument("scenario: trajectory needs two waypoints for " + p.id);
        for (std::size_t i = 0; i < p.trajectory.size(); ++i) {
            const auto& w = p.trajectory[i];
            if (w.z < 0.3 || w.z > 12.0 || std::abs(w.x) > 3.0)
                throw std::invalid_argument("scenario: trajectory leaves scene bounds for " + p.id);
            if (i > 0 && !(w.t > p.trajectory[i - 1].t))
                throw std::invalid_argument("scenario: trajectory times must increase for " + p.id);
        }
    }
}

void GeneratorConfig::validate() const {
    if (people < 0) throw std::invalid_argument("generator: people must be >= 0");
    if (febrile < 0 || febrile > people) throw std::invalid_argument("generator: febrile must be within [0, people]");
    if (!(febrile_min <= febrile_max) || !(normal_min <= normal_max)) throw std::invalid_argument("generator: empty temperature range");
    if (febrile_min < 30.0 || febrile_max > 45.0 || normal_min < 30.0 || normal_max > 45.0)
        throw std::invalid_argument("generator: temperatures must lie in [30, 45]");
    if (!(speed_min > 0.0) || speed_max < speed_min) throw std::invalid_argument("generator: bad speed range");
    if (!(start_z > end_z) || end_z < 0.3) throw std::invalid_argument("generator: start_z must exceed end_z >= 0.3");
    if (!(arrival_interval > 0.0) || arrival_jitter < 0.0 || arrival_jitter >= arrival_interval)
        throw std::invalid_argument("generator: bad arrival timing");
    if (appearance_dim <= 0) throw std::invalid_argument("generator: appearance_dim must be positive");
    if (!(frame_rate > 0.0)) throw std::invalid_argument("generator: frame_rate must be positive");
    geometry.validate();
}

std::uint64_t streamSeed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    // splitmix64 finalizer over a mixed key
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1) + 0xBF58476D1CE4E5B9ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

AppearanceVector randomIdentity(std::mt19937_64& rng, int dim, const std::vector<PersonSpec>& existing) {
    std::normal_distribution<double> g(0.0, 1.0);
    AppearanceVector best;
    double best_worst = 2.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (double& x : v) x = g(rng);
        AppearanceVector cand(std::move(v));
        double worst = -1.0;
        for (const auto& p : existing) worst = std::max(worst, similarity(cand, p.appearance));
        if (worst < 0.5) return cand;
        if (worst < best_worst) {
            best_worst = worst;
            best = cand;
        }
    }
    return best;
}

}  // namespace

Scenario generateScenario(const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(streamSeed(seed, 0, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    Scenario s;
    s.frame_rate = cfg.frame_rate;
    s.geometry = cfg.geometry;
    s.ambient_temp = cfg.ambient_temp;
    s.attenuation_kappa = cfg.attenuation_kappa;
    s.thermal_noise_sigma = cfg.thermal_noise_sigma;
    s.drift = cfg.drift;
    s.black_body = cfg.black_body;
    s.detection_noise = cfg.detection_noise;
    s.rng_seed = seed;

    std::vector<int> order(static_cast<std::size_t>(cfg.people));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> febrile(order.size(), false);
    for (int i = 0; i < cfg.febrile; ++i) febrile[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

    double last_exit = cfg.warmup;
    for (int i = 0; i < cfg.people; ++i) {
        PersonSpec p;
        char id[16];
        std::snprintf(id, sizeof id, "P%03d", i + 1);
        p.id = id;
        p.core_temp = febrile[static_cast<std::size_t>(i)] ? uniform(cfg.febrile_min, cfg.febrile_max)
                                                           : uniform(cfg.normal_min, cfg.normal_max);
        p.stature = uniform(cfg.stature_min, cfg.stature_max);
        p.accessories.mask = unit(rng) < cfg.p_mask;
        p.accessories.glasses = unit(rng) < cfg.p_glasses;
        p.accessories.hat = unit(rng) < cfg.p_hat;
        const double enter = cfg.warmup + i * cfg.arrival_interval + uniform(0.0, cfg.arrival_jitter);
        const double speed = uniform(cfg.speed_min, cfg.speed_max);
        const double x0 = uniform(-cfg.lane_half_width, cfg.lane_half_width);
        const double x1 = uniform(-cfg.lane_half_width, cfg.lane_half_width);
        const double walk = (cfg.start_z - cfg.end_z) / speed;
        p.trajectory = {{enter, x0, cfg.start_z}, {enter + walk, x1, cfg.end_z}};
        p.appearance = randomIdentity(rng, cfg.appearance_dim, s.people);
        last_exit = std::max(last_exit, enter + walk);
        s.people.push_back(std::move(p));
    }
    s.duration = last_exit + cfg.tail;
    s.validate();
    return s;
}

}  // namespace ff::sim
