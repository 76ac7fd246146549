#pragma once

#include <string>
#include <vector>

#include "freeflow/sim/scenario.hpp"

namespace ff::test {

inline AppearanceVector appearance(int k, int dim = 32) {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.05);
    v[static_cast<std::size_t>(k % dim)] = 1.0;
    return AppearanceVector(v);
}

inline sim::PersonSpec walker(const std::string& id, int k, double core, std::vector<sim::Waypoint> path,
                              sim::Accessories acc = {}) {
    sim::PersonSpec p;
    p.id = id;
    p.core_temp = core;
    p.stature = 1.70;
    p.trajectory = std::move(path);
    p.accessories = acc;
    p.appearance = appearance(k);
    return p;
}

/// Noise-free scene with the given people.
inline sim::Scenario quietScene(std::vector<sim::PersonSpec> people, double duration) {
    sim::Scenario s;
    s.people = std::move(people);
    s.duration = duration;
    s.thermal_noise_sigma = 0.0;
    s.detection_noise = sim::DetectionNoise::none();
    s.detection_noise.occlusion = false;
    return s;
}

}  // namespace ff::test
