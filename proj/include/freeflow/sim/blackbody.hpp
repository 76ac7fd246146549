#pragma once

#include <cstdint>
#include <vector>

namespace ff::sim {

/// A reference source at known temperature read through the attenuation model.
struct BlackBodyReading {
    double distance = 0.0;   ///< meters
    double measured = 0.0;   ///< °C, as read by the thermal sensor
    double reference = 0.0;  ///< °C, source set point
};

struct SweepConfig {
    int samples = 1000;
    double distance_min = 0.5;
    double distance_max = 4.5;
    double reference_min = 34.0;
    double reference_max = 41.0;
    double ambient_temp = 22.0;
    double attenuation_kappa = 0.05;
    double noise_sigma = 0.1;
    int pixels = 1;  ///< reading = max over this many noisy pixels

    void validate() const;
};

/// Uniformly sampled (distance, set point) pairs; deterministic in `seed`.
std::vector<BlackBodyReading> blackBodySweep(const SweepConfig& config, std::uint64_t seed);

}  // namespace ff::sim
