#include "freeflow/sim/blackbody.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "freeflow/sim/render.hpp"
#include "freeflow/sim/scenario.hpp"

namespace ff::sim {

void SweepConfig::validate() const {
    if (samples < 0) throw std::invalid_argument("sweep: samples must be non-negative");
    if (!(distance_min >= 0 && distance_min <= distance_max)) throw std::invalid_argument("sweep: bad distance range");
    if (!(reference_min <= reference_max)) throw std::invalid_argument("sweep: bad reference range");
    if (!(attenuation_kappa >= 0) || !(noise_sigma >= 0)) throw std::invalid_argument("sweep: negative kappa or noise");
    if (pixels < 1) throw std::invalid_argument("sweep: pixels must be at least 1");
}

std::vector<BlackBodyReading> blackBodySweep(const SweepConfig& c, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(streamSeed(seed, 5, 0));
    std::uniform_real_distribution<double> dist(c.distance_min, c.distance_max);
    std::uniform_real_distribution<double> ref(c.reference_min, c.reference_max);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<BlackBodyReading> out;
    out.reserve(static_cast<std::size_t>(c.samples));
    for (int i = 0; i < c.samples; ++i) {
        BlackBodyReading r;
        r.distance = dist(rng);
        r.reference = ref(rng);
        double clean = attenuatedTemp(r.reference, c.ambient_temp, c.attenuation_kappa, r.distance);
        double best = -1e300;
        for (int k = 0; k < c.pixels; ++k) best = std::max(best, clean + c.noise_sigma * noise(rng));
        r.measured = best;
        out.push_back(r);
    }
    return out;
}

}  // namespace ff::sim
