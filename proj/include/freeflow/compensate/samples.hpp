#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "freeflow/compensate/mlp.hpp"

namespace ff::compensate {

/// Writes distance_m,measured_c,reference_c.
void writeSamplesCsv(const std::filesystem::path& path, std::span<const Sample> samples);

/// Reads training samples from a CSV with a header row. Columns are located by name:
/// distance from `distance_m`; measured from `measured_c` or `raw_c`; truth from `reference_c`,
/// `truth_c` or `core_temp_c`. Throws DataError on I/O or format problems.
std::vector<Sample> readSamplesCsv(const std::filesystem::path& path);

}  // namespace ff::compensate
