#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "freeflow/errors.hpp"
#include "freeflow/sim/detections.hpp"
#include "freeflow/sim/render.hpp"
#include "freeflow/sim/scenario.hpp"

namespace ff::sim {

// Directory layout:
//   scenario.json                 full scenario including the seed
//   frames/visual_%06d.pgm        binary 8-bit PGM
//   frames/thermal_%06d.bin       "W H\n" then little-endian float32 °C, row-major
//   detections.jsonl              one detection per line
//   groundtruth.csv               frame,person_id,core_temp_c,distance_m,visible

struct Dataset {
    std::filesystem::path dir;
    Scenario scenario;
    std::vector<std::vector<Detection>> detections;  ///< indexed by frame seq
    std::vector<GroundTruthRow> groundtruth;

    int frameCount() const { return scenario.frameCount(); }
    /// Reads frame `seq` from disk. Throws DataError on I/O or format problems.
    FramePair loadFrame(int seq) const;
};

void writeDataset(const Scenario& scenario, const std::filesystem::path& dir);
Dataset readDataset(const std::filesystem::path& dir);

std::filesystem::path visualFramePath(const std::filesystem::path& dir, int seq);
std::filesystem::path thermalFramePath(const std::filesystem::path& dir, int seq);

void writePgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage readPgm(const std::filesystem::path& path);
/// Binary PPM from three equally sized channels.
void writePpm(const std::filesystem::path& path, const Image<std::uint8_t>& r, const Image<std::uint8_t>& g,
              const Image<std::uint8_t>& b);
void writeThermal(const std::filesystem::path& path, const ThermalGrid& grid);
ThermalGrid readThermal(const std::filesystem::path& path);

nlohmann::json toJson(const Scenario& s);
Scenario scenarioFromJson(const nlohmann::json& j);
nlohmann::json toJson(const Detection& d);
Detection detectionFromJson(const nlohmann::json& j);
/// Reads generator knobs; absent keys keep their defaults.
GeneratorConfig generatorConfigFromJson(const nlohmann::json& j);
nlohmann::json toJson(const GeneratorConfig& c);

void writeGroundTruthCsv(const std::filesystem::path& path, const std::vector<GroundTruthRow>& rows);
std::vector<GroundTruthRow> readGroundTruthCsv(const std::filesystem::path& path);

}  // namespace ff::sim
