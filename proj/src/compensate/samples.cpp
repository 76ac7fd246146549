#include "freeflow/compensate/samples.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>

#include "freeflow/errors.hpp"

namespace ff::compensate {

namespace {

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<std::size_t> column(const std::vector<std::string>& header, std::initializer_list<const char*> names) {
    for (const char* n : names)
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == n) return i;
    return std::nullopt;
}

}  // namespace

void writeSamplesCsv(const std::filesystem::path& path, std::span<const Sample> samples) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "distance_m,measured_c,reference_c\n";
    char buf[96];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.distance, s.measured, s.truth);
        out << buf;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

std::vector<Sample> readSamplesCsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path.string());
    auto header = splitCsv(line);
    auto cd = column(header, {"distance_m"});
    auto cm = column(header, {"measured_c", "raw_c"});
    auto ct = column(header, {"reference_c", "truth_c", "core_temp_c"});
    if (!cd || !cm || !ct)
        throw DataError(path.string() + ": header needs distance_m, measured_c|raw_c and reference_c|truth_c|core_temp_c");

    std::vector<Sample> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = splitCsv(line);
        if (cells.size() != header.size())
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(header.size()) + " columns");
        try {
            out.push_back({std::stod(cells[*cd]), std::stod(cells[*cm]), std::stod(cells[*ct])});
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": unparsable value");
        }
    }
    return out;
}

}  // namespace ff::compensate
