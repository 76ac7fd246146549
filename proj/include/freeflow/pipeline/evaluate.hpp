#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeflow/fever/screening.hpp"
#include "freeflow/sim/detections.hpp"

namespace ff::pipeline {

/// An alert with the ground-truth person it was attributed to.
struct LabeledAlert {
    fever::Alert alert;
    std::string truth_id;
};

struct Metrics {
    int tp = 0, fp = 0, tn = 0, fn = 0;
    double sensitivity = 1.0;
    double specificity = 1.0;
    bool vacuous_sensitivity = false;  ///< no febrile people: sensitivity reported as 1.0
    bool vacuous_specificity = false;
};

class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ground-truth label per person: febrile when the maximum core temperature over visible
/// frames reaches the threshold. People never visible are not counted.
std::map<std::string, bool> febrileLabels(std::span<const sim::GroundTruthRow> truth, double threshold);

/// Per-person confusion counts. Throws EvaluationError when an alert names a person missing from
/// the ground truth.
Metrics evaluate(std::span<const LabeledAlert> alerts, std::span<const sim::GroundTruthRow> truth, double threshold);

/// Sensitivity and specificity from raw counts (vacuous cases reported as 1.0 and flagged).
Metrics fromCounts(int tp, int fp, int tn, int fn);

/// Confusion counts and rates: tp, fp, tn, fn, sensitivity, specificity, vacuous_sensitivity.
nlohmann::json toJson(const Metrics& m);
nlohmann::json toJson(const LabeledAlert& a);
LabeledAlert labeledAlertFromJson(const nlohmann::json& j);
/// One alert per line. Throws DataError naming the file on I/O or parse errors.
std::vector<LabeledAlert> readAlertsJsonl(const std::filesystem::path& path);
void writeAlertsJsonl(const std::filesystem::path& path, std::span<const LabeledAlert> alerts);

}  // namespace ff::pipeline
