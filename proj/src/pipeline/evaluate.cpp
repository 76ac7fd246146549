#include "freeflow/pipeline/evaluate.hpp"

#include <fstream>
#include <map>
#include <set>

#include "freeflow/errors.hpp"

namespace ff::pipeline {

using nlohmann::json;

std::map<std::string, bool> febrileLabels(std::span<const sim::GroundTruthRow> truth, double threshold) {
    std::map<std::string, double> peak;
    for (const auto& r : truth) {
        if (!r.visible) continue;
        auto [it, fresh] = peak.emplace(r.person_id, r.core_temp_c);
        if (!fresh) it->second = std::max(it->second, r.core_temp_c);
    }
    std::map<std::string, bool> labels;
    for (const auto& [id, t] : peak) labels[id] = t >= threshold;
    return labels;
}

Metrics fromCounts(int tp, int fp, int tn, int fn) {
    Metrics m{tp, fp, tn, fn};
    m.vacuous_sensitivity = tp + fn == 0;
    m.sensitivity = m.vacuous_sensitivity ? 1.0 : static_cast<double>(tp) / (tp + fn);
    m.vacuous_specificity = tn + fp == 0;
    m.specificity = m.vacuous_specificity ? 1.0 : static_cast<double>(tn) / (tn + fp);
    return m;
}

Metrics evaluate(std::span<const LabeledAlert> alerts, std::span<const sim::GroundTruthRow> truth, double threshold) {
    auto labels = febrileLabels(truth, threshold);
    std::set<std::string> known;
    for (const auto& r : truth) known.insert(r.person_id);
    std::set<std::string> alerted;
    for (const auto& a : alerts) {
        if (!known.count(a.truth_id))
            throw EvaluationError("alert for person '" + a.truth_id + "' who is not in the ground truth");
        alerted.insert(a.truth_id);
    }
    int tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& [id, febrile] : labels) {
        bool hit = alerted.count(id) > 0;
        if (febrile)
            (hit ? tp : fn)++;
        else
            (hit ? fp : tn)++;
    }
    return fromCounts(tp, fp, tn, fn);
}

json toJson(const Metrics& m) {
    return json{{"tp", m.tp},
                {"fp", m.fp},
                {"tn", m.tn},
                {"fn", m.fn},
                {"sensitivity", m.sensitivity},
                {"specificity", m.specificity},
                {"vacuous_sensitivity", m.vacuous_sensitivity}};
}

json toJson(const LabeledAlert& a) {
    return json{{"frame", a.alert.frame_seq},
                {"person_id", a.alert.person_id},
                {"truth_id", a.truth_id},
                {"temp_c", a.alert.temp},
                {"priority", fever::toString(a.alert.priority)},
                {"reason", fever::toString(a.alert.reason)}};
}

LabeledAlert labeledAlertFromJson(const json& j) {
    LabeledAlert a;
    a.alert.frame_seq = j.at("frame").get<int>();
    a.alert.person_id = j.at("person_id").get<int>();
    a.truth_id = j.value("truth_id", std::string{});
    a.alert.temp = j.at("temp_c").get<double>();
    a.alert.priority = fever::priorityFromString(j.at("priority").get<std::string>());
    const auto reason = j.value("reason", std::string{"first"});
    a.alert.reason = reason == "delta"             ? fever::AlertReason::Delta
                     : reason == "higher_priority" ? fever::AlertReason::HigherPriority
                                                   : fever::AlertReason::First;
    return a;
}

std::vector<LabeledAlert> readAlertsJsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read alerts file " + path.string());
    std::vector<LabeledAlert> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(labeledAlertFromJson(json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void writeAlertsJsonl(const std::filesystem::path& path, std::span<const LabeledAlert> alerts) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& a : alerts) out << toJson(a).dump() << '\n';
}

}  // namespace ff::pipeline
