#include "freeflow/pipeline/source.hpp"

namespace ff::pipeline {

Frame DatasetSource::frame(int seq) const {
    Frame f;
    f.pair = ds_.loadFrame(seq);
    f.detections = ds_.detections.at(static_cast<std::size_t>(seq));
    return f;
}

ScenarioSource::ScenarioSource(sim::Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    for (int seq = 0; seq < scenario_.frameCount(); ++seq) {
        auto rows = sim::groundTruth(scenario_, seq);
        truth_.insert(truth_.end(), rows.begin(), rows.end());
    }
}

Frame ScenarioSource::frame(int seq) const {
    return {sim::renderFramePair(scenario_, seq), sim::emitDetections(scenario_, seq)};
}

MemorySource::MemorySource(const FrameSource& other) : geometry_(other.geometry()), truth_(other.groundTruth()) {
    frames_.reserve(static_cast<std::size_t>(other.frameCount()));
    for (int seq = 0; seq < other.frameCount(); ++seq) frames_.push_back(other.frame(seq));
}

}  // namespace ff::pipeline
