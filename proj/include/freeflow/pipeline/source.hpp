#pragma once

#include <memory>
#include <vector>

#include "freeflow/sim/dataset.hpp"

namespace ff::pipeline {

/// One synchronized frame pair with the detector output for it.
struct Frame {
    sim::FramePair pair;
    std::vector<Detection> detections;
};

/// Random-access frame provider. frame() must be safe to call from a worker thread.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual int frameCount() const = 0;
    virtual sim::CameraRig geometry() const = 0;
    virtual Frame frame(int seq) const = 0;
    /// Per-frame truth, possibly empty (then no accuracy metrics are produced).
    virtual const std::vector<sim::GroundTruthRow>& groundTruth() const = 0;
};

/// Frames read from a dataset directory.
class DatasetSource : public FrameSource {
public:
    explicit DatasetSource(sim::Dataset dataset) : ds_(std::move(dataset)) {}
    int frameCount() const override { return ds_.frameCount(); }
    sim::CameraRig geometry() const override { return ds_.scenario.geometry; }
    Frame frame(int seq) const override;
    const std::vector<sim::GroundTruthRow>& groundTruth() const override { return ds_.groundtruth; }
    const sim::Dataset& dataset() const { return ds_; }

private:
    sim::Dataset ds_;
};

/// Frames rendered on demand from a scenario, without touching the disk.
class ScenarioSource : public FrameSource {
public:
    explicit ScenarioSource(sim::Scenario scenario);
    int frameCount() const override { return scenario_.frameCount(); }
    sim::CameraRig geometry() const override { return scenario_.geometry; }
    Frame frame(int seq) const override;
    const std::vector<sim::GroundTruthRow>& groundTruth() const override { return truth_; }
    const sim::Scenario& scenario() const { return scenario_; }

private:
    sim::Scenario scenario_;
    std::vector<sim::GroundTruthRow> truth_;
};

/// Frames held in memory; used to time the pipeline without rendering or disk I/O.
class MemorySource : public FrameSource {
public:
    /// Materializes every frame of `other`.
    explicit MemorySource(const FrameSource& other);
    int frameCount() const override { return static_cast<int>(frames_.size()); }
    sim::CameraRig geometry() const override { return geometry_; }
    Frame frame(int seq) const override { return frames_.at(static_cast<std::size_t>(seq)); }
    const std::vector<sim::GroundTruthRow>& groundTruth() const override { return truth_; }

private:
    sim::CameraRig geometry_;
    std::vector<Frame> frames_;
    std::vector<sim::GroundTruthRow> truth_;
};

}  // namespace ff::pipeline
