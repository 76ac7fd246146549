#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "freeflow/domain.hpp"

namespace ff::autocal {

struct CalibConfig {
    BBox roi{300.0, 8.0, 16.0, 16.0};  ///< black body, thermal pixels
    double reference_temp = 35.0;
    double k_p = 0.5;
    double settling_period = 5.0;  ///< seconds between control signals
    double error_threshold = 0.3;  ///< deadband, °C

    /// Throws std::invalid_argument unless 0 < k_p < 2, settling_period > 0, threshold >= 0.
    void validate() const;
};

/// Proportional controller that drives one additive offset applied to all thermal readings.
struct CalibState {
    CalibConfig config;
    double correction_offset = 0.0;
    std::optional<double> last_signal_time;

    CalibState() = default;
    explicit CalibState(const CalibConfig& c) : config(c) { c.validate(); }
};

/// Mean of the thermal pixels under the black-body ROI plus the current offset.
/// Throws std::out_of_range when the ROI is not fully inside the frame.
double monitorBlackBody(const ThermalGrid& frame, const CalibState& state);

/// error = measured - reference. Outside the deadband, and once the settling period since the last
/// signal has passed, offset -= k_p * error. Returns true when a signal was issued.
bool controllerStep(CalibState& state, double measured, double now);

struct CalibSample {
    double time = 0.0;
    double measured = 0.0;      ///< black-body reading with the offset in force at that frame
    double error = 0.0;
    double offset_after = 0.0;
    bool signal = false;
};

using CalibTrace = std::vector<CalibSample>;

/// Frame source: returns (timestamp, thermal frame) for index i in [0, count).
using ThermalSource = std::function<std::pair<double, ThermalGrid>(int)>;

/// Monitors and steps the controller on every frame. Throws std::invalid_argument when
/// timestamps are not strictly increasing.
CalibTrace runCalibrationLoop(int count, const ThermalSource& source, CalibState& state);

}  // namespace ff::autocal
