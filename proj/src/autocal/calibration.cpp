#include "freeflow/autocal/calibration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ff::autocal {

void CalibConfig::validate() const {
    if (!(k_p > 0.0 && k_p < 2.0)) throw std::invalid_argument("calibration: k_p must lie in (0, 2)");
    if (!(settling_period > 0.0)) throw std::invalid_argument("calibration: settling period must be positive");
    if (!(error_threshold >= 0.0)) throw std::invalid_argument("calibration: error threshold must be non-negative");
    if (!std::isfinite(reference_temp)) throw std::invalid_argument("calibration: reference must be finite");
}

double monitorBlackBody(const ThermalGrid& frame, const CalibState& state) {
    const BBox& r = state.config.roi;
    if (r.x() < 0 || r.y() < 0 || r.right() > frame.width() || r.bottom() > frame.height())
        throw std::out_of_range("black-body roi lies outside the " + std::to_string(frame.width()) + "x" +
                                std::to_string(frame.height()) + " thermal frame");
    PixelRect px = PixelRect::covering(r, frame.width(), frame.height());
    if (px.empty()) throw std::out_of_range("black-body roi covers no pixels");
    double sum = 0.0;
    for (int y = px.y0; y < px.y1; ++y)
        for (int x = px.x0; x < px.x1; ++x) sum += frame(x, y);
    return sum / (static_cast<double>(px.width()) * px.height()) + state.correction_offset;
}

bool controllerStep(CalibState& s, double measured, double now) {
    const double error = measured - s.config.reference_temp;
    if (std::abs(error) <= s.config.error_threshold) return false;
    if (s.last_signal_time && now - *s.last_signal_time < s.config.settling_period) return false;
    s.correction_offset -= s.config.k_p * error;
    s.last_signal_time = now;
    return true;
}

CalibTrace runCalibrationLoop(int count, const ThermalSource& source, CalibState& state) {
    CalibTrace trace;
    trace.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        auto [t, frame] = source(i);
        if (!trace.empty() && !(t > trace.back().time))
            throw std::invalid_argument("calibration: timestamps must be strictly increasing");
        CalibSample s;
        s.time = t;
        s.measured = monitorBlackBody(frame, state);
        s.error = s.measured - state.config.reference_temp;
        s.signal = controllerStep(state, s.measured, t);
        s.offset_after = state.correction_offset;
        trace.push_back(s);
    }
    return trace;
}

}  // namespace ff::autocal
